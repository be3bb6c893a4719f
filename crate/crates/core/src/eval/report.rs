use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{
    error_stats, height_error_counts, iou_bin_index, iou_binned_mae, match_buildings_with, mean_ci_t, pearson_r,
    rounded_percent_hundredths, BuildingMatch, ErrorStats, MetricCI, HISTOGRAM_LABELS,
};
use crate::error::{Error, Result};
use crate::geometry::{Footprint, DEFAULT_IOU_CELL};
use crate::heights::{building_heights_with, BuildingHeights, HeightConfig, HeightMeasure};
use crate::pointcloud::PointCloud;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightComparison {
    #[default]
    MatchedOnly,
    /// Unmatched references count with a predicted height and area of 0.
    AllReferences,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub measures: Vec<HeightMeasure>,
    pub heights: HeightConfig,
    pub comparison: HeightComparison,
    pub iou_cell: f64,
    pub confidence: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            measures: vec![HeightMeasure::Median, HeightMeasure::P90],
            heights: HeightConfig::default(),
            comparison: HeightComparison::MatchedOnly,
            iou_cell: DEFAULT_IOU_CELL,
            confidence: 0.95,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.measures.is_empty() {
            return Err(Error::Config("at least one height measure is required".into()));
        }
        if !(self.iou_cell > 0.0) || !self.iou_cell.is_finite() {
            return Err(Error::Config(format!("IoU cell must be positive, got {}", self.iou_cell)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        self.heights.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightPair {
    pub pred_height: f64,
    pub ref_height: f64,
    pub pred_wall_area: f64,
    pub ref_wall_area: f64,
}

impl HeightPair {
    pub fn height_error(&self) -> f64 {
        self.pred_height - self.ref_height
    }

    pub fn wall_area_error(&self) -> f64 {
        self.pred_wall_area - self.ref_wall_area
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildingRecord {
    pub pred_id: Option<String>,
    pub ref_id: Option<String>,
    pub iou: f64,
    pub pred_area: Option<f64>,
    pub ref_area: Option<f64>,
    pub per_measure: BTreeMap<HeightMeasure, HeightPair>,
}

impl BuildingRecord {
    pub fn area_error(&self) -> Option<f64> {
        match (self.pred_area, self.ref_area) {
            (Some(p), Some(r)) => Some(p - r),
            _ => None,
        }
    }

    fn counts(&self, comparison: HeightComparison) -> bool {
        self.ref_id.is_some() && (self.pred_id.is_some() || comparison == HeightComparison::AllReferences)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSummary {
    pub height: Option<ErrorStats>,
    pub wall_area: Option<ErrorStats>,
    /// Counts per height-error bin.
    pub histogram: [usize; 10],
    pub iou_binned_mae: Vec<(f64, f64, usize)>,
    /// Correlation of |height error| with |wall-area error|.
    pub wall_height_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub comparison: HeightComparison,
    pub matches: Vec<BuildingMatch>,
    pub records: Vec<BuildingRecord>,
    pub area: Option<ErrorStats>,
    pub iou_ci: Option<MetricCI>,
    pub measures: BTreeMap<HeightMeasure, MeasureSummary>,
    pub unmatched_preds: usize,
    pub unmatched_refs: usize,
    /// `(role:id, reason)` for buildings whose heights could not be measured.
    pub skipped: Vec<(String, String)>,
}

fn heights_for(
    fps: &[Footprint],
    pc: &PointCloud,
    cfg: &EvalConfig,
) -> Vec<std::result::Result<BuildingHeights, String>> {
    fps.par_iter()
        .map(|fp| building_heights_with(pc, fp, &cfg.measures, &cfg.heights).map_err(|e| e.to_string()))
        .collect()
}

fn pairs(pred: Option<&BuildingHeights>, rf: &BuildingHeights, pred_perim: f64, ref_perim: f64, measures: &[HeightMeasure]) -> BTreeMap<HeightMeasure, HeightPair> {
    measures
        .iter()
        .filter_map(|&m| {
            let r = rf.get(m)?;
            let p = match pred {
                Some(p) => p.get(m)?,
                None => 0.0,
            };
            Some((
                m,
                HeightPair {
                    pred_height: p,
                    ref_height: r,
                    pred_wall_area: pred_perim * p,
                    ref_wall_area: ref_perim * r,
                },
            ))
        })
        .collect()
}

/// Matches predictions to references, measures heights of both on the same
/// cloud and aggregates the per-building errors. Buildings whose heights
/// fail are listed in `skipped` and left out of the statistics.
pub fn evaluate(preds: &[Footprint], refs: &[Footprint], pc: &PointCloud, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let matches = match_buildings_with(preds, refs, cfg.iou_cell);
    let pred_h = heights_for(preds, pc, cfg);
    let ref_h = heights_for(refs, pc, cfg);
    let pred_idx: BTreeMap<&str, usize> = preds.iter().enumerate().map(|(i, f)| (f.id.as_str(), i)).collect();
    let ref_idx: BTreeMap<&str, usize> = refs.iter().enumerate().map(|(i, f)| (f.id.as_str(), i)).collect();

    let mut skipped = Vec::new();
    for (fp, h) in preds.iter().zip(&pred_h) {
        if let Err(e) = h {
            skipped.push((format!("pred:{}", fp.id), e.clone()));
        }
    }
    for (fp, h) in refs.iter().zip(&ref_h) {
        if let Err(e) = h {
            skipped.push((format!("ref:{}", fp.id), e.clone()));
        }
    }
    skipped.sort();

    let mut records = Vec::new();
    let mut matched_refs = std::collections::BTreeSet::new();
    for m in &matches {
        let pi = pred_idx[m.pred_id.as_str()];
        let pfp = &preds[pi];
        let mut rec = BuildingRecord {
            pred_id: Some(m.pred_id.clone()),
            ref_id: m.ref_id.clone(),
            iou: m.iou,
            pred_area: Some(pfp.area()),
            ref_area: None,
            per_measure: BTreeMap::new(),
        };
        if let Some(rid) = &m.ref_id {
            matched_refs.insert(rid.clone());
            let ri = ref_idx[rid.as_str()];
            rec.ref_area = Some(refs[ri].area());
            if let (Ok(ph), Ok(rh)) = (&pred_h[pi], &ref_h[ri]) {
                rec.per_measure = pairs(Some(ph), rh, pfp.perimeter(), refs[ri].perimeter(), &cfg.measures);
            }
        }
        records.push(rec);
    }
    let mut unmatched_refs = 0;
    for (ri, rfp) in refs.iter().enumerate() {
        if matched_refs.contains(&rfp.id) {
            continue;
        }
        unmatched_refs += 1;
        let all = cfg.comparison == HeightComparison::AllReferences;
        records.push(BuildingRecord {
            pred_id: None,
            ref_id: Some(rfp.id.clone()),
            iou: 0.0,
            pred_area: all.then_some(0.0),
            ref_area: Some(rfp.area()),
            per_measure: match (&ref_h[ri], all) {
                (Ok(rh), true) => pairs(None, rh, 0.0, rfp.perimeter(), &cfg.measures),
                _ => BTreeMap::new(),
            },
        });
    }
    let unmatched_preds = matches.iter().filter(|m| m.ref_id.is_none()).count();

    let counted: Vec<&BuildingRecord> = records.iter().filter(|r| r.counts(cfg.comparison)).collect();
    let (pa, ra): (Vec<f64>, Vec<f64>) = counted
        .iter()
        .filter_map(|r| Some((r.pred_area?, r.ref_area?)))
        .unzip();
    let area = error_stats(&pa, &ra).ok();
    let ious: Vec<f64> = matches.iter().filter(|m| m.ref_id.is_some()).map(|m| m.iou).collect();
    let iou_ci = mean_ci_t(&ious, cfg.confidence).ok();

    let mut measures = BTreeMap::new();
    for &m in &cfg.measures {
        let ps: Vec<(&BuildingRecord, &HeightPair)> =
            counted.iter().filter_map(|r| Some((*r, r.per_measure.get(&m)?))).collect();
        let est: Vec<f64> = ps.iter().map(|p| p.1.pred_height).collect();
        let rf: Vec<f64> = ps.iter().map(|p| p.1.ref_height).collect();
        let west: Vec<f64> = ps.iter().map(|p| p.1.pred_wall_area).collect();
        let wrf: Vec<f64> = ps.iter().map(|p| p.1.ref_wall_area).collect();
        let herr: Vec<f64> = ps.iter().map(|p| p.1.height_error()).collect();
        let abs_h: Vec<f64> = herr.iter().map(|e| e.abs()).collect();
        let abs_w: Vec<f64> = ps.iter().map(|p| p.1.wall_area_error().abs()).collect();
        let by_pred: BTreeMap<String, f64> = ps
            .iter()
            .filter_map(|(r, p)| Some((r.pred_id.clone()?, p.height_error())))
            .collect();
        let mut bin_n = [0usize; 10];
        for mt in &matches {
            if by_pred.contains_key(&mt.pred_id) {
                bin_n[iou_bin_index(mt.iou)] += 1;
            }
        }
        let binned = iou_binned_mae(&matches, &by_pred)
            .into_iter()
            .map(|(c, mae)| (c, mae, bin_n[iou_bin_index(c)]))
            .collect();
        measures.insert(
            m,
            MeasureSummary {
                height: error_stats(&est, &rf).ok(),
                wall_area: error_stats(&west, &wrf).ok(),
                histogram: height_error_counts(&herr),
                iou_binned_mae: binned,
                wall_height_r: pearson_r(&abs_h, &abs_w).ok().flatten(),
            },
        );
    }

    Ok(EvalReport {
        comparison: cfg.comparison,
        matches,
        records,
        area,
        iou_ci,
        measures,
        unmatched_preds,
        unmatched_refs,
        skipped,
    })
}

fn fixed(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.prec$}"))
}

fn output_path(prefix: &Path, name: &str) -> PathBuf {
    if prefix.is_dir() {
        return prefix.join(name);
    }
    let stem = prefix.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    prefix.with_file_name(format!("{stem}_{name}"))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_matches(r: &EvalReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "pred_id",
        "ref_id",
        "iou",
        "pred_area_m2",
        "ref_area_m2",
        "area_error_m2",
        "measure",
        "pred_height_m",
        "ref_height_m",
        "height_error_m",
        "wall_area_error_m2",
    ])?;
    for rec in &r.records {
        let head = [
            rec.pred_id.clone().unwrap_or_default(),
            rec.ref_id.clone().unwrap_or_default(),
            format!("{:.4}", rec.iou),
            fixed(rec.pred_area, 3),
            fixed(rec.ref_area, 3),
            fixed(rec.area_error(), 3),
        ];
        if rec.per_measure.is_empty() {
            let mut row = head.to_vec();
            row.extend(std::iter::repeat_n(String::new(), 5));
            w.write_record(&row)?;
        }
        for (m, p) in &rec.per_measure {
            let mut row = head.to_vec();
            row.extend([
                m.name().to_string(),
                format!("{:.3}", p.pred_height),
                format!("{:.3}", p.ref_height),
                format!("{:.3}", p.height_error()),
                format!("{:.3}", p.wall_area_error()),
            ]);
            w.write_record(&row)?;
        }
    }
    finish(w, path)
}

fn stats_row(quantity: &str, measure: &str, s: Option<&ErrorStats>, r: Option<f64>) -> Vec<String> {
    vec![
        quantity.to_string(),
        measure.to_string(),
        s.map_or(0, |s| s.n).to_string(),
        fixed(s.map(|s| s.rmse), 3),
        fixed(s.map(|s| s.mae), 3),
        fixed(s.and_then(|s| s.r2), 3),
        fixed(r, 2),
        s.map_or_else(|| "NA".to_string(), |s| s.to_string()),
    ]
}

fn write_stats(r: &EvalReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["quantity", "measure", "n", "rmse", "mae", "r2", "pearson_r", "summary"])?;
    w.write_record(stats_row("area", "", r.area.as_ref(), None))?;
    for (m, s) in &r.measures {
        w.write_record(stats_row("height", m.name(), s.height.as_ref(), None))?;
        w.write_record(stats_row("wall_area", m.name(), s.wall_area.as_ref(), s.wall_height_r))?;
    }
    let ci = r.iou_ci.as_ref();
    w.write_record([
        "iou".to_string(),
        String::new(),
        ci.map_or(0, |c| c.n).to_string(),
        "NA".into(),
        "NA".into(),
        "NA".into(),
        "NA".into(),
        ci.map_or_else(|| "NA".to_string(), |c| c.to_string()),
    ])?;
    w.write_record([
        "unmatched".to_string(),
        String::new(),
        (r.unmatched_preds + r.unmatched_refs).to_string(),
        "NA".into(),
        "NA".into(),
        "NA".into(),
        "NA".into(),
        format!("pred {} / ref {}", r.unmatched_preds, r.unmatched_refs),
    ])?;
    finish(w, path)
}

fn write_histogram(r: &EvalReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["measure", "bin", "count", "percent"])?;
    for (m, s) in &r.measures {
        if s.histogram.iter().sum::<usize>() == 0 {
            continue;
        }
        let pct = rounded_percent_hundredths(&s.histogram);
        for ((label, c), p) in HISTOGRAM_LABELS.iter().zip(s.histogram).zip(pct) {
            w.write_record([
                m.name().to_string(),
                label.to_string(),
                c.to_string(),
                format!("{}.{:02}", p / 100, p % 100),
            ])?;
        }
    }
    finish(w, path)
}

fn write_binned(r: &EvalReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["measure", "iou_bin_center", "n", "mae_m"])?;
    for (m, s) in &r.measures {
        for (c, mae, n) in &s.iou_binned_mae {
            w.write_record([m.name().to_string(), format!("{c:.2}"), n.to_string(), format!("{mae:.3}")])?;
        }
    }
    finish(w, path)
}

const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
const W: f64 = 480.0;
const H: f64 = 360.0;
const M: f64 = 50.0;

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        M + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * M)
    }

    fn py(&self, y: f64) -> f64 {
        H - M - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * M)
    }
}

fn nice_max(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|k| k * mag).find(|&t| t >= v).unwrap_or(10.0 * mag)
}

fn svg_open(title: &str, xlabel: &str, ylabel: &str, ax: &Axes) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{M:.1} {:.1}H{:.1}M{M:.1} {:.1}V{M:.1}" stroke="black" fill="none"/>"#,
        H - M,
        W - M,
        H - M
    );
    for k in 0..=4 {
        let fx = ax.x0 + (ax.x1 - ax.x0) * k as f64 / 4.0;
        let fy = ax.y0 + (ax.y1 - ax.y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.2}</text>"#,
            ax.px(fx),
            H - M + 15.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.2}</text>"#,
            M - 5.0,
            ax.py(fy) + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    s
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, n) in names.iter().enumerate() {
        let y = M + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{n}</text>"#,
            W - M - 70.0,
            y - 9.0,
            COLORS[i % COLORS.len()],
            W - M - 55.0,
            y
        );
    }
}

fn scatter_svg(title: &str, xlabel: &str, ylabel: &str, series: &[(&str, Vec<(f64, f64)>)], x_fixed: Option<(f64, f64)>, diagonal: bool) -> String {
    let all = series.iter().flat_map(|s| s.1.iter());
    let (mut xmax, mut ymax) = (0.0f64, 0.0f64);
    for &(x, y) in all {
        xmax = xmax.max(x);
        ymax = ymax.max(y);
    }
    let (x0, x1) = x_fixed.unwrap_or((0.0, nice_max(xmax)));
    let y1 = if diagonal { nice_max(xmax.max(ymax)) } else { nice_max(ymax) };
    let ax = Axes { x0, x1: if diagonal { y1 } else { x1 }, y0: 0.0, y1 };
    let mut s = svg_open(title, xlabel, ylabel, &ax);
    if diagonal {
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888" stroke-dasharray="4 3"/>"##,
            ax.px(0.0),
            ax.py(0.0),
            ax.px(ax.x1),
            ax.py(ax.x1)
        );
    }
    for (i, (_, pts)) in series.iter().enumerate() {
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.7"/>"#,
                ax.px(x),
                ax.py(y),
                COLORS[i % COLORS.len()]
            );
        }
    }
    let names: Vec<&str> = series.iter().map(|s| s.0).collect();
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}

fn histogram_svg(r: &EvalReport) -> String {
    let series: Vec<(&str, Vec<f64>)> = r
        .measures
        .iter()
        .filter(|(_, s)| s.histogram.iter().sum::<usize>() > 0)
        .map(|(m, s)| {
            let n = s.histogram.iter().sum::<usize>() as f64;
            (m.name(), s.histogram.iter().map(|&c| 100.0 * c as f64 / n).collect())
        })
        .collect();
    let ymax = series.iter().flat_map(|s| s.1.iter().copied()).fold(0.0, f64::max);
    let ax = Axes { x0: 0.0, x1: 10.0, y0: 0.0, y1: nice_max(ymax) };
    let mut s = svg_open("Height error frequency", "", "percent of buildings", &ax);
    // replace numeric x ticks with bin labels
    s = s
        .lines()
        .filter(|l| !(l.contains(&format!(r#"y="{:.1}" text-anchor="middle""#, H - M + 15.0))))
        .collect::<Vec<_>>()
        .join("\n");
    s.push('\n');
    let slot = (W - 2.0 * M) / 10.0;
    let bw = slot * 0.8 / series.len().max(1) as f64;
    for (b, label) in HISTOGRAM_LABELS.iter().enumerate() {
        let cx = M + slot * (b as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="end" font-size="8" transform="rotate(-35 {cx:.1} {:.1})">{}</text>"#,
            H - M + 12.0,
            H - M + 12.0,
            label.replace('<', "&lt;")
        );
        for (i, (_, pct)) in series.iter().enumerate() {
            let x = M + slot * b as f64 + slot * 0.1 + bw * i as f64;
            let y = ax.py(pct[b]);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{bw:.2}" height="{:.2}" fill="{}"/>"#,
                ax.py(0.0) - y,
                COLORS[i % COLORS.len()]
            );
        }
    }
    let names: Vec<&str> = series.iter().map(|s| s.0).collect();
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes four CSV tables and three SVG plots. `prefix` is either an
/// existing directory or a path whose file name prefixes every output.
pub fn write_eval_report(r: &EvalReport, prefix: &Path) -> Result<Vec<PathBuf>> {
    let p = |n: &str| output_path(prefix, n);
    let files = [
        p("matches.csv"),
        p("error_stats.csv"),
        p("height_histogram.csv"),
        p("iou_binned_mae.csv"),
        p("height_scatter.svg"),
        p("iou_error.svg"),
        p("height_histogram.svg"),
    ];
    write_matches(r, &files[0])?;
    write_stats(r, &files[1])?;
    write_histogram(r, &files[2])?;
    write_binned(r, &files[3])?;

    let per_measure = |f: &dyn Fn(&BuildingRecord, &HeightPair) -> (f64, f64)| -> Vec<(&str, Vec<(f64, f64)>)> {
        r.measures
            .keys()
            .map(|m| {
                let pts = r
                    .records
                    .iter()
                    .filter(|rec| rec.counts(r.comparison))
                    .filter_map(|rec| rec.per_measure.get(m).map(|p| f(rec, p)))
                    .collect();
                (m.name(), pts)
            })
            .collect()
    };
    let heights = per_measure(&|_, p| (p.ref_height, p.pred_height));
    write_text(
        &files[4],
        &scatter_svg("Predicted vs reference height", "reference height (m)", "predicted height (m)", &heights, None, true),
    )?;
    let errs = per_measure(&|rec, p| (rec.iou, p.height_error().abs()));
    write_text(
        &files[5],
        &scatter_svg("Height error vs IoU", "IoU", "|height error| (m)", &errs, Some((0.0, 1.0)), false),
    )?;
    write_text(&files[6], &histogram_svg(r))?;
    Ok(files.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::{LidarPoint, CLASS_BUILDING, CLASS_GROUND};

    fn scene() -> (Vec<Footprint>, PointCloud) {
        let mut fps = Vec::new();
        let mut pts = Vec::new();
        for i in 0..3 {
            let x0 = 30.0 * i as f64;
            let h = 4.0 + 2.0 * i as f64;
            fps.push(Footprint::rect(format!("r{i}"), x0, 0.0, x0 + 10.0, 8.0).unwrap());
            for a in 0..20 {
                for b in 0..16 {
                    let (x, y) = (x0 + 0.25 + 0.5 * a as f64, 0.25 + 0.5 * b as f64);
                    pts.push(LidarPoint::new(x, y, h + 0.01 * ((a + b) % 3) as f64, CLASS_BUILDING));
                }
            }
            for a in 0..28 {
                let x = x0 - 2.5 + 0.5 * a as f64;
                pts.push(LidarPoint::new(x, -1.0, 0.0, CLASS_GROUND));
                pts.push(LidarPoint::new(x, 9.0, 0.0, CLASS_GROUND));
            }
        }
        (fps, PointCloud::new(pts).unwrap())
    }

    #[test]
    fn identical_sets_have_zero_error() {
        let (fps, pc) = scene();
        let r = evaluate(&fps, &fps, &pc, &EvalConfig::default()).unwrap();
        assert!(r.matches.iter().all(|m| m.iou == 1.0));
        for s in r.measures.values() {
            let h = s.height.unwrap();
            assert_eq!((h.rmse, h.mae, h.n), (0.0, 0.0, 3));
            assert_eq!(s.histogram[0], 3);
        }
        assert_eq!(r.area.unwrap().mae, 0.0);
        assert_eq!((r.unmatched_preds, r.unmatched_refs), (0, 0));
    }

    #[test]
    fn disjoint_sets_tally_unmatched() {
        let (fps, pc) = scene();
        let far: Vec<Footprint> = fps.iter().map(|f| f.translated(0.0, 500.0).unwrap().with_id(format!("p{}", f.id))).collect();
        let r = evaluate(&far, &fps, &pc, &EvalConfig::default()).unwrap();
        assert_eq!((r.unmatched_preds, r.unmatched_refs), (3, 3));
        assert!(r.measures.values().all(|s| s.height.is_none()));
        assert!(r.area.is_none());
        assert_eq!(r.skipped.len(), 3);
        let all = EvalConfig { comparison: HeightComparison::AllReferences, ..EvalConfig::default() };
        let r2 = evaluate(&far, &fps, &pc, &all).unwrap();
        let med = r2.measures[&HeightMeasure::Median].height.unwrap();
        assert_eq!(med.n, 3);
        assert!(med.mae > 4.0);
        assert_eq!(r2.area.unwrap().n, 3);
    }

    #[test]
    fn shifted_prediction_has_error() {
        let (fps, pc) = scene();
        let preds: Vec<Footprint> = fps.iter().map(|f| f.translated(3.0, 0.0).unwrap()).collect();
        let r = evaluate(&preds, &fps, &pc, &EvalConfig::default()).unwrap();
        assert!(r.matches.iter().all(|m| m.iou > 0.5 && m.iou < 0.6));
        let s = &r.measures[&HeightMeasure::Median];
        assert!(s.height.unwrap().mae >= 0.0);
        assert_eq!(s.iou_binned_mae.len(), 1);
        assert_eq!(s.iou_binned_mae[0].2, 3);
    }

    fn read_all(files: &[PathBuf]) -> Vec<Vec<u8>> {
        files.iter().map(|f| std::fs::read(f).unwrap()).collect()
    }

    #[test]
    fn report_inventory_and_determinism() {
        let (fps, pc) = scene();
        let preds: Vec<Footprint> = fps.iter().map(|f| f.translated(0.7, 0.3).unwrap().with_id(format!("p{}", f.id))).collect();
        let r = evaluate(&preds, &fps, &pc, &EvalConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = write_eval_report(&r, &dir.path().join("a")).unwrap();
        let b = write_eval_report(&r, &dir.path().join("b")).unwrap();
        assert_eq!(a.iter().filter(|p| p.extension().unwrap() == "csv").count(), 4);
        assert_eq!(a.iter().filter(|p| p.extension().unwrap() == "svg").count(), 3);
        assert_eq!(read_all(&a), read_all(&b));
        let r2 = evaluate(&preds, &fps, &pc, &EvalConfig::default()).unwrap();
        let c = write_eval_report(&r2, &dir.path().join("c")).unwrap();
        assert_eq!(read_all(&a), read_all(&c));
        let hist = std::fs::read_to_string(&a[2]).unwrap();
        let mut rd = csv::Reader::from_reader(hist.as_bytes());
        let mut sums: BTreeMap<String, f64> = BTreeMap::new();
        for row in rd.records() {
            let row = row.unwrap();
            *sums.entry(row[0].to_string()).or_default() += row[3].parse::<f64>().unwrap();
        }
        assert_eq!(sums.len(), 2);
        assert!(sums.values().all(|s| (s - 100.0).abs() <= 0.02));
        for svg in &a[4..] {
            let text = std::fs::read_to_string(svg).unwrap();
            assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
            assert!(!text.contains("href"));
        }
        let inside = dir.path().join("d");
        std::fs::create_dir(&inside).unwrap();
        let d = write_eval_report(&r, &inside).unwrap();
        assert_eq!(d[0], inside.join("matches.csv"));
    }
}
