//! Evaluation metrics: pixel scores, t-based confidence intervals, building
//! matching, error statistics, histograms and correlation.
//!
//! Undefined values (zero denominators, zero variance) are `None`, never 0.

mod report;
pub mod tdist;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{polygon_iou, Footprint, DEFAULT_IOU_CELL};
use crate::raster::Grid;

pub use report::{evaluate, write_eval_report, BuildingRecord, EvalConfig, EvalReport, HeightComparison, HeightPair, MeasureSummary};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts over two aligned binary masks. Cells that are nodata in either
    /// mask are skipped.
    pub fn from_masks(pred: &Grid, truth: &Grid) -> Result<Self> {
        if pred.ncols() != truth.ncols()
            || pred.nrows() != truth.nrows()
            || pred.cell() != truth.cell()
            || pred.origin() != truth.origin()
        {
            return Err(Error::Alignment("prediction and truth masks differ in geometry".into()));
        }
        pred.require_binary("prediction mask")?;
        truth.require_binary("truth mask")?;
        let mut c = ConfusionCounts::default();
        for (&p, &t) in pred.values().iter().zip(truth.values()) {
            if pred.is_nodata(p) || truth.is_nodata(t) {
                continue;
            }
            match (p == 1.0, t == 1.0) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PixelMetrics {
    pub iou: Option<f64>,
    pub dice: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn pixel_metrics(c: &ConfusionCounts) -> PixelMetrics {
    PixelMetrics {
        iou: ratio(c.tp, c.tp + c.fp + c.fn_),
        dice: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricCI {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
    pub confidence: f64,
}

impl fmt::Display for MetricCI {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.half_width)
    }
}

pub fn mean_ci_t(samples: &[f64], confidence: f64) -> Result<MetricCI> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Precondition(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sem = (var / n as f64).sqrt();
    let t = tdist::t_quantile(0.5 * (1.0 + confidence), (n - 1) as f64);
    Ok(MetricCI {
        mean,
        half_width: t * sem,
        n,
        confidence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildingMatch {
    pub pred_id: String,
    pub ref_id: Option<String>,
    pub iou: f64,
}

pub fn match_buildings(preds: &[Footprint], refs: &[Footprint]) -> Vec<BuildingMatch> {
    match_buildings_with(preds, refs, DEFAULT_IOU_CELL)
}

/// Greedy one-to-one matching by descending IoU, ties broken by
/// (pred id, ref id). Output is sorted by pred id.
pub fn match_buildings_with(preds: &[Footprint], refs: &[Footprint], cell: f64) -> Vec<BuildingMatch> {
    let pb: Vec<_> = preds.iter().map(Footprint::bounds).collect();
    let rb: Vec<_> = refs.iter().map(Footprint::bounds).collect();
    let candidates: Vec<(usize, usize)> = (0..preds.len())
        .flat_map(|i| (0..refs.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| pb[i].intersects(&rb[j]))
        .collect();
    let mut scored: Vec<(f64, usize, usize)> = candidates
        .par_iter()
        .map(|&(i, j)| (polygon_iou(&preds[i], &refs[j], cell), i, j))
        .filter(|s| s.0 > 0.0)
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| preds[a.1].id.cmp(&preds[b.1].id))
            .then_with(|| refs[a.2].id.cmp(&refs[b.2].id))
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut pred_match: Vec<Option<(usize, f64)>> = vec![None; preds.len()];
    let mut ref_taken = vec![false; refs.len()];
    for (iou, i, j) in scored {
        if pred_match[i].is_none() && !ref_taken[j] {
            pred_match[i] = Some((j, iou));
            ref_taken[j] = true;
        }
    }
    let mut out: Vec<(usize, BuildingMatch)> = pred_match
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            (
                i,
                BuildingMatch {
                    pred_id: preds[i].id.clone(),
                    ref_id: m.map(|(j, _)| refs[j].id.clone()),
                    iou: m.map_or(0.0, |(_, v)| v),
                },
            )
        })
        .collect();
    out.sort_by(|a, b| a.1.pred_id.cmp(&b.1.pred_id).then(a.0.cmp(&b.0)));
    out.into_iter().map(|(_, m)| m).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    pub rmse: f64,
    pub mae: f64,
    /// Coefficient of determination against the reference.
    pub r2: Option<f64>,
    pub n: usize,
}

impl fmt::Display for ErrorStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.r2 {
            Some(r2) => write!(f, "{:.3} / {:.3} / {:.3}", self.rmse, self.mae, r2),
            None => write!(f, "{:.3} / {:.3} / NA", self.rmse, self.mae),
        }
    }
}

pub fn error_stats(est: &[f64], reference: &[f64]) -> Result<ErrorStats> {
    if est.len() != reference.len() {
        return Err(Error::LengthMismatch(est.len(), reference.len()));
    }
    let n = est.len();
    if n == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let nf = n as f64;
    let sse: f64 = est.iter().zip(reference).map(|(e, r)| (e - r).powi(2)).sum();
    let sae: f64 = est.iter().zip(reference).map(|(e, r)| (e - r).abs()).sum();
    let mean_ref = reference.iter().sum::<f64>() / nf;
    let sst: f64 = reference.iter().map(|r| (r - mean_ref).powi(2)).sum();
    Ok(ErrorStats {
        rmse: (sse / nf).sqrt(),
        mae: sae / nf,
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
        n,
    })
}

pub const HISTOGRAM_EDGES: [f64; 9] = [0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5, 5.0];

pub const HISTOGRAM_LABELS: [&str; 10] = [
    "E < 0.1",
    "0.1 < E < 0.2",
    "0.2 < E < 0.35",
    "0.35 < E < 0.5",
    "0.5 < E < 0.75",
    "0.75 < E < 1",
    "1 < E < 1.5",
    "1.5 < E < 2.5",
    "2.5 < E < 5",
    "5 < E",
];

pub fn histogram_bin(abs_err: f64) -> usize {
    HISTOGRAM_EDGES.iter().take_while(|&&e| abs_err >= e).count()
}

pub fn height_error_counts(errors: &[f64]) -> [usize; 10] {
    let mut counts = [0usize; 10];
    for e in errors {
        counts[histogram_bin(e.abs())] += 1;
    }
    counts
}

/// Percentage of |errors| per bin, labelled as in [`HISTOGRAM_LABELS`].
pub fn height_error_histogram(errors: &[f64]) -> Vec<(&'static str, f64)> {
    if errors.is_empty() {
        return Vec::new();
    }
    let counts = height_error_counts(errors);
    let n = errors.len() as f64;
    HISTOGRAM_LABELS
        .iter()
        .zip(counts)
        .map(|(&l, c)| (l, 100.0 * c as f64 / n))
        .collect()
}

/// Percentages in hundredths of a percent summing to exactly 10000, by
/// largest remainder.
pub fn rounded_percent_hundredths(counts: &[usize]) -> Vec<u64> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return vec![0; counts.len()];
    }
    let n = n as u128;
    let mut out: Vec<u64> = counts.iter().map(|&c| (c as u128 * 10_000 / n) as u64).collect();
    let mut rema: Vec<(u128, usize)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| ((c as u128 * 10_000) % n, i))
        .collect();
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = 10_000 - out.iter().sum::<u64>();
    for &(_, i) in rema.iter().take(short as usize) {
        out[i] += 1;
    }
    out
}

pub fn iou_bin_index(iou: f64) -> usize {
    ((iou * 10.0).floor().max(0.0) as usize).min(9)
}

/// Mean |error| per IoU bin of width 0.1, keyed by bin center. Matches
/// without an error entry are ignored; empty bins are omitted.
pub fn iou_binned_mae(matches: &[BuildingMatch], errors: &BTreeMap<String, f64>) -> Vec<(f64, f64)> {
    let mut sums = [(0.0f64, 0usize); 10];
    for m in matches {
        if let Some(e) = errors.get(&m.pred_id) {
            let b = iou_bin_index(m.iou);
            sums[b].0 += e.abs();
            sums[b].1 += 1;
        }
    }
    sums.iter()
        .enumerate()
        .filter(|(_, s)| s.1 > 0)
        .map(|(i, s)| ((i as f64 + 0.5) / 10.0, s.0 / s.1 as f64))
        .collect()
}

/// Pearson product-moment correlation; `None` when either variance is zero.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}
