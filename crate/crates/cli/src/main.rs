mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use lod1::eval::{evaluate, write_eval_report, EvalConfig, HeightComparison};
use lod1::footprint::{postprocess_detailed, PostprocessConfig};
use lod1::geometry::geojson::{footprint_feature, read_footprints, to_feature_collection, write_collection};
use lod1::heights::{building_heights_with, HeightConfig, HeightMeasure, DEFAULT_MODE_BIN};
use lod1::morphology::{morphology_table, write_morphology_csv};
use lod1::pointcloud::{
    las::write_las, load_points, text::format_xyzc, PointCloud, PointFormat, DEFAULT_GROUND_RING,
};
use lod1::raster::ascii::{read_grid, write_grid};
use lod1::raster::{rasterize_dsm, DEFAULT_DSM_CELL};
use lod1::reconstruct::{extrude, write_cityjson, write_obj, Lod1Solid};
use lod1::synth::{generate_scene, perturb_to_iou_with, SceneSpec};
use lod1::Source;

use manifest::{beside, Manifest};

#[derive(Parser)]
#[command(name = "lod1", version, about = "LOD1 building reconstruction and footprint error analysis")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a point cloud into a DSM grid (ESRI ASCII).
    Rasterize(RasterizeArgs),
    /// Turn a building mask grid into regularized footprints (GeoJSON).
    Footprints(FootprintArgs),
    /// Extrude footprints to LOD1 solids and tabulate their morphology.
    Reconstruct(ReconstructArgs),
    /// Compare predicted footprints against reference footprints.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic scene from a TOML spec.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RasterizeArgs {
    /// Points, `.las` or `x y z class` text.
    input: PathBuf,
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DSM_CELL)]
    cell: f64,
    /// Keep only these classes (comma separated). All points by default.
    #[arg(long, value_delimiter = ',')]
    classes: Vec<u8>,
}

#[derive(Args)]
struct FootprintArgs {
    /// Binary mask grid (ESRI ASCII).
    input: PathBuf,
    output: PathBuf,
    #[arg(long, default_value_t = PostprocessConfig::default().min_area)]
    min_area: f64,
    #[arg(long, default_value_t = PostprocessConfig::default().buffer_dist)]
    buffer: f64,
    #[arg(long, default_value_t = PostprocessConfig::default().simplify_tol)]
    simplify_tol: f64,
    /// Degrees.
    #[arg(long, default_value_t = PostprocessConfig::default().snap_angle_tol)]
    snap_angle: f64,
}

#[derive(Args)]
struct HeightArgs {
    /// Comma separated: maximum, range, mode, median, p90.
    #[arg(long, value_delimiter = ',', default_value = "median,p90")]
    measures: Vec<HeightMeasure>,
    /// Width of the ground ring around each footprint, metres.
    #[arg(long, default_value_t = DEFAULT_GROUND_RING)]
    ground_ring: f64,
    #[arg(long, default_value_t = DEFAULT_MODE_BIN)]
    mode_bin: f64,
    #[arg(long, value_delimiter = ',', default_value = "6")]
    building_classes: Vec<u8>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    ground_classes: Vec<u8>,
}

impl HeightArgs {
    fn config(&self) -> Result<HeightConfig> {
        if self.measures.is_empty() {
            bail!("config: at least one height measure is required");
        }
        let cfg = HeightConfig {
            mode_bin: self.mode_bin,
            ground_ring: self.ground_ring,
            building_classes: self.building_classes.iter().copied().collect(),
            ground_classes: self.ground_classes.iter().copied().collect(),
            ..HeightConfig::default()
        };
        cfg.validate().context("config")?;
        Ok(cfg)
    }

    fn measures(&self) -> Vec<HeightMeasure> {
        let set: BTreeSet<HeightMeasure> = self.measures.iter().copied().collect();
        set.into_iter().collect()
    }

    fn echo(&self, m: &mut Manifest) {
        m.param("measures", names(&self.measures()));
        m.param("ground_ring", self.ground_ring);
        m.param("mode_bin", self.mode_bin);
        m.param("building_classes", self.building_classes.clone());
        m.param("ground_classes", self.ground_classes.clone());
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum ModelFormat {
    Cityjson,
    Obj,
}

#[derive(Args)]
struct ReconstructArgs {
    points: PathBuf,
    footprints: PathBuf,
    out_dir: PathBuf,
    #[command(flatten)]
    heights: HeightArgs,
    #[arg(long, value_delimiter = ',', default_value = "cityjson")]
    formats: Vec<ModelFormat>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted footprints (GeoJSON).
    pred: PathBuf,
    /// Reference footprints (GeoJSON).
    reference: PathBuf,
    points: PathBuf,
    out_dir: PathBuf,
    #[command(flatten)]
    heights: HeightArgs,
    /// Compare heights for every reference building, not only matched ones.
    #[arg(long)]
    all_references: bool,
    #[arg(long, default_value_t = EvalConfig::default().iou_cell)]
    iou_cell: f64,
    #[arg(long, default_value_t = EvalConfig::default().confidence)]
    confidence: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PointsOut {
    Xyz,
    Las,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene spec (TOML).
    spec: PathBuf,
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = PointsOut::Xyz)]
    points_format: PointsOut,
}

fn names(ms: &[HeightMeasure]) -> Vec<&'static str> {
    ms.iter().map(|m| m.name()).collect()
}

fn load_cloud(path: &Path) -> Result<PointCloud> {
    load_points(path, PointFormat::from_path(path))
        .with_context(|| format!("load_points: cannot load {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn parent_of(p: &Path) -> PathBuf {
    p.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn rasterize(a: &RasterizeArgs) -> Result<()> {
    if !(a.cell > 0.0) || !a.cell.is_finite() {
        bail!("config: --cell must be a positive number, got {}", a.cell);
    }
    let mut m = Manifest::new("rasterize", &parent_of(&a.output));
    m.input("points", &a.input);
    m.param("cell", a.cell);
    m.param("classes", a.classes.clone());

    let mut pc = load_cloud(&a.input)?;
    if !a.classes.is_empty() {
        pc = pc.filter_by_class(&a.classes.iter().copied().collect());
    }
    let dsm = rasterize_dsm(&pc, a.cell).context("rasterize_dsm")?;
    write_grid(&dsm, &a.output).context("write_grid")?;
    m.output(&a.output);
    m.extra(
        "grid",
        json!({ "ncols": dsm.ncols(), "nrows": dsm.nrows(), "nodata_cells": dsm.count_nodata(), "points": pc.len() }),
    );
    m.write(&beside(&a.output))
}

fn footprints(a: &FootprintArgs) -> Result<()> {
    let cfg = PostprocessConfig {
        min_area: a.min_area,
        buffer_dist: a.buffer,
        simplify_tol: a.simplify_tol,
        snap_angle_tol: a.snap_angle,
    };
    cfg.validate().context("config")?;
    let mut m = Manifest::new("footprints", &parent_of(&a.output));
    m.input("mask", &a.input);
    m.param("min_area", cfg.min_area);
    m.param("buffer", cfg.buffer_dist);
    m.param("simplify_tol", cfg.simplify_tol);
    m.param("snap_angle", cfg.snap_angle_tol);

    let mask = read_grid(&a.input).with_context(|| format!("read_grid: cannot read {}", a.input.display()))?;
    let processed = postprocess_detailed(&mask, &cfg).context("postprocess")?;
    let mut flagged = Map::new();
    let extras: Vec<Option<Map<String, Value>>> = processed
        .iter()
        .map(|p| {
            if p.flags.is_empty() {
                return None;
            }
            let fl: Vec<&str> = p.flags.iter().map(|f| f.as_str()).collect();
            flagged.insert(p.footprint.id.clone(), json!(fl));
            Some(Map::from_iter([("flags".to_string(), json!(fl))]))
        })
        .collect();
    let fc = to_feature_collection(processed.iter().zip(&extras).map(|(p, e)| (&p.footprint, e.as_ref())));
    write_collection(&a.output, &fc).context("write_footprints")?;
    m.output(&a.output);
    m.extra("footprints", json!(processed.len()));
    m.extra("flags", Value::Object(flagged));
    m.write(&beside(&a.output))
}

fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let hcfg = a.heights.config()?;
    let measures = a.heights.measures();
    let formats: BTreeSet<ModelFormat> = a.formats.iter().copied().collect();
    if formats.is_empty() {
        bail!("config: at least one output format is required");
    }
    let mut m = Manifest::new("reconstruct", &a.out_dir);
    m.input("points", &a.points);
    m.input("footprints", &a.footprints);
    a.heights.echo(&mut m);
    m.param(
        "formats",
        formats
            .iter()
            .map(|f| if *f == ModelFormat::Cityjson { "cityjson" } else { "obj" })
            .collect::<Vec<_>>(),
    );

    let pc = load_cloud(&a.points)?;
    let fps = read_footprints(&a.footprints, Source::Predicted)
        .with_context(|| format!("read_footprints: cannot read {}", a.footprints.display()))?;
    create_dir(&a.out_dir)?;

    let mut per_measure: BTreeMap<HeightMeasure, Vec<Lod1Solid>> = measures.iter().map(|&k| (k, Vec::new())).collect();
    let mut flags: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for fp in &fps {
        let h = match building_heights_with(&pc, fp, &measures, &hcfg) {
            Ok(h) => h,
            Err(e) => {
                m.skip(&fp.id, e);
                continue;
            }
        };
        if !h.flags.is_empty() {
            flags.insert(fp.id.clone(), h.flags.iter().map(|f| f.as_str().to_string()).collect());
        }
        for &k in &measures {
            let top = h.top_elev[&k];
            match extrude(fp, h.base_elev, top) {
                Ok(s) => per_measure.get_mut(&k).unwrap().push(s.with_measure(k)),
                Err(e) => m.skip(&format!("{}/{}", fp.id, k), e),
            }
        }
    }

    for (k, solids) in &per_measure {
        if formats.contains(&ModelFormat::Cityjson) {
            let p = a.out_dir.join(format!("lod1_{k}.city.json"));
            write_cityjson(solids, &p).context("write_cityjson")?;
            m.output(&p);
        }
        if formats.contains(&ModelFormat::Obj) {
            let p = a.out_dir.join(format!("lod1_{k}.obj"));
            write_obj(solids, &p).context("write_obj")?;
            m.output(&p);
        }
    }
    let all: Vec<Lod1Solid> = per_measure.into_values().flatten().collect();
    let mut records = morphology_table(&all);
    for r in &mut records {
        if let Some(f) = flags.get(&r.id) {
            r.flags = f.clone();
        }
    }
    let p = a.out_dir.join("morphology.csv");
    write_morphology_csv(&records, &p).context("write_morphology_csv")?;
    m.output(&p);
    m.extra("buildings", json!({ "input": fps.len(), "reconstructed": records.len() }));
    m.extra("height_flags", json!(flags));
    m.write(&a.out_dir.join("manifest.json"))
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let cfg = EvalConfig {
        measures: a.heights.measures(),
        heights: a.heights.config()?,
        comparison: if a.all_references { HeightComparison::AllReferences } else { HeightComparison::MatchedOnly },
        iou_cell: a.iou_cell,
        confidence: a.confidence,
    };
    cfg.validate().context("config")?;
    let mut m = Manifest::new("evaluate", &a.out_dir);
    m.input("pred", &a.pred);
    m.input("reference", &a.reference);
    m.input("points", &a.points);
    a.heights.echo(&mut m);
    m.param("comparison", if a.all_references { "all-references" } else { "matched-only" });
    m.param("iou_cell", a.iou_cell);
    m.param("confidence", a.confidence);

    let preds = read_footprints(&a.pred, Source::Predicted)
        .with_context(|| format!("read_footprints: cannot read {}", a.pred.display()))?;
    let refs = read_footprints(&a.reference, Source::Reference)
        .with_context(|| format!("read_footprints: cannot read {}", a.reference.display()))?;
    let pc = load_cloud(&a.points)?;
    create_dir(&a.out_dir)?;

    let report = evaluate(&preds, &refs, &pc, &cfg).context("evaluate")?;
    for (id, reason) in &report.skipped {
        m.skip(id, reason);
    }
    for p in write_eval_report(&report, &a.out_dir).context("write_eval_report")? {
        m.output(&p);
    }
    let measures: Map<String, Value> = report
        .measures
        .iter()
        .map(|(k, s)| {
            (
                k.name().to_string(),
                json!({ "height": s.height, "wall_area": s.wall_area, "wall_height_r": s.wall_height_r }),
            )
        })
        .collect();
    m.extra(
        "summary",
        json!({
            "pred": preds.len(),
            "reference": refs.len(),
            "unmatched_pred": report.unmatched_preds,
            "unmatched_reference": report.unmatched_refs,
            "area": report.area,
            "iou_mean": report.iou_ci.as_ref().map(|c| c.mean),
            "measures": measures,
        }),
    );
    m.write(&a.out_dir.join("manifest.json"))
}

fn sweep_seed(base: u64, target_idx: usize, building_idx: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(((target_idx as u64) << 32) | building_idx as u64)
}

fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SceneSpec::read(&a.spec).with_context(|| format!("scene spec {}", a.spec.display()))?;
    let mut m = Manifest::new("synth", &a.out_dir);
    m.input("spec", &a.spec);
    m.param("spec", serde_json::to_value(&spec)?);
    m.param("points_format", if a.points_format == PointsOut::Las { "las" } else { "xyz" });

    let (pc, truth) = generate_scene(&spec).context("generate_scene")?;
    create_dir(&a.out_dir)?;
    let pts = match a.points_format {
        PointsOut::Xyz => {
            let p = a.out_dir.join("points.xyz");
            std::fs::write(&p, format_xyzc(pc.points()))
                .with_context(|| format!("cannot write {}", p.display()))?;
            p
        }
        PointsOut::Las => {
            let p = a.out_dir.join("points.las");
            let offset = [spec.origin[0], spec.origin[1], 0.0];
            write_las(&p, pc.points(), 1, [0.001; 3], offset).context("write_las")?;
            p
        }
    };
    m.output(&pts);
    let truth_fps = truth.footprints();
    let p = a.out_dir.join("truth.geojson");
    write_collection(&p, &to_feature_collection(truth_fps.iter().map(|f| (f, None)))).context("write_footprints")?;
    m.output(&p);
    let p = a.out_dir.join("truth.csv");
    truth.write_csv(&p).context("write_truth_csv")?;
    m.output(&p);

    let mut sweep_log = Vec::new();
    if let Some(sw) = &spec.sweep {
        for (k, &target) in sw.targets.iter().enumerate() {
            let mut feats = Vec::new();
            let mut achieved = Vec::new();
            for (i, fp) in truth_fps.iter().enumerate() {
                match perturb_to_iou_with(fp, target, sweep_seed(sw.seed, k, i), sw.mode) {
                    Ok(p) => {
                        let props = Map::from_iter([
                            ("target_iou".to_string(), json!(target)),
                            ("achieved_iou".to_string(), json!(p.iou)),
                            ("magnitude".to_string(), json!(p.magnitude)),
                        ]);
                        achieved.push(p.iou);
                        feats.push(footprint_feature(&p.footprint, Some(&props)));
                    }
                    Err(e) => m.skip(&format!("{}@{target}", fp.id), e),
                }
            }
            let p = a.out_dir.join(format!("pred_iou_{target}.geojson"));
            write_collection(&p, &json!({ "type": "FeatureCollection", "features": feats }))
                .context("write_footprints")?;
            m.output(&p);
            let n = achieved.len();
            let mean = (n > 0).then(|| achieved.iter().sum::<f64>() / n as f64);
            sweep_log.push(json!({
                "target": target,
                "file": p.file_name().map(|s| s.to_string_lossy().to_string()),
                "n": n,
                "mean_iou": mean,
                "min_iou": achieved.iter().copied().reduce(f64::min),
                "max_iou": achieved.iter().copied().reduce(f64::max),
            }));
        }
    }
    m.extra("buildings", json!(truth.buildings.len()));
    m.extra("points", json!(pc.len()));
    m.extra("sweep", json!(sweep_log));
    m.write(&a.out_dir.join("manifest.json"))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Rasterize(a) => rasterize(a).context("rasterize"),
        Command::Footprints(a) => footprints(a).context("footprints"),
        Command::Reconstruct(a) => reconstruct(a).context("reconstruct"),
        Command::Evaluate(a) => evaluate_cmd(a).context("evaluate"),
        Command::Synth(a) => synth(a).context("synth"),
    }
}

/// Joins the error chain, dropping causes already spelled out by their parent.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if prev.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
        prev = msg;
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(2)
        }
    }
}
