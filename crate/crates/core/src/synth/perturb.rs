use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, polygon_iou, Footprint, Point2, Source, DEFAULT_IOU_CELL};

/// Accepted deviation of the achieved IoU from the target.
pub const IOU_TOLERANCE: f64 = 0.02;
const BISECTION_STEPS: usize = 60;
const GOOD_ENOUGH: f64 = 0.002;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbMode {
    /// Translation, uniform scaling and a single-edge displacement, mixed
    /// with seeded weights.
    #[default]
    Composite,
    /// Translation along one axis only.
    TranslateOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbed {
    pub footprint: Footprint,
    pub iou: f64,
    /// Perturbation strength in units of √area.
    pub magnitude: f64,
}

struct Plan {
    dir: Point2,
    w_translate: f64,
    w_scale: f64,
    grow: bool,
    w_edge: f64,
    edge: Option<usize>,
}

fn convex_edges(ring: &[Point2]) -> Vec<usize> {
    let n = ring.len();
    let convex = |i: usize| {
        let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
        b.sub(a).cross(c.sub(b)) > 0.0
    };
    (0..n).filter(|&i| convex(i) && convex((i + 1) % n)).collect()
}

fn plan(fp: &Footprint, mode: PerturbMode, seed: u64) -> Plan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        PerturbMode::TranslateOnly => {
            let dir = [Point2::new(1.0, 0.0), Point2::new(0.0, 1.0), Point2::new(-1.0, 0.0), Point2::new(0.0, -1.0)]
                [rng.gen_range(0..4usize)];
            Plan { dir, w_translate: 1.0, w_scale: 0.0, grow: false, w_edge: 0.0, edge: None }
        }
        PerturbMode::Composite => {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let w: [f64; 3] = [rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0)];
            let s: f64 = w.iter().sum();
            let grow = rng.gen_bool(0.5);
            let edges = convex_edges(fp.outer().vertices());
            let edge = (!edges.is_empty()).then(|| edges[rng.gen_range(0..edges.len())]);
            Plan {
                dir: Point2::new(theta.cos(), theta.sin()),
                w_translate: w[0] / s,
                w_scale: w[1] / s,
                grow,
                w_edge: if edge.is_some() { w[2] / s } else { 0.0 },
                edge,
            }
        }
    }
}

fn apply(fp: &Footprint, p: &Plan, t: f64) -> Result<Footprint> {
    let l = fp.area().sqrt();
    let c = fp.centroid();
    let mut outer: Vec<Point2> = fp.outer().vertices().to_vec();
    if let Some(k) = p.edge {
        let n = outer.len();
        let (a, b) = (outer[k], outer[(k + 1) % n]);
        let d = b.sub(a);
        let normal = Point2::new(d.y, -d.x).scale(1.0 / d.norm());
        let shift = normal.scale(t * p.w_edge * l);
        outer[k] = a.add(shift);
        outer[(k + 1) % n] = b.add(shift);
    }
    let s = if p.grow { 1.0 + t * p.w_scale } else { 1.0 / (1.0 + t * p.w_scale) };
    let off = p.dir.scale(t * p.w_translate * l);
    let map = |q: Point2| c.add(q.sub(c).scale(s)).add(off);
    let holes: Vec<Vec<Point2>> = fp.holes().iter().map(|h| h.vertices().iter().map(|&q| map(q)).collect()).collect();
    let out = Footprint::new(fp.id.clone(), outer.into_iter().map(map).collect(), holes, Source::Predicted)?;
    if !out.is_simple() {
        return Err(Error::Perturbation("perturbed ring self-intersects".into()));
    }
    Ok(out)
}

pub fn perturb_to_iou(fp: &Footprint, target: f64, seed: u64) -> Result<Footprint> {
    perturb_to_iou_with(fp, target, seed, PerturbMode::Composite).map(|p| p.footprint)
}

/// Bisects the perturbation strength until `polygon_iou(result, fp)` lies
/// within [`IOU_TOLERANCE`] of `target`, then keeps narrowing for a closer
/// hit while steps remain.
pub fn perturb_to_iou_with(fp: &Footprint, target: f64, seed: u64, mode: PerturbMode) -> Result<Perturbed> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Precondition(format!("target IoU must lie in (0, 1], got {target}")));
    }
    if target == 1.0 {
        return Ok(Perturbed { footprint: fp.clone(), iou: 1.0, magnitude: 0.0 });
    }
    let p = plan(fp, mode, seed);
    let eval = |t: f64| -> (Option<Footprint>, f64) {
        match apply(fp, &p, t) {
            Ok(g) => {
                let v = polygon_iou(&g, fp, DEFAULT_IOU_CELL);
                (Some(g), v)
            }
            Err(_) => (None, f64::NAN),
        }
    };
    let mut best: Option<Perturbed> = None;
    let consider = |best: &mut Option<Perturbed>, g: Option<Footprint>, v: f64, t: f64| {
        if let Some(g) = g {
            let dev = (v - target).abs();
            if dev <= IOU_TOLERANCE && best.as_ref().is_none_or(|b| dev < (b.iou - target).abs()) {
                *best = Some(Perturbed { footprint: g, iou: v, magnitude: t });
            }
        }
    };
    let mut hi = 0.05;
    let mut steps = 0;
    loop {
        let (g, v) = eval(hi);
        steps += 1;
        consider(&mut best, g, v, hi);
        if v.is_nan() || v < target {
            break;
        }
        if steps >= BISECTION_STEPS {
            return Err(Error::Perturbation(format!(
                "`{}`: IoU stays above {target} up to strength {hi}",
                fp.id
            )));
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while steps < BISECTION_STEPS {
        if best.as_ref().is_some_and(|b| (b.iou - target).abs() <= GOOD_ENOUGH) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (g, v) = eval(mid);
        steps += 1;
        consider(&mut best, g, v, mid);
        if !v.is_nan() && v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.ok_or_else(|| {
        Error::Perturbation(format!(
            "`{}`: target IoU {target} not reached within {BISECTION_STEPS} steps",
            fp.id
        ))
    })
}

/// Convex hull of two footprints, standing in for a segmentation that fused
/// neighbouring buildings.
pub fn merge_footprints(a: &Footprint, b: &Footprint, id: impl Into<String>) -> Result<Footprint> {
    let pts: Vec<Point2> = a.outer().vertices().iter().chain(b.outer().vertices()).copied().collect();
    Footprint::new(id, convex_hull(&pts), vec![], Source::Predicted)
}
