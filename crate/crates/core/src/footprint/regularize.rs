use std::f64::consts::FRAC_PI_2;

use super::PostprocessConfig;
use crate::error::{Error, Result};
use crate::geometry::{min_area_rect, segment_distance, Footprint, Orientation, Point2, Ring};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizeOutcome {
    Snapped,
    /// Snapping broke simplicity or the area guard; the Douglas–Peucker result is kept.
    SimplifiedOnly,
    /// Nothing usable came out; the input is returned unchanged.
    Failed,
}

#[derive(Debug, Clone)]
pub struct Regularized {
    pub footprint: Footprint,
    pub outcome: RegularizeOutcome,
}

const AREA_GUARD: f64 = 0.25;

/// Douglas–Peucker on a closed ring, anchored at its lowest-leftmost vertex
/// and the vertex farthest from it.
pub fn simplify_ring(pts: &[Point2], tol: f64) -> Vec<Point2> {
    simplify_ring_indices(pts, tol).into_iter().map(|i| pts[i]).collect()
}

fn simplify_ring_indices(pts: &[Point2], tol: f64) -> Vec<usize> {
    let n = pts.len();
    if n <= 3 {
        return (0..n).collect();
    }
    let a = (0..n)
        .min_by(|&i, &j| (pts[i].x, pts[i].y).partial_cmp(&(pts[j].x, pts[j].y)).unwrap())
        .unwrap();
    let b = (0..n)
        .max_by(|&i, &j| pts[a].dist(pts[i]).total_cmp(&pts[a].dist(pts[j])).then(j.cmp(&i)))
        .unwrap();
    let chain = |from: usize, to: usize| -> Vec<usize> {
        let mut v = Vec::new();
        let mut i = from;
        loop {
            v.push(i);
            if i == to {
                break;
            }
            i = (i + 1) % n;
        }
        v
    };
    let (c1, c2) = (chain(a, b), chain(b, a));
    let mut first: Vec<usize> = douglas_peucker(&c1.iter().map(|&i| pts[i]).collect::<Vec<_>>(), tol)
        .into_iter()
        .map(|k| c1[k])
        .collect();
    let second: Vec<usize> = douglas_peucker(&c2.iter().map(|&i| pts[i]).collect::<Vec<_>>(), tol)
        .into_iter()
        .map(|k| c2[k])
        .collect();
    first.pop();
    first.extend_from_slice(&second[..second.len() - 1]);
    first
}

fn douglas_peucker(pts: &[Point2], tol: f64) -> Vec<usize> {
    let n = pts.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((i, j)) = stack.pop() {
        let mut best = (0.0, i);
        for k in i + 1..j {
            let d = segment_distance(pts[k], pts[i], pts[j]);
            if d > best.0 {
                best = (d, k);
            }
        }
        if best.0 > tol {
            keep[best.1] = true;
            stack.push((i, best.1));
            stack.push((best.1, j));
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

#[derive(Clone)]
struct Run {
    /// Quarter-turn index relative to the dominant orientation, when snapped.
    k: Option<i64>,
    dir: Point2,
    // weighted sum of the source boundary's offsets along the normal
    off_sum: f64,
    weight: f64,
    len: f64,
    anchor: Point2,
    /// Source vertex range, for unsnapped runs.
    span: Option<(usize, usize)>,
}

impl Run {
    fn normal(&self) -> Point2 {
        Point2::new(-self.dir.y, self.dir.x)
    }

    fn point(&self) -> Point2 {
        match self.k {
            Some(_) => {
                let n = self.normal();
                let along = self.anchor.dot(self.dir);
                n.scale(self.off_sum / self.weight).add(self.dir.scale(along))
            }
            None => self.anchor,
        }
    }

    fn absorb(&mut self, o: &Run) {
        self.off_sum += o.off_sum;
        self.weight += o.weight;
        self.len += o.len;
    }
}

fn intersect(a: &Run, b: &Run) -> Option<Point2> {
    let den = a.dir.cross(b.dir);
    if den.abs() < 1e-9 {
        return None;
    }
    let (pa, pb) = (a.point(), b.point());
    let t = pb.sub(pa).cross(b.dir) / den;
    Some(pa.add(a.dir.scale(t)))
}

fn ray_distance(v: Point2, origin: Point2, through: Point2) -> f64 {
    let d = through.sub(origin);
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return v.dist(origin);
    }
    let t = (v.sub(origin).dot(d) / len2).max(0.0);
    v.dist(origin.add(d.scale(t)))
}

/// Whether unsnapped `r` is a corner cut worth squaring off: it ends up
/// shorter than `2 * tol` between its neighbours, or every source vertex it
/// replaced lies within `tol` of the corner its neighbours would form.
fn is_chamfer(pts: &[Point2], p: &Run, r: &Run, q: &Run, tol: f64) -> bool {
    let (Some(a), Some(b)) = (intersect(p, r), intersect(r, q)) else {
        return r.len < 2.0 * tol;
    };
    if r.len.min(b.sub(a).norm()) < 2.0 * tol {
        return true;
    }
    let (Some(c), Some((ia, ib))) = (intersect(p, q), r.span) else {
        return false;
    };
    let n = pts.len();
    let mut j = ia;
    loop {
        let v = pts[j];
        if ray_distance(v, c, a).min(ray_distance(v, c, b)) > tol {
            return false;
        }
        if j == ib {
            return true;
        }
        j = (j + 1) % n;
    }
}

/// Snaps the simplified ring `idx` (indices into `pts`). Snapped lines are
/// placed at the weighted mean offset of the original boundary they replace.
fn snap_ring(pts: &[Point2], idx: &[usize], theta: f64, tol_angle: f64, tol: f64) -> Option<Vec<Point2>> {
    let n = pts.len();
    let m = idx.len();
    let mut runs: Vec<Run> = (0..m)
        .filter_map(|i| {
            let (ia, ib) = (idx[i], idx[(i + 1) % m]);
            let (a, b) = (pts[ia], pts[ib]);
            let d = b.sub(a);
            let len = d.norm();
            if len == 0.0 {
                return None;
            }
            let rel = d.y.atan2(d.x) - theta;
            let k = (rel / FRAC_PI_2).round();
            if (rel - k * FRAC_PI_2).abs() <= tol_angle {
                let ang = theta + k * FRAC_PI_2;
                let dir = Point2::new(ang.cos(), ang.sin());
                let nrm = Point2::new(-dir.y, dir.x);
                let (mut off_sum, mut weight) = (0.0, 0.0);
                let mut j = ia;
                while j != ib {
                    let (p, q) = (pts[j], pts[(j + 1) % n]);
                    let w = q.sub(p).dot(dir).abs();
                    off_sum += w * p.add(q).scale(0.5).dot(nrm);
                    weight += w;
                    j = (j + 1) % n;
                }
                if weight < 1e-12 {
                    off_sum = len * a.add(b).scale(0.5).dot(nrm);
                    weight = len;
                }
                Some(Run {
                    k: Some((k as i64).rem_euclid(4)),
                    dir,
                    off_sum,
                    weight,
                    len,
                    anchor: a.add(b).scale(0.5),
                    span: None,
                })
            } else {
                Some(Run {
                    k: None,
                    dir: d.scale(1.0 / len),
                    off_sum: 0.0,
                    weight: 0.0,
                    len,
                    anchor: a,
                    span: Some((ia, ib)),
                })
            }
        })
        .collect();

    loop {
        let mut changed = false;
        // merge neighbouring runs snapped to the same direction
        let mut i = 0;
        while runs.len() > 1 && i < runs.len() {
            let j = (i + 1) % runs.len();
            if runs[i].k.is_some() && runs[i].k == runs[j].k {
                let other = runs.remove(j);
                let i = if j < i { i - 1 } else { i };
                runs[i].absorb(&other);
                changed = true;
            } else {
                i += 1;
            }
        }
        // drop short unsnapped chamfers between two snapped, non-parallel runs
        let m = runs.len();
        if m > 3 {
            if let Some(i) = (0..m).find(|&i| {
                let (p, q) = (&runs[(i + m - 1) % m], &runs[(i + 1) % m]);
                runs[i].k.is_none()
                    && is_chamfer(pts, p, &runs[i], q, tol)
                    && p.k.is_some()
                    && q.k.is_some()
                    && p.dir.cross(q.dir).abs() > 1e-9
            }) {
                runs.remove(i);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if runs.len() < 3 {
        return None;
    }
    let m = runs.len();
    (0..m).map(|i| intersect(&runs[(i + m - 1) % m], &runs[i])).collect()
}

fn area_ok(candidate: &Footprint, input_area: f64) -> bool {
    candidate.is_simple() && (candidate.area() - input_area).abs() <= AREA_GUARD * input_area
}

fn build(fp: &Footprint, outer: Vec<Point2>, holes: Vec<Vec<Point2>>) -> Option<Footprint> {
    let outer = Ring::new(outer, Orientation::CounterClockwise).ok()?;
    let holes = holes
        .into_iter()
        .filter_map(|h| Ring::new(h, Orientation::Clockwise).ok())
        .collect();
    Footprint::from_rings(fp.id.clone(), outer, holes, fp.source).ok()
}

/// Simplify, find the dominant orientation, snap near-orthogonal edges to it.
/// Never fails: see [`RegularizeOutcome`] for what was kept.
pub fn regularize_detailed(fp: &Footprint, cfg: &PostprocessConfig) -> Regularized {
    let failed = || Regularized {
        footprint: fp.clone(),
        outcome: RegularizeOutcome::Failed,
    };
    if !fp.is_simple() {
        return failed();
    }
    let input_area = fp.area();
    let tol = cfg.simplify_tol;
    let outer_v = fp.outer().vertices();
    let s_outer = simplify_ring_indices(outer_v, tol);
    if s_outer.len() < 3 {
        return failed();
    }
    let s_holes: Vec<(&[Point2], Vec<usize>)> = fp
        .holes()
        .iter()
        .map(|h| (h.vertices(), simplify_ring_indices(h.vertices(), tol)))
        .filter(|(_, ix)| ix.len() >= 3)
        .collect();
    let pick = |pts: &[Point2], ix: &[usize]| ix.iter().map(|&i| pts[i]).collect::<Vec<_>>();
    let simplified = build(
        fp,
        pick(outer_v, &s_outer),
        s_holes.iter().map(|(h, ix)| pick(h, ix)).collect(),
    )
    .filter(|c| area_ok(c, input_area));

    let snapped = min_area_rect(fp).ok().and_then(|r| {
        let tol_angle = cfg.snap_angle_tol.to_radians();
        let outer = snap_ring(outer_v, &s_outer, r.angle, tol_angle, tol)?;
        let holes = s_holes
            .iter()
            .filter_map(|(h, ix)| snap_ring(h, ix, r.angle, tol_angle, tol))
            .collect();
        build(fp, outer, holes).filter(|c| area_ok(c, input_area))
    });
    match (snapped, simplified) {
        (Some(footprint), _) => Regularized {
            footprint,
            outcome: RegularizeOutcome::Snapped,
        },
        (None, Some(footprint)) => Regularized {
            footprint,
            outcome: RegularizeOutcome::SimplifiedOnly,
        },
        (None, None) => failed(),
    }
}

/// As [`regularize_detailed`], but a collapse is an error.
pub fn regularize(fp: &Footprint, cfg: &PostprocessConfig) -> Result<Footprint> {
    let r = regularize_detailed(fp, cfg);
    match r.outcome {
        RegularizeOutcome::Failed => Err(Error::RegularizationFailure(format!(
            "footprint `{}` could not be regularized",
            fp.id
        ))),
        _ => Ok(r.footprint),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{polygon_iou, Source};
    use crate::raster::{polygonize, rasterize_polygon, Connectivity, Grid, DEFAULT_NODATA};

    fn staircase(fp: &Footprint, cell: f64) -> Footprint {
        let b = fp.bounds().expanded(2.0 * cell);
        let c0 = (b.min_x / cell).floor();
        let r0 = (b.min_y / cell).floor();
        let nc = ((b.max_x / cell).ceil() - c0) as usize;
        let nr = ((b.max_y / cell).ceil() - r0) as usize;
        let t = Grid::new(
            Point2::new((c0 + 0.5) * cell, (r0 + 0.5) * cell),
            cell,
            nc,
            nr,
            0.0,
            DEFAULT_NODATA,
        )
        .unwrap();
        let mut fps = polygonize(&rasterize_polygon(fp, &t), Connectivity::Eight).unwrap();
        assert_eq!(fps.len(), 1);
        fps.pop().unwrap()
    }

    #[test]
    fn simplify_drops_collinear_and_small_wiggles() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(5.0, 0.1),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 6.0),
            Point2::new(0.0, 6.0),
        ];
        assert_eq!(simplify_ring(&pts, 0.3).len(), 4);
        assert_eq!(simplify_ring(&pts, 0.05).len(), 5);
    }

    #[test]
    fn axis_aligned_staircase_becomes_rectangle() {
        let truth = Footprint::rect("t", 0.0, 0.0, 10.0, 6.0).unwrap();
        let st = staircase(&truth, 0.23);
        let r = regularize_detailed(&st, &PostprocessConfig::default());
        assert_eq!(r.outcome, RegularizeOutcome::Snapped);
        assert_eq!(r.footprint.outer().len(), 4);
        assert!((r.footprint.area() - 60.0).abs() / 60.0 < 0.03);
    }

    #[test]
    fn slightly_rotated_staircases_lose_corner_cuts() {
        for deg in (2..=14).map(f64::from) {
            let c = Point2::new(6.0, 3.5);
            let truth = Footprint::rect("t", 0.0, 0.0, 12.0, 7.0)
                .unwrap()
                .rotated(deg.to_radians(), c)
                .unwrap();
            for cell in [0.2, 0.23, 0.25, 0.3] {
                let r = regularize_detailed(&staircase(&truth, cell), &PostprocessConfig::default());
                assert_eq!(r.outcome, RegularizeOutcome::Snapped, "{deg} {cell}");
                assert_eq!(r.footprint.outer().len(), 4, "{deg} {cell}");
            }
        }
    }

    #[test]
    fn real_chamfer_survives() {
        let truth = Footprint::new(
            "c",
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(12.0, 0.0),
                Point2::new(12.0, 4.5),
                Point2::new(9.5, 7.0),
                Point2::new(0.0, 7.0),
            ],
            vec![],
            Source::Reference,
        )
        .unwrap()
        .translated(0.07, 0.04)
        .unwrap();
        let r = regularize_detailed(&staircase(&truth, 0.23), &PostprocessConfig::default());
        assert_eq!(r.footprint.outer().len(), 5);
        assert!(polygon_iou(&r.footprint, &truth, 0.05) > 0.95);
    }

    #[test]
    fn rectangle_is_fixed_point() {
        let fp = Footprint::rect("r", 0.0, 0.0, 10.0, 6.0).unwrap();
        let r = regularize(&fp, &PostprocessConfig::default()).unwrap();
        assert_eq!(r.outer().len(), 4);
        for p in r.outer().vertices() {
            assert!(fp.outer().vertices().iter().any(|q| q.dist(*p) < 1e-9));
        }
    }

    #[test]
    fn rotated_staircase_keeps_orientation() {
        let c = Point2::new(20.0, 20.0);
        let truth = Footprint::rect("t", 15.0, 17.0, 25.0, 23.0)
            .unwrap()
            .rotated(std::f64::consts::FRAC_PI_4, c)
            .unwrap();
        let st = staircase(&truth, 0.23);
        assert!(st.vertex_count() > 40);
        let r = regularize_detailed(&st, &PostprocessConfig::default());
        assert_eq!(r.outcome, RegularizeOutcome::Snapped);
        assert_eq!(r.footprint.outer().len(), 4);
        let v = r.footprint.outer().vertices();
        for i in 0..4 {
            let d = v[(i + 1) % 4].sub(v[i]);
            let ang = d.y.atan2(d.x).rem_euclid(FRAC_PI_2).to_degrees();
            assert!((ang - 45.0).abs() < 2.0, "edge angle {ang}");
        }
        assert!(polygon_iou(&r.footprint, &truth, 0.05) > 0.9);
    }

    #[test]
    fn l_shape_keeps_six_corners() {
        let truth = Footprint::new(
            "l",
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(12.0, 0.0),
                Point2::new(12.0, 5.0),
                Point2::new(5.0, 5.0),
                Point2::new(5.0, 10.0),
                Point2::new(0.0, 10.0),
            ],
            vec![],
            Source::Reference,
        )
        .unwrap()
        .translated(0.07, 0.11)
        .unwrap();
        let r = regularize_detailed(&staircase(&truth, 0.23), &PostprocessConfig::default());
        assert_eq!(r.outcome, RegularizeOutcome::Snapped);
        assert_eq!(r.footprint.outer().len(), 6);
    }

    #[test]
    fn hole_is_regularized_too() {
        let truth = Footprint::new(
            "h",
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(20.0, 0.0),
                Point2::new(20.0, 20.0),
                Point2::new(0.0, 20.0),
            ],
            vec![vec![
                Point2::new(6.0, 6.0),
                Point2::new(14.0, 6.0),
                Point2::new(14.0, 14.0),
                Point2::new(6.0, 14.0),
            ]],
            Source::Reference,
        )
        .unwrap()
        .translated(0.05, 0.05)
        .unwrap();
        let r = regularize_detailed(&staircase(&truth, 0.23), &PostprocessConfig::default());
        assert_eq!(r.outcome, RegularizeOutcome::Snapped);
        assert_eq!(r.footprint.holes().len(), 1);
        assert_eq!(r.footprint.holes()[0].len(), 4);
    }

    #[test]
    fn collapse_is_reported() {
        let thin = Footprint::rect("x", 0.0, 0.0, 0.1, 0.1).unwrap();
        let cfg = PostprocessConfig {
            simplify_tol: 1.0,
            ..PostprocessConfig::default()
        };
        assert!(matches!(regularize(&thin, &cfg), Err(Error::RegularizationFailure(_))));
        let pinched = Footprint::new(
            "p",
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(2.0, 1.0),
                Point2::new(2.0, 2.0),
                Point2::new(1.0, 2.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![],
            Source::Predicted,
        )
        .unwrap();
        assert!(matches!(regularize(&pinched, &cfg), Err(Error::RegularizationFailure(_))));
        assert_eq!(regularize_detailed(&pinched, &cfg).footprint, pinched);
    }
}
