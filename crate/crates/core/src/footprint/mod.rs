//! Binary segmentation masks to vector footprints: tile merge, majority
//! filter, polygonize, small-area removal, buffer and regularization.

mod regularize;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{buffer_polygon, polygon_iou, Footprint, Point2, DEFAULT_IOU_CELL};
use crate::raster::{majority_filter, polygonize, Connectivity, Grid, DEFAULT_NODATA};

pub use regularize::{regularize, regularize_detailed, simplify_ring, RegularizeOutcome, Regularized};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostprocessConfig {
    /// m²; footprints below this are dropped.
    pub min_area: f64,
    /// m; outward buffer applied before regularization.
    pub buffer_dist: f64,
    /// m; Douglas–Peucker tolerance.
    pub simplify_tol: f64,
    /// degrees
    pub snap_angle_tol: f64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        PostprocessConfig {
            min_area: 10.0,
            buffer_dist: 0.05,
            simplify_tol: 0.3,
            snap_angle_tol: 15.0,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("min_area", self.min_area),
            ("buffer_dist", self.buffer_dist),
            ("simplify_tol", self.simplify_tol),
            ("snap_angle_tol", self.snap_angle_tol),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        if self.snap_angle_tol >= 45.0 {
            return Err(Error::Config(format!(
                "snap_angle_tol must be below 45 degrees, got {}",
                self.snap_angle_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostprocessFlag {
    BufferFailed,
    RegularizedSimplifiedOnly,
    RegularizeFailed,
    OverlapReverted,
}

impl PostprocessFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PostprocessFlag::BufferFailed => "buffer_failed",
            PostprocessFlag::RegularizedSimplifiedOnly => "regularize_simplified_only",
            PostprocessFlag::RegularizeFailed => "regularize_failed",
            PostprocessFlag::OverlapReverted => "overlap_reverted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Processed {
    pub footprint: Footprint,
    pub flags: Vec<PostprocessFlag>,
}

/// Union of tiles on a common lattice; overlapping cells are OR-ed and cells
/// no tile covers are nodata.
pub fn merge_tiles(tiles: &[Grid]) -> Result<Grid> {
    let first = tiles.first().ok_or_else(|| Error::Alignment("no tiles to merge".into()))?;
    let cell = first.cell();
    let o = first.origin();
    let mut offsets = Vec::with_capacity(tiles.len());
    let (mut c_lo, mut r_lo, mut c_hi, mut r_hi) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
    for (i, t) in tiles.iter().enumerate() {
        t.require_binary("merge_tiles")?;
        if (t.cell() - cell).abs() > 1e-9 * cell {
            return Err(Error::Alignment(format!(
                "tile {i} has cell size {} but tile 0 has {cell}",
                t.cell()
            )));
        }
        let fc = (t.origin().x - o.x) / cell;
        let fr = (t.origin().y - o.y) / cell;
        if (fc - fc.round()).abs() > 1e-6 || (fr - fr.round()).abs() > 1e-6 {
            return Err(Error::Alignment(format!(
                "tile {i} origin is not on tile 0's lattice (offset {fc} x {fr} cells)"
            )));
        }
        let (dc, dr) = (fc.round() as i64, fr.round() as i64);
        offsets.push((dc, dr));
        c_lo = c_lo.min(dc);
        r_lo = r_lo.min(dr);
        c_hi = c_hi.max(dc + t.ncols() as i64);
        r_hi = r_hi.max(dr + t.nrows() as i64);
    }
    let origin = Point2::new(o.x + c_lo as f64 * cell, o.y + r_lo as f64 * cell);
    let mut out = Grid::new(
        origin,
        cell,
        (c_hi - c_lo) as usize,
        (r_hi - r_lo) as usize,
        DEFAULT_NODATA,
        DEFAULT_NODATA,
    )?;
    for (t, (dc, dr)) in tiles.iter().zip(offsets) {
        for r in 0..t.nrows() {
            for c in 0..t.ncols() {
                let v = t.get(c, r);
                if t.is_nodata(v) {
                    continue;
                }
                let (oc, or) = ((dc - c_lo) as usize + c, (dr - r_lo) as usize + r);
                if out.get(oc, or) != 1.0 {
                    out.set(oc, or, v);
                }
            }
        }
    }
    Ok(out)
}

pub fn drop_small(fps: Vec<Footprint>, min_area: f64) -> Vec<Footprint> {
    fps.into_iter().filter(|f| f.area() >= min_area).collect()
}

/// The full chain; see [`postprocess_detailed`] for per-footprint flags.
pub fn postprocess(mask: &Grid, cfg: &PostprocessConfig) -> Result<Vec<Footprint>> {
    Ok(postprocess_detailed(mask, cfg)?.into_iter().map(|p| p.footprint).collect())
}

/// majority filter → polygonize (eight-connected) → drop small → buffer →
/// regularize. Output order follows footprint ids.
///
/// A footprint whose buffer fails keeps its unbuffered shape. Regularized
/// footprints that end up overlapping a neighbour revert to their
/// pre-regularization shape.
pub fn postprocess_detailed(mask: &Grid, cfg: &PostprocessConfig) -> Result<Vec<Processed>> {
    cfg.validate()?;
    let filtered = majority_filter(mask).map_err(|e| e.in_stage("majority_filter"))?;
    let polys = polygonize(&filtered, Connectivity::Eight).map_err(|e| e.in_stage("polygonize"))?;
    let kept = drop_small(polys, cfg.min_area);
    log::debug!("postprocess: {} footprints after drop_small", kept.len());

    let staged: Vec<(Footprint, Processed)> = kept
        .into_par_iter()
        .map(|fp| {
            let mut flags = Vec::new();
            let buffered = match buffer_polygon(&fp, cfg.buffer_dist) {
                Ok(b) => b,
                Err(Error::BufferFailure(msg)) => {
                    log::debug!("buffer failed for {}: {msg}", fp.id);
                    flags.push(PostprocessFlag::BufferFailed);
                    fp
                }
                Err(e) => return Err(e.in_stage("buffer")),
            };
            let r = regularize_detailed(&buffered, cfg);
            match r.outcome {
                RegularizeOutcome::Snapped => {}
                RegularizeOutcome::SimplifiedOnly => flags.push(PostprocessFlag::RegularizedSimplifiedOnly),
                RegularizeOutcome::Failed => flags.push(PostprocessFlag::RegularizeFailed),
            }
            Ok((
                buffered,
                Processed {
                    footprint: r.footprint,
                    flags,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let bounds: Vec<_> = staged.iter().map(|(_, p)| p.footprint.bounds()).collect();
    let mut revert = vec![false; staged.len()];
    for i in 0..staged.len() {
        for j in i + 1..staged.len() {
            if bounds[i].intersects(&bounds[j])
                && polygon_iou(&staged[i].1.footprint, &staged[j].1.footprint, DEFAULT_IOU_CELL) > 0.0
            {
                revert[i] = true;
                revert[j] = true;
            }
        }
    }
    Ok(staged
        .into_iter()
        .zip(revert)
        .map(|((pre, mut p), rev)| {
            if rev {
                p.footprint = pre;
                p.flags.push(PostprocessFlag::OverlapReverted);
            }
            p
        })
        .collect())
}
