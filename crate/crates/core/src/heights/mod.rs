//! Per-building height measures from clipped LiDAR points, plus the ground
//! base elevation they are measured from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, Footprint};
use crate::pointcloud::{PointCloud, CLASS_BUILDING, CLASS_GROUND, DEFAULT_GROUND_RING};
use crate::raster::Grid;

pub const DEFAULT_MODE_BIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightMeasure {
    Maximum,
    Range,
    Mode,
    Median,
    P90,
}

impl HeightMeasure {
    pub const ALL: [HeightMeasure; 5] = [
        HeightMeasure::Maximum,
        HeightMeasure::Range,
        HeightMeasure::Mode,
        HeightMeasure::Median,
        HeightMeasure::P90,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HeightMeasure::Maximum => "maximum",
            HeightMeasure::Range => "range",
            HeightMeasure::Mode => "mode",
            HeightMeasure::Median => "median",
            HeightMeasure::P90 => "p90",
        }
    }
}

impl fmt::Display for HeightMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeightMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maximum" | "max" => Ok(HeightMeasure::Maximum),
            "range" => Ok(HeightMeasure::Range),
            "mode" => Ok(HeightMeasure::Mode),
            "median" => Ok(HeightMeasure::Median),
            "p90" | "percentile90" => Ok(HeightMeasure::P90),
            _ => Err(Error::Config(format!(
                "unknown height measure `{s}` (expected maximum, range, mode, median or p90)"
            ))),
        }
    }
}

/// How the 90th percentile picks between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PercentileMethod {
    #[default]
    Linear,
    NearestRank,
}

fn no_points() -> Error {
    Error::NoPoints { id: None }
}

pub fn stat_max(zs: &[f64]) -> Result<f64> {
    zs.iter().copied().max_by(f64::total_cmp).ok_or_else(no_points)
}

pub fn stat_min(zs: &[f64]) -> Result<f64> {
    zs.iter().copied().min_by(f64::total_cmp).ok_or_else(no_points)
}

pub fn stat_range(zs: &[f64]) -> Result<f64> {
    Ok(stat_max(zs)? - stat_min(zs)?)
}

/// k-th smallest and, when it exists, the (k+1)-th.
fn order_pair(zs: &[f64], k: usize) -> (f64, Option<f64>) {
    let mut v = zs.to_vec();
    let (_, kth, upper) = v.select_nth_unstable_by(k, f64::total_cmp);
    let kth = *kth;
    (kth, upper.iter().copied().min_by(f64::total_cmp))
}

pub fn stat_median(zs: &[f64]) -> Result<f64> {
    let n = zs.len();
    if n == 0 {
        return Err(no_points());
    }
    if n % 2 == 1 {
        Ok(order_pair(zs, n / 2).0)
    } else {
        let (a, b) = order_pair(zs, n / 2 - 1);
        Ok(0.5 * (a + b.unwrap_or(a)))
    }
}

pub fn stat_p90(zs: &[f64]) -> Result<f64> {
    stat_percentile(zs, 0.9, PercentileMethod::Linear)
}

/// `q` in [0, 1]. Linear interpolates at position q·(n−1) of the sorted
/// sample; nearest-rank takes element ⌈q·n⌉ (1-based).
pub fn stat_percentile(zs: &[f64], q: f64, method: PercentileMethod) -> Result<f64> {
    let n = zs.len();
    if n == 0 {
        return Err(no_points());
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("percentile must be in [0, 1], got {q}")));
    }
    match method {
        PercentileMethod::Linear => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let (a, b) = order_pair(zs, lo);
            match b {
                Some(b) if frac > 0.0 => Ok(a + frac * (b - a)),
                _ => Ok(a),
            }
        }
        PercentileMethod::NearestRank => {
            let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
            Ok(order_pair(zs, rank - 1).0)
        }
    }
}

/// Bin index with `k·bin <= z < (k+1)·bin` holding in floating point.
pub fn mode_bin_index(z: f64, bin: f64) -> i64 {
    let mut k = (z / bin).floor() as i64;
    if k as f64 * bin > z {
        k -= 1;
    } else if (k + 1) as f64 * bin <= z {
        k += 1;
    }
    k
}

/// Center of the most populated `bin`-wide bin; ties go to the lowest bin.
pub fn stat_mode(zs: &[f64], bin: f64) -> Result<f64> {
    if !(bin > 0.0) || !bin.is_finite() {
        return Err(Error::Domain(format!("mode bin must be positive, got {bin}")));
    }
    if zs.is_empty() {
        return Err(no_points());
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &z in zs {
        *counts.entry(mode_bin_index(z, bin)).or_default() += 1;
    }
    let mut best = (i64::MIN, 0usize);
    for (&k, &c) in &counts {
        if c > best.1 {
            best = (k, c);
        }
    }
    Ok((best.0 as f64 + 0.5) * bin)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightConfig {
    pub mode_bin: f64,
    pub ground_ring: f64,
    pub p90_method: PercentileMethod,
    pub building_classes: BTreeSet<u8>,
    pub ground_classes: BTreeSet<u8>,
}

impl Default for HeightConfig {
    fn default() -> Self {
        HeightConfig {
            mode_bin: DEFAULT_MODE_BIN,
            ground_ring: DEFAULT_GROUND_RING,
            p90_method: PercentileMethod::Linear,
            building_classes: BTreeSet::from([CLASS_BUILDING]),
            ground_classes: BTreeSet::from([CLASS_GROUND]),
        }
    }
}

impl HeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mode_bin > 0.0) || !self.mode_bin.is_finite() {
            return Err(Error::Config(format!("mode bin must be positive, got {}", self.mode_bin)));
        }
        if !(self.ground_ring > 0.0) || !self.ground_ring.is_finite() {
            return Err(Error::Config(format!(
                "ground ring width must be positive, got {}",
                self.ground_ring
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeightFlag {
    /// No ground points around the footprint; base is the lowest building point.
    BaseFallback,
    /// A measure fell below the base and was clamped to zero height.
    NegativeClamped,
}

impl HeightFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeightFlag::BaseFallback => "base_fallback",
            HeightFlag::NegativeClamped => "negative_height_clamped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingHeights {
    pub id: String,
    pub base_elev: f64,
    /// Roof elevation per measure. For range this is `base_elev + range`.
    pub top_elev: BTreeMap<HeightMeasure, f64>,
    pub height: BTreeMap<HeightMeasure, f64>,
    pub n_points: usize,
    pub n_ground: usize,
    /// Nodata cells skipped (DSM mode only).
    pub n_excluded: usize,
    pub flags: BTreeSet<HeightFlag>,
}

impl BuildingHeights {
    pub fn get(&self, m: HeightMeasure) -> Option<f64> {
        self.height.get(&m).copied()
    }
}

/// Median ground z, or `None` without ground points.
pub fn base_elevation(ground: &[f64]) -> Option<f64> {
    stat_median(ground).ok()
}

pub fn measure_value(zs: &[f64], m: HeightMeasure, cfg: &HeightConfig) -> Result<f64> {
    match m {
        HeightMeasure::Maximum => stat_max(zs),
        HeightMeasure::Range => stat_range(zs),
        HeightMeasure::Mode => stat_mode(zs, cfg.mode_bin),
        HeightMeasure::Median => stat_median(zs),
        HeightMeasure::P90 => stat_percentile(zs, 0.9, cfg.p90_method),
    }
}

pub fn building_heights(pc: &PointCloud, fp: &Footprint, measures: &[HeightMeasure]) -> Result<BuildingHeights> {
    building_heights_with(pc, fp, measures, &HeightConfig::default())
}

/// Measures on the building-class points inside `fp`, relative to the median
/// ground elevation in a ring around it.
pub fn building_heights_with(
    pc: &PointCloud,
    fp: &Footprint,
    measures: &[HeightMeasure],
    cfg: &HeightConfig,
) -> Result<BuildingHeights> {
    cfg.validate()?;
    let zs: Vec<f64> = pc
        .clip_to_footprint(fp)
        .points()
        .iter()
        .filter(|p| cfg.building_classes.contains(&p.class))
        .map(|p| p.z)
        .collect();
    let ground: Vec<f64> = pc
        .ground_ring_points(fp, cfg.ground_ring, &cfg.ground_classes)
        .points()
        .iter()
        .map(|p| p.z)
        .collect();
    assemble(&fp.id, &zs, &ground, 0, measures, cfg)
}

/// As [`building_heights_with`], but the sample is the DSM cells whose centers
/// fall inside `fp`. Nodata cells are skipped and counted.
pub fn building_heights_dsm(
    dsm: &Grid,
    pc: &PointCloud,
    fp: &Footprint,
    measures: &[HeightMeasure],
    cfg: &HeightConfig,
) -> Result<BuildingHeights> {
    cfg.validate()?;
    let b = fp.bounds();
    let mut zs = Vec::new();
    let mut excluded = 0;
    let lo = dsm.locate(crate::geometry::Point2::new(b.min_x, b.min_y));
    let hi = dsm.locate(crate::geometry::Point2::new(b.max_x, b.max_y));
    let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n.saturating_sub(1));
    let (c0, r0) = lo.unwrap_or((
        clamp((b.min_x - dsm.origin().x) / dsm.cell(), dsm.ncols()),
        clamp((b.min_y - dsm.origin().y) / dsm.cell(), dsm.nrows()),
    ));
    let (c1, r1) = hi.unwrap_or((
        clamp((b.max_x - dsm.origin().x) / dsm.cell() + 1.0, dsm.ncols()),
        clamp((b.max_y - dsm.origin().y) / dsm.cell() + 1.0, dsm.nrows()),
    ));
    for r in r0..=r1.min(dsm.nrows().saturating_sub(1)) {
        for c in c0..=c1.min(dsm.ncols().saturating_sub(1)) {
            if !point_in_polygon(dsm.cell_center(c, r), fp) {
                continue;
            }
            let v = dsm.get(c, r);
            if dsm.is_nodata(v) {
                excluded += 1;
            } else {
                zs.push(v);
            }
        }
    }
    let ground: Vec<f64> = pc
        .ground_ring_points(fp, cfg.ground_ring, &cfg.ground_classes)
        .points()
        .iter()
        .map(|p| p.z)
        .collect();
    assemble(&fp.id, &zs, &ground, excluded, measures, cfg)
}

fn assemble(
    id: &str,
    zs: &[f64],
    ground: &[f64],
    n_excluded: usize,
    measures: &[HeightMeasure],
    cfg: &HeightConfig,
) -> Result<BuildingHeights> {
    if zs.is_empty() {
        return Err(Error::NoPoints { id: Some(id.to_string()) });
    }
    let mut flags = BTreeSet::new();
    let base = match base_elevation(ground) {
        Some(b) => b,
        None => {
            flags.insert(HeightFlag::BaseFallback);
            stat_min(zs)?
        }
    };
    let mut top_elev = BTreeMap::new();
    let mut height = BTreeMap::new();
    for &m in measures {
        let v = measure_value(zs, m, cfg)?;
        let (top, h) = match m {
            HeightMeasure::Range => (base + v, v),
            _ => (v, v - base),
        };
        let h = if h < 0.0 {
            flags.insert(HeightFlag::NegativeClamped);
            0.0
        } else {
            h
        };
        top_elev.insert(m, top);
        height.insert(m, h);
    }
    Ok(BuildingHeights {
        id: id.to_string(),
        base_elev: base,
        top_elev,
        height,
        n_points: zs.len(),
        n_ground: ground.len(),
        n_excluded,
        flags,
    })
}
