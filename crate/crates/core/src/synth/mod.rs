//! Synthetic classified point clouds with analytically known buildings.

mod perturb;

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{boundary_distance, point_in_polygon, Bounds, Footprint, Point2, Source};
use crate::heights::HeightMeasure;
use crate::pointcloud::{LidarPoint, PointCloud, CLASS_BUILDING, CLASS_GROUND, DEFAULT_GROUND_RING};

pub use perturb::{merge_footprints, perturb_to_iou, perturb_to_iou_with, PerturbMode, Perturbed, IOU_TOLERANCE};

/// Points are kept at least this far from every footprint edge.
pub const EDGE_CLEARANCE: f64 = 0.1;
const PLACEMENT_TRIES: usize = 5000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoofKind {
    #[default]
    Flat,
    Gabled,
}

impl RoofKind {
    pub fn name(&self) -> &'static str {
        match self {
            RoofKind::Flat => "flat",
            RoofKind::Gabled => "gabled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Rect,
    #[serde(rename = "l-shape")]
    LShape,
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Rect => "rect",
            ShapeKind::LShape => "l-shape",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Terrain {
    #[default]
    Flat,
    /// Plane rising by `slope` metres per metre towards `azimuth_deg`
    /// (counter-clockwise from +x).
    Ramp {
        slope: f64,
        #[serde(default)]
        azimuth_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub targets: Vec<f64>,
    #[serde(default)]
    pub mode: PerturbMode,
    #[serde(default)]
    pub seed: u64,
}

fn d_origin() -> [f64; 2] {
    [0.0, 0.0]
}
fn d_rect_fraction() -> f64 {
    0.7
}
fn d_ridge_rise() -> [f64; 2] {
    [1.5, 3.0]
}
fn d_size_range() -> [f64; 2] {
    [6.0, 16.0]
}
fn d_min_gap() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    /// Width and height in metres.
    pub extent: [f64; 2],
    #[serde(default = "d_origin")]
    pub origin: [f64; 2],
    pub n_buildings: usize,
    /// Share of rectangles; the rest are L-shapes.
    #[serde(default = "d_rect_fraction")]
    pub rect_fraction: f64,
    /// Eave height above the base, metres.
    pub height_range: [f64; 2],
    #[serde(default)]
    pub roof: RoofKind,
    /// Ridge height above the eave for gabled roofs.
    #[serde(default = "d_ridge_rise")]
    pub ridge_rise: [f64; 2],
    /// Side length range of the bounding rectangle.
    #[serde(default = "d_size_range")]
    pub size_range: [f64; 2],
    /// Mean points per square metre.
    pub density: f64,
    #[serde(default)]
    pub z_noise: f64,
    #[serde(default)]
    pub terrain: Terrain,
    #[serde(default)]
    pub base_elevation: f64,
    #[serde(default = "d_min_gap")]
    pub min_gap: f64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn range_ok(r: [f64; 2], lo_min: f64) -> bool {
    r[0].is_finite() && r[1].is_finite() && r[0] >= lo_min && r[0] <= r[1]
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<SceneSpec> {
        let spec: SceneSpec = toml::from_str(text).map_err(|e| Error::Config(format!("scene spec: {}", e.message())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<SceneSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SceneSpec::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.density > 0.0) || !self.density.is_finite() {
            return bad(format!("density must be positive, got {}", self.density));
        }
        if !(self.extent[0] > 0.0 && self.extent[1] > 0.0) {
            return bad(format!("extent must be positive, got {:?}", self.extent));
        }
        if !range_ok(self.height_range, 0.0) || self.height_range[0] <= 0.0 {
            return bad(format!("height_range must be increasing and positive, got {:?}", self.height_range));
        }
        if !range_ok(self.size_range, 0.0) || self.size_range[0] < 2.0 {
            return bad(format!("size_range must be increasing with minimum 2 m, got {:?}", self.size_range));
        }
        if !range_ok(self.ridge_rise, 0.0) || (self.roof == RoofKind::Gabled && self.ridge_rise[0] <= 0.0) {
            return bad(format!("ridge_rise must be increasing and positive, got {:?}", self.ridge_rise));
        }
        if !(0.0..=1.0).contains(&self.rect_fraction) {
            return bad(format!("rect_fraction must lie in [0, 1], got {}", self.rect_fraction));
        }
        if !(self.z_noise >= 0.0) || !self.z_noise.is_finite() {
            return bad(format!("z_noise must be non-negative, got {}", self.z_noise));
        }
        if !(self.min_gap >= 1.0) {
            return bad(format!("min_gap must be at least 1 m, got {}", self.min_gap));
        }
        if let Terrain::Ramp { slope, azimuth_deg } = self.terrain {
            if !slope.is_finite() || !azimuth_deg.is_finite() {
                return bad("ramp slope and azimuth must be finite".into());
            }
        }
        if let Some(s) = &self.sweep {
            if let Some(t) = s.targets.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
                return bad(format!("sweep target must lie in (0, 1], got {t}"));
            }
        }
        Ok(())
    }

    pub fn terrain_z(&self, p: Point2) -> f64 {
        match self.terrain {
            Terrain::Flat => self.base_elevation,
            Terrain::Ramp { slope, azimuth_deg } => {
                let a = azimuth_deg.to_radians();
                let d = (p.x - self.origin[0]) * a.cos() + (p.y - self.origin[1]) * a.sin();
                self.base_elevation + slope * d
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthBuilding {
    pub id: String,
    pub shape: ShapeKind,
    pub roof: RoofKind,
    #[serde(skip)]
    pub footprint: Footprint,
    /// Rectangles whose union is the footprint; each carries its own gable.
    #[serde(skip)]
    pub parts: Vec<Bounds>,
    pub base: f64,
    pub eave: f64,
    pub ridge: f64,
    pub area: f64,
    pub perimeter: f64,
    /// Exact height per measure where the roof shape determines it.
    pub heights: BTreeMap<HeightMeasure, f64>,
    /// Perimeter times the height of each measure.
    pub wall_areas: BTreeMap<HeightMeasure, f64>,
}

impl TruthBuilding {
    /// Roof elevation at `p`, which must lie inside the footprint.
    pub fn roof_z(&self, p: Point2) -> f64 {
        match self.roof {
            RoofKind::Flat => self.eave,
            RoofKind::Gabled => {
                let rise = self.ridge - self.eave;
                self.parts
                    .iter()
                    .filter(|b| b.contains(p.x, p.y))
                    .map(|b| {
                        let (half, off) = if b.width() >= b.height() {
                            (0.5 * b.height(), (p.y - 0.5 * (b.min_y + b.max_y)).abs())
                        } else {
                            (0.5 * b.width(), (p.x - 0.5 * (b.min_x + b.max_x)).abs())
                        };
                        self.eave + rise * (1.0 - off / half).max(0.0)
                    })
                    .fold(self.eave, f64::max)
            }
        }
    }

    pub fn height(&self) -> f64 {
        self.eave - self.base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub buildings: Vec<TruthBuilding>,
}

impl GroundTruth {
    pub fn footprints(&self) -> Vec<Footprint> {
        self.buildings.iter().map(|b| b.footprint.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&TruthBuilding> {
        self.buildings.iter().find(|b| b.id == id)
    }

    pub fn write_csv_to<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "id",
            "shape",
            "roof",
            "base_m",
            "eave_m",
            "ridge_m",
            "area_m2",
            "perimeter_m",
            "measure",
            "height_m",
            "wall_area_m2",
        ])?;
        for b in &self.buildings {
            for (m, h) in &b.heights {
                wr.write_record([
                    b.id.clone(),
                    b.shape.name().into(),
                    b.roof.name().into(),
                    format!("{:.6}", b.base),
                    format!("{:.6}", b.eave),
                    format!("{:.6}", b.ridge),
                    format!("{:.6}", b.area),
                    format!("{:.6}", b.perimeter),
                    m.name().into(),
                    format!("{h:.6}"),
                    format!("{:.6}", b.wall_areas[m]),
                ])?;
            }
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(f))
    }
}

fn rect_bounds(x0: f64, y0: f64, x1: f64, y1: f64) -> Bounds {
    let mut b = Bounds::empty();
    b.extend(x0, y0);
    b.extend(x1, y1);
    b
}

/// Footprint and constituent rectangles of an L-shape whose notch of size
/// `nw × nl` is cut from corner `corner` (0 = lower-left, counter-clockwise).
fn l_shape(id: &str, x0: f64, y0: f64, w: f64, l: f64, nw: f64, nl: f64, corner: usize) -> Result<(Footprint, Vec<Bounds>)> {
    let (x1, y1) = (x0 + w, y0 + l);
    let p = Point2::new;
    let (ring, parts) = match corner {
        0 => (
            vec![p(x0 + nw, y0), p(x1, y0), p(x1, y1), p(x0, y1), p(x0, y0 + nl), p(x0 + nw, y0 + nl)],
            vec![rect_bounds(x0 + nw, y0, x1, y1), rect_bounds(x0, y0 + nl, x1, y1)],
        ),
        1 => (
            vec![p(x0, y0), p(x1 - nw, y0), p(x1 - nw, y0 + nl), p(x1, y0 + nl), p(x1, y1), p(x0, y1)],
            vec![rect_bounds(x0, y0, x1 - nw, y1), rect_bounds(x0, y0 + nl, x1, y1)],
        ),
        2 => (
            vec![p(x0, y0), p(x1, y0), p(x1, y1 - nl), p(x1 - nw, y1 - nl), p(x1 - nw, y1), p(x0, y1)],
            vec![rect_bounds(x0, y0, x1, y1 - nl), rect_bounds(x0, y0, x1 - nw, y1)],
        ),
        _ => (
            vec![p(x0, y0), p(x1, y0), p(x1, y1), p(x0 + nw, y1), p(x0 + nw, y1 - nl), p(x0, y1 - nl)],
            vec![rect_bounds(x0, y0, x1, y1 - nl), rect_bounds(x0 + nw, y0, x1, y1)],
        ),
    };
    Ok((Footprint::new(id, ring, vec![], Source::Reference)?, parts))
}

fn truth_heights(shape: ShapeKind, roof: RoofKind, h: f64, rise: f64) -> BTreeMap<HeightMeasure, f64> {
    use HeightMeasure::*;
    match (roof, shape) {
        (RoofKind::Flat, _) => BTreeMap::from([(Maximum, h), (Median, h), (Mode, h), (P90, h), (Range, 0.0)]),
        // roof elevation is uniform on [eave, ridge] over a single gable
        (RoofKind::Gabled, ShapeKind::Rect) => BTreeMap::from([
            (Maximum, h + rise),
            (Median, h + 0.5 * rise),
            (P90, h + 0.9 * rise),
            (Range, rise),
        ]),
        (RoofKind::Gabled, ShapeKind::LShape) => BTreeMap::from([(Maximum, h + rise), (Range, rise)]),
    }
}

fn place_buildings(spec: &SceneSpec) -> Result<Vec<TruthBuilding>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let margin = DEFAULT_GROUND_RING + 0.5;
    let (ox, oy) = (spec.origin[0], spec.origin[1]);
    let (ex, ey) = (spec.extent[0], spec.extent[1]);
    let mut placed: Vec<TruthBuilding> = Vec::with_capacity(spec.n_buildings);
    let width = (spec.n_buildings.max(1)).to_string().len().max(3);
    for i in 0..spec.n_buildings {
        let id = format!("b{:0width$}", i + 1);
        let mut ok = None;
        for _ in 0..PLACEMENT_TRIES {
            let w = rng.gen_range(spec.size_range[0]..=spec.size_range[1]);
            let l = rng.gen_range(spec.size_range[0]..=spec.size_range[1]);
            if w + 2.0 * margin > ex || l + 2.0 * margin > ey {
                continue;
            }
            let x0 = ox + rng.gen_range(margin..=ex - margin - w);
            let y0 = oy + rng.gen_range(margin..=ey - margin - l);
            let b = rect_bounds(x0, y0, x0 + w, y0 + l);
            let grown = b.expanded(spec.min_gap);
            let shape = if rng.gen_bool(spec.rect_fraction) { ShapeKind::Rect } else { ShapeKind::LShape };
            let nwf = rng.gen_range(0.35..=0.6);
            let nlf = rng.gen_range(0.35..=0.6);
            let corner = rng.gen_range(0..4usize);
            let h = rng.gen_range(spec.height_range[0]..=spec.height_range[1]);
            let rise = rng.gen_range(spec.ridge_rise[0]..=spec.ridge_rise[1]);
            if placed.iter().any(|p| {
                let pb = p.footprint.bounds();
                grown.min_x < pb.max_x && pb.min_x < grown.max_x && grown.min_y < pb.max_y && pb.min_y < grown.max_y
            }) {
                continue;
            }
            let (fp, parts) = match shape {
                ShapeKind::Rect => (Footprint::rect(id.clone(), x0, y0, x0 + w, y0 + l)?, vec![b]),
                ShapeKind::LShape => l_shape(&id, x0, y0, w, l, nwf * w, nlf * l, corner)?,
            };
            ok = Some((fp, parts, shape, h, rise));
            break;
        }
        let Some((footprint, parts, shape, h, rise)) = ok else {
            return Err(Error::SpecTooDense(format!(
                "placed {i} of {} buildings after {PLACEMENT_TRIES} attempts for the next",
                spec.n_buildings
            )));
        };
        let rise = if spec.roof == RoofKind::Gabled { rise } else { 0.0 };
        let base = spec.terrain_z(footprint.centroid());
        let heights = truth_heights(shape, spec.roof, h, rise);
        let perimeter = footprint.perimeter();
        placed.push(TruthBuilding {
            id,
            shape,
            roof: spec.roof,
            area: footprint.area(),
            perimeter,
            wall_areas: heights.iter().map(|(m, v)| (*m, perimeter * v)).collect(),
            heights,
            footprint,
            parts,
            base,
            eave: base + h,
            ridge: base + h + rise,
        });
    }
    Ok(placed)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |d| d.sample(rng) as usize)
}

fn noise(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("positive sigma").sample(rng)
    } else {
        0.0
    }
}

fn roof_points(spec: &SceneSpec, b: &TruthBuilding, idx: usize) -> Vec<LidarPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ idx as u64);
    rng.set_stream(1);
    let n = poisson(&mut rng, spec.density * b.area);
    let bb = b.footprint.bounds();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Point2::new(rng.gen_range(bb.min_x..bb.max_x), rng.gen_range(bb.min_y..bb.max_y));
        if !point_in_polygon(p, &b.footprint) || boundary_distance(p, &b.footprint) < EDGE_CLEARANCE {
            continue;
        }
        let z = b.roof_z(p) + noise(&mut rng, spec.z_noise);
        out.push(LidarPoint::new(p.x, p.y, z, CLASS_BUILDING));
    }
    out
}

fn ground_points(spec: &SceneSpec, buildings: &[TruthBuilding]) -> Vec<LidarPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(2);
    let built: f64 = buildings.iter().map(|b| b.area).sum();
    let n = poisson(&mut rng, spec.density * (spec.extent[0] * spec.extent[1] - built).max(0.0));
    let boxes: Vec<Bounds> = buildings.iter().map(|b| b.footprint.bounds().expanded(EDGE_CLEARANCE)).collect();
    let (ox, oy) = (spec.origin[0], spec.origin[1]);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Point2::new(ox + rng.gen_range(0.0..spec.extent[0]), oy + rng.gen_range(0.0..spec.extent[1]));
        let blocked = buildings.iter().zip(&boxes).any(|(b, bx)| {
            bx.contains(p.x, p.y)
                && (point_in_polygon(p, &b.footprint) || boundary_distance(p, &b.footprint) < EDGE_CLEARANCE)
        });
        if blocked {
            continue;
        }
        let z = spec.terrain_z(p) + noise(&mut rng, spec.z_noise);
        out.push(LidarPoint::new(p.x, p.y, z, CLASS_GROUND));
    }
    out
}

/// Ground points first, then roof points building by building. Identical
/// specs give identical clouds.
pub fn generate_scene(spec: &SceneSpec) -> Result<(PointCloud, GroundTruth)> {
    spec.validate()?;
    let buildings = place_buildings(spec)?;
    let roofs: Vec<Vec<LidarPoint>> = buildings
        .par_iter()
        .enumerate()
        .map(|(i, b)| roof_points(spec, b, i))
        .collect();
    let mut pts = ground_points(spec, &buildings);
    for r in roofs {
        pts.extend(r);
    }
    Ok((PointCloud::new(pts)?, GroundTruth { buildings }))
}
