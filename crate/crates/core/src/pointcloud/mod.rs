//! Classified LiDAR points with a uniform-grid spatial index.

pub mod las;
pub mod text;

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{buffer_polygon, convex_hull, point_in_polygon, Bounds, Footprint, Source};

/// ASPRS classification codes used throughout the pipeline.
pub const CLASS_GROUND: u8 = 2;
pub const CLASS_BUILDING: u8 = 6;

pub const DEFAULT_INDEX_CELL: f64 = 5.0;
pub const DEFAULT_GROUND_RING: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub class: u8,
}

impl LidarPoint {
    pub fn new(x: f64, y: f64, z: f64, class: u8) -> Self {
        LidarPoint { x, y, z, class }
    }
}

/// Compressed-row bucket index over (x, y).
#[derive(Debug, Clone)]
struct GridIndex {
    cell: f64,
    min_x: f64,
    min_y: f64,
    ncols: usize,
    nrows: usize,
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl GridIndex {
    fn build(points: &[LidarPoint], bounds: &Bounds, cell: f64) -> GridIndex {
        if points.is_empty() {
            return GridIndex {
                cell,
                min_x: 0.0,
                min_y: 0.0,
                ncols: 0,
                nrows: 0,
                offsets: vec![0],
                items: Vec::new(),
            };
        }
        let ncols = ((bounds.width() / cell).floor() as usize) + 1;
        let nrows = ((bounds.height() / cell).floor() as usize) + 1;
        let mut idx = GridIndex {
            cell,
            min_x: bounds.min_x,
            min_y: bounds.min_y,
            ncols,
            nrows,
            offsets: vec![0; ncols * nrows + 1],
            items: vec![0; points.len()],
        };
        let keys: Vec<usize> = points.iter().map(|p| idx.key(p.x, p.y)).collect();
        for &k in &keys {
            idx.offsets[k + 1] += 1;
        }
        for i in 0..ncols * nrows {
            idx.offsets[i + 1] += idx.offsets[i];
        }
        let mut fill = idx.offsets.clone();
        for (i, &k) in keys.iter().enumerate() {
            idx.items[fill[k]] = i as u32;
            fill[k] += 1;
        }
        idx
    }

    fn col(&self, x: f64) -> usize {
        (((x - self.min_x) / self.cell).floor().max(0.0) as usize).min(self.ncols - 1)
    }

    fn row(&self, y: f64) -> usize {
        (((y - self.min_y) / self.cell).floor().max(0.0) as usize).min(self.nrows - 1)
    }

    fn key(&self, x: f64, y: f64) -> usize {
        self.row(y) * self.ncols + self.col(x)
    }

    /// Point indices in cells overlapping `b`, ascending.
    fn candidates(&self, b: &Bounds) -> Vec<u32> {
        if self.ncols == 0 {
            return Vec::new();
        }
        let (c0, c1) = (self.col(b.min_x), self.col(b.max_x));
        let (r0, r1) = (self.row(b.min_y), self.row(b.max_y));
        let mut out = Vec::new();
        for r in r0..=r1 {
            let s = self.offsets[r * self.ncols + c0];
            let e = self.offsets[r * self.ncols + c1 + 1];
            out.extend_from_slice(&self.items[s..e]);
        }
        out.sort_unstable();
        out
    }
}

/// An immutable classified point cloud.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<LidarPoint>,
    bounds: Bounds,
    index: GridIndex,
}

impl PointCloud {
    pub fn new(points: Vec<LidarPoint>) -> Result<PointCloud> {
        PointCloud::with_index_cell(points, DEFAULT_INDEX_CELL)
    }

    pub fn with_index_cell(points: Vec<LidarPoint>, cell: f64) -> Result<PointCloud> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::Config(format!("index cell must be positive, got {cell}")));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::InvalidGeometry(format!(
                "non-finite point ({}, {}, {})",
                p.x, p.y, p.z
            )));
        }
        Ok(PointCloud::build(points, cell))
    }

    fn build(points: Vec<LidarPoint>, cell: f64) -> PointCloud {
        let mut bounds = Bounds::empty();
        for p in &points {
            bounds.extend(p.x, p.y);
        }
        let index = GridIndex::build(&points, &bounds, cell);
        PointCloud {
            points,
            bounds,
            index,
        }
    }

    pub fn empty() -> PointCloud {
        PointCloud::build(Vec::new(), DEFAULT_INDEX_CELL)
    }

    pub fn points(&self) -> &[LidarPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn index_cell(&self) -> f64 {
        self.index.cell
    }

    pub fn zs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.z).collect()
    }

    fn derive(&self, points: Vec<LidarPoint>) -> PointCloud {
        PointCloud::build(points, self.index.cell)
    }

    /// Points whose class is in `classes`, order preserved.
    pub fn filter_by_class(&self, classes: &BTreeSet<u8>) -> PointCloud {
        self.derive(
            self.points
                .iter()
                .filter(|p| classes.contains(&p.class))
                .copied()
                .collect(),
        )
    }

    /// Points inside `fp` (boundary inclusive), visiting only indexed candidate cells.
    pub fn clip_to_footprint(&self, fp: &Footprint) -> PointCloud {
        self.derive(self.clip_indices(fp).into_iter().map(|i| self.points[i as usize]).collect())
    }

    fn clip_indices(&self, fp: &Footprint) -> Vec<u32> {
        let b = fp.bounds();
        if !b.intersects(&self.bounds) {
            return Vec::new();
        }
        self.index
            .candidates(&b)
            .into_iter()
            .filter(|&i| {
                let p = &self.points[i as usize];
                point_in_polygon(crate::geometry::Point2::new(p.x, p.y), fp)
            })
            .collect()
    }

    /// Ground-class points inside `fp` grown by `ring_width`.
    pub fn ground_ring_points(&self, fp: &Footprint, ring_width: f64, ground_classes: &BTreeSet<u8>) -> PointCloud {
        let region = match buffer_polygon(fp, ring_width) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("ground ring for `{}`: {e}; using buffered convex hull", fp.id);
                let hull = convex_hull(fp.outer().vertices());
                Footprint::new(fp.id.clone(), hull, Vec::new(), Source::Reference)
                    .and_then(|h| buffer_polygon(&h, ring_width))
                    .unwrap_or_else(|_| fp.clone())
            }
        };
        let idx = self.clip_indices(&region);
        self.derive(
            idx.into_iter()
                .map(|i| self.points[i as usize])
                .filter(|p| ground_classes.contains(&p.class))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    Las,
    XyzcText,
}

impl PointFormat {
    /// `.las` files are binary LAS, everything else is `x y z class` text.
    pub fn from_path(path: &Path) -> PointFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("las") => PointFormat::Las,
            _ => PointFormat::XyzcText,
        }
    }
}

pub fn load_points(path: &Path, format: PointFormat) -> Result<PointCloud> {
    let points = match format {
        PointFormat::Las => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            las::parse_las(&bytes).map_err(|e| match e {
                Error::Parse { what, location, message } => Error::Parse {
                    what,
                    location: format!("{}: {location}", path.display()),
                    message,
                },
                other => other,
            })?
        }
        PointFormat::XyzcText => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            text::parse_xyzc(&text).map_err(|e| match e {
                Error::Parse { what, location, message } => Error::Parse {
                    what,
                    location: format!("{}:{location}", path.display()),
                    message,
                },
                other => other,
            })?
        }
    };
    PointCloud::new(points)
}
