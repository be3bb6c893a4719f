//! Georeferenced grids: DSM interpolation, binary-mask filtering and
//! mask/polygon conversion.
//!
//! Values are stored row-major with row 0 at the *southern* edge, so the center
//! of cell `(col, row)` is `origin + (col·cell, row·cell)`. The ESRI ASCII codec
//! flips rows on the way in and out.

pub mod ascii;
mod dsm;
mod filter;
mod polygonize;

use crate::error::{Error, Result};
use crate::geometry::{rasterize_cells, Bounds, Footprint, Point2};

pub use dsm::{rasterize_dsm, rasterize_dsm_banded, DEFAULT_DSM_CELL};
pub use filter::majority_filter;
pub use polygonize::{polygonize, Connectivity};

pub const DEFAULT_NODATA: f64 = -9999.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    origin: Point2,
    cell: f64,
    ncols: usize,
    nrows: usize,
    values: Vec<f64>,
    nodata: f64,
}

impl Grid {
    /// `origin` is the center of the lower-left cell.
    pub fn new(origin: Point2, cell: f64, ncols: usize, nrows: usize, fill: f64, nodata: f64) -> Result<Grid> {
        Grid::from_values(origin, cell, ncols, nrows, vec![fill; ncols * nrows], nodata)
    }

    pub fn from_values(
        origin: Point2,
        cell: f64,
        ncols: usize,
        nrows: usize,
        values: Vec<f64>,
        nodata: f64,
    ) -> Result<Grid> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::Domain(format!("cell size must be positive, got {cell}")));
        }
        if !origin.is_finite() {
            return Err(Error::Domain("grid origin must be finite".into()));
        }
        if values.len() != ncols * nrows {
            return Err(Error::Domain(format!(
                "{} values for a {ncols}x{nrows} grid",
                values.len()
            )));
        }
        Ok(Grid {
            origin,
            cell,
            ncols,
            nrows,
            values,
            nodata,
        })
    }

    /// Builds a grid from rows listed north to south (the way masks are usually drawn).
    pub fn from_rows_top_down(origin: Point2, cell: f64, rows: &[Vec<f64>], nodata: f64) -> Result<Grid> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Domain("ragged rows".into()));
        }
        let values = rows.iter().rev().flatten().copied().collect();
        Grid::from_values(origin, cell, ncols, nrows, values, nodata)
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: f64) {
        self.values[row * self.ncols + col] = v;
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata || v.is_nan()
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        Point2::new(
            self.origin.x + col as f64 * self.cell,
            self.origin.y + row as f64 * self.cell,
        )
    }

    /// Outer edges of the grid in world coordinates.
    pub fn extent(&self) -> Bounds {
        let h = 0.5 * self.cell;
        Bounds {
            min_x: self.origin.x - h,
            min_y: self.origin.y - h,
            max_x: self.origin.x - h + self.ncols as f64 * self.cell,
            max_y: self.origin.y - h + self.nrows as f64 * self.cell,
        }
    }

    /// Same georeferencing, every cell set to `fill`.
    pub fn like(&self, fill: f64) -> Grid {
        Grid {
            values: vec![fill; self.values.len()],
            ..self.clone()
        }
    }

    /// True when every cell is 0, 1 or nodata.
    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0 || self.is_nodata(v))
    }

    pub(crate) fn require_binary(&self, what: &str) -> Result<()> {
        if self.is_binary() {
            Ok(())
        } else {
            Err(Error::Domain(format!("{what} requires a binary grid (0, 1, nodata)")))
        }
    }

    pub fn count_value(&self, v: f64) -> usize {
        self.values.iter().filter(|&&x| x == v).count()
    }

    pub fn count_nodata(&self) -> usize {
        self.values.iter().filter(|&&x| self.is_nodata(x)).count()
    }

    /// Cell containing world point `p`, if any.
    pub fn locate(&self, p: Point2) -> Option<(usize, usize)> {
        let c = ((p.x - self.origin.x) / self.cell + 0.5).floor();
        let r = ((p.y - self.origin.y) / self.cell + 0.5).floor();
        if c < 0.0 || r < 0.0 || c >= self.ncols as f64 || r >= self.nrows as f64 {
            return None;
        }
        Some((c as usize, r as usize))
    }
}

/// Binary grid on `template`'s lattice: 1 where the cell center is inside `fp`.
pub fn rasterize_polygon(fp: &Footprint, template: &Grid) -> Grid {
    let cov = rasterize_cells(
        fp,
        template.origin.x,
        template.origin.y,
        template.cell,
        template.ncols,
        template.nrows,
    );
    let values = cov.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    Grid {
        values,
        ..template.clone()
    }
}
