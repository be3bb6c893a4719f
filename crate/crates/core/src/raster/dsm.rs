use rayon::prelude::*;
use spade::{DelaunayTriangulation, HasPosition, Triangulation};

use super::{Grid, DEFAULT_NODATA};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::pointcloud::PointCloud;

pub const DEFAULT_DSM_CELL: f64 = 0.23;

#[derive(Debug, Clone, Copy)]
struct Sample {
    x: f64,
    y: f64,
    z: f64,
}

impl HasPosition for Sample {
    type Scalar = f64;
    fn position(&self) -> spade::Point2<f64> {
        spade::Point2::new(self.x, self.y)
    }
}

struct Tri {
    p: [Point2; 3],
    z: [f64; 3],
    det: f64,
    min_y: f64,
    max_y: f64,
    min_x: f64,
    max_x: f64,
}

/// DSM by Delaunay triangulation of the points' (x, y) with linear
/// interpolation of z at each cell center. Cells outside the convex hull are nodata.
pub fn rasterize_dsm(pc: &PointCloud, cell: f64) -> Result<Grid> {
    rasterize_dsm_banded(pc, cell, rayon::current_num_threads().max(1))
}

/// As [`rasterize_dsm`], with rows split into `bands` independently processed
/// chunks. The result does not depend on `bands`.
pub fn rasterize_dsm_banded(pc: &PointCloud, cell: f64, bands: usize) -> Result<Grid> {
    if !(cell > 0.0) || !cell.is_finite() {
        return Err(Error::Config(format!("DSM cell must be positive, got {cell}")));
    }
    if pc.len() < 3 {
        return Err(Error::Triangulation(format!("need at least 3 points, got {}", pc.len())));
    }
    let b = pc.bounds();
    // Shift to the lower-left corner so spade works on small coordinates.
    let (ox, oy) = (b.min_x, b.min_y);
    let samples: Vec<Sample> = pc
        .points()
        .iter()
        .map(|p| Sample {
            x: p.x - ox,
            y: p.y - oy,
            z: p.z,
        })
        .collect();
    let tin = DelaunayTriangulation::<Sample>::bulk_load(samples)
        .map_err(|e| Error::Triangulation(format!("{e:?}")))?;
    if tin.num_inner_faces() == 0 {
        return Err(Error::Triangulation("points are collinear".into()));
    }
    let tris: Vec<Tri> = tin
        .inner_faces()
        .map(|f| {
            let vs = f.vertices();
            let d = |k: usize| *vs[k].data();
            let (a, b, c) = (d(0), d(1), d(2));
            let p = [
                Point2::new(a.x + ox, a.y + oy),
                Point2::new(b.x + ox, b.y + oy),
                Point2::new(c.x + ox, c.y + oy),
            ];
            let det = p[1].sub(p[0]).cross(p[2].sub(p[0]));
            Tri {
                p,
                z: [a.z, b.z, c.z],
                det,
                min_x: p[0].x.min(p[1].x).min(p[2].x),
                max_x: p[0].x.max(p[1].x).max(p[2].x),
                min_y: p[0].y.min(p[1].y).min(p[2].y),
                max_y: p[0].y.max(p[1].y).max(p[2].y),
            }
        })
        .collect();

    // Lattice aligned to integer multiples of `cell`.
    let c0 = (b.min_x / cell).floor();
    let r0 = (b.min_y / cell).floor();
    let ncols = (((b.max_x / cell).ceil() - c0) as usize).max(1);
    let nrows = (((b.max_y / cell).ceil() - r0) as usize).max(1);
    let origin = Point2::new((c0 + 0.5) * cell, (r0 + 0.5) * cell);
    let mut grid = Grid::new(origin, cell, ncols, nrows, DEFAULT_NODATA, DEFAULT_NODATA)?;

    let rows_per_band = nrows.div_ceil(bands.max(1)).max(1);
    grid.values
        .par_chunks_mut(rows_per_band * ncols)
        .enumerate()
        .for_each(|(band, chunk)| {
            let row_start = band * rows_per_band;
            let nr = chunk.len() / ncols;
            let mut filled = vec![false; chunk.len()];
            let band_lo = origin.y + row_start as f64 * cell;
            let band_hi = origin.y + (row_start + nr - 1) as f64 * cell;
            for t in &tris {
                if t.max_y < band_lo || t.min_y > band_hi {
                    continue;
                }
                fill_triangle(t, origin, cell, ncols, row_start, nr, chunk, &mut filled);
            }
        });
    Ok(grid)
}

#[allow(clippy::too_many_arguments)]
fn fill_triangle(
    t: &Tri,
    origin: Point2,
    cell: f64,
    ncols: usize,
    row_start: usize,
    nr: usize,
    chunk: &mut [f64],
    filled: &mut [bool],
) {
    let eps = 1e-12;
    let col_lo = (((t.min_x - origin.x) / cell).floor() as i64).max(0) as usize;
    let col_hi = ((((t.max_x - origin.x) / cell).ceil() as i64).max(-1) + 1).min(ncols as i64);
    let row_lo = (((t.min_y - origin.y) / cell).floor() as i64).max(row_start as i64) as usize;
    let row_hi = ((((t.max_y - origin.y) / cell).ceil() as i64) + 1).min((row_start + nr) as i64);
    if col_hi <= 0 || row_hi <= row_lo as i64 {
        return;
    }
    let [a, b, c] = t.p;
    for row in row_lo..row_hi as usize {
        let y = origin.y + row as f64 * cell;
        for col in col_lo..col_hi as usize {
            let k = (row - row_start) * ncols + col;
            if filled[k] {
                continue;
            }
            let p = Point2::new(origin.x + col as f64 * cell, y);
            let l0 = b.sub(p).cross(c.sub(p)) / t.det;
            let l1 = c.sub(p).cross(a.sub(p)) / t.det;
            let l2 = 1.0 - l0 - l1;
            if l0 >= -eps && l1 >= -eps && l2 >= -eps {
                chunk[k] = l0 * t.z[0] + l1 * t.z[1] + l2 * t.z[2];
                filled[k] = true;
            }
        }
    }
}
