use super::{crossing_parity, crossing_x, on_boundary, straddles, Footprint, Point2};

/// Default evaluation resolution for footprint overlap, in meters.
pub const DEFAULT_IOU_CELL: f64 = 0.05;

/// Boolean coverage of a cell lattice, row-major with row 0 at the lowest y.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRaster {
    pub ncols: usize,
    pub nrows: usize,
    pub bits: Vec<bool>,
}

impl CellRaster {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.ncols + col]
    }
}

/// Marks every cell whose center `(x0 + col·cell, y0 + row·cell)` satisfies
/// `point_in_polygon`. Scanline evaluation, exactly equivalent to the per-cell test.
pub fn rasterize_cells(
    fp: &Footprint,
    x0: f64,
    y0: f64,
    cell: f64,
    ncols: usize,
    nrows: usize,
) -> CellRaster {
    let mut bits = vec![false; ncols * nrows];
    let b = fp.bounds();
    let mut vertex_ys: Vec<f64> = fp.rings().flat_map(|r| r.vertices().iter().map(|p| p.y)).collect();
    vertex_ys.sort_by(f64::total_cmp);
    vertex_ys.dedup();

    let col_range = |lo: f64, hi: f64| -> (usize, usize) {
        let c0 = ((lo - x0) / cell).floor() - 1.0;
        let c1 = ((hi - x0) / cell).ceil() + 1.0;
        let c0 = c0.max(0.0).min(ncols as f64) as usize;
        let c1 = (c1 + 1.0).max(0.0).min(ncols as f64) as usize;
        (c0, c1)
    };
    let (c0, c1) = col_range(b.min_x, b.max_x);
    let r0 = (((b.min_y - y0) / cell).floor() - 1.0).max(0.0).min(nrows as f64) as usize;
    let r1 = (((b.max_y - y0) / cell).ceil() + 2.0).max(0.0).min(nrows as f64) as usize;

    let mut xs: Vec<f64> = Vec::new();
    for row in r0..r1 {
        let y = y0 + row as f64 * cell;
        if y < b.min_y || y > b.max_y {
            continue;
        }
        let base = row * ncols;
        if vertex_ys.binary_search_by(|v| v.total_cmp(&y)).is_ok() {
            // Rows through a vertex or a horizontal edge: fall back to the direct test.
            for col in c0..c1 {
                let p = Point2::new(x0 + col as f64 * cell, y);
                if p.x >= b.min_x && p.x <= b.max_x && (crossing_parity(p, fp) || on_boundary(p, fp)) {
                    bits[base + col] = true;
                }
            }
            continue;
        }
        xs.clear();
        for (a, q) in fp.edges() {
            if straddles(a, q, y) {
                xs.push(crossing_x(a, q, y));
            }
        }
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(f64::total_cmp);
        let mut k = 0usize;
        for col in c0..c1 {
            let cx = x0 + col as f64 * cell;
            while k < xs.len() && xs[k] <= cx {
                k += 1;
            }
            let mut inside = (xs.len() - k) % 2 == 1;
            if !inside {
                let tol = 1e-9 * (1.0 + cx.abs());
                let near = (k > 0 && cx - xs[k - 1] <= tol) || (k < xs.len() && xs[k] - cx <= tol);
                if near {
                    inside = on_boundary(Point2::new(cx, y), fp);
                }
            }
            bits[base + col] = inside;
        }
    }
    CellRaster { ncols, nrows, bits }
}

/// Intersection-over-union of two footprints, measured by cell counts on a
/// shared lattice anchored at the joint bounding box.
pub fn polygon_iou(a: &Footprint, b: &Footprint, cell: f64) -> f64 {
    assert!(cell > 0.0, "polygon_iou cell must be positive");
    let (ba, bb) = (a.bounds(), b.bounds());
    if !ba.intersects(&bb) {
        return 0.0;
    }
    let joint = ba.union(&bb);
    let shift = |fp: &Footprint| fp.translated(-joint.min_x, -joint.min_y);
    let (la, lb, ox, oy) = match (shift(a), shift(b)) {
        (Ok(la), Ok(lb)) => (la, lb, 0.0, 0.0),
        _ => (a.clone(), b.clone(), joint.min_x, joint.min_y),
    };
    let mut cell = cell;
    // Polygons smaller than a cell: refine until something is covered.
    for _ in 0..24 {
        let ncols = ((joint.width() / cell).ceil() as usize).max(1);
        let nrows = ((joint.height() / cell).ceil() as usize).max(1);
        let x0 = ox + 0.5 * cell;
        let y0 = oy + 0.5 * cell;
        let ra = rasterize_cells(&la, x0, y0, cell, ncols, nrows);
        let rb = rasterize_cells(&lb, x0, y0, cell, ncols, nrows);
        let mut inter = 0usize;
        let mut union = 0usize;
        for (p, q) in ra.bits.iter().zip(&rb.bits) {
            inter += (*p && *q) as usize;
            union += (*p || *q) as usize;
        }
        if union > 0 {
            return inter as f64 / union as f64;
        }
        cell *= 0.5;
    }
    0.0
}
