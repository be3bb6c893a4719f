use std::collections::{HashMap, VecDeque};

use super::Grid;
use crate::error::Result;
use crate::geometry::{Footprint, Orientation, Point2, Ring, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

// E, N, W, S
const STEP: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Clone, Copy)]
struct Edge {
    from: (i64, i64),
    dir: usize,
}

impl Edge {
    fn to(&self) -> (i64, i64) {
        (self.from.0 + STEP[self.dir].0, self.from.1 + STEP[self.dir].1)
    }
}

/// Connected components of 1-cells traced along cell edges into polygons.
///
/// Ids are `b1`, `b2`, … in the order the components' first cells are met
/// scanning rows from the top, left to right.
pub fn polygonize(g: &Grid, connectivity: Connectivity) -> Result<Vec<Footprint>> {
    g.require_binary("polygonize")?;
    let (nc, nr) = (g.ncols(), g.nrows());
    let mut label = vec![0u32; nc * nr];
    let mut components: Vec<Vec<(usize, usize)>> = Vec::new();
    let nbrs: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
    };
    for r in (0..nr).rev() {
        for c in 0..nc {
            if g.get(c, r) != 1.0 || label[r * nc + c] != 0 {
                continue;
            }
            let id = components.len() as u32 + 1;
            let mut cells = Vec::new();
            let mut queue = VecDeque::from([(c, r)]);
            label[r * nc + c] = id;
            while let Some((cc, rr)) = queue.pop_front() {
                cells.push((cc, rr));
                for &(dc, dr) in nbrs {
                    let (x, y) = (cc as isize + dc, rr as isize + dr);
                    if x < 0 || y < 0 || x >= nc as isize || y >= nr as isize {
                        continue;
                    }
                    let (x, y) = (x as usize, y as usize);
                    if g.get(x, y) == 1.0 && label[y * nc + x] == 0 {
                        label[y * nc + x] = id;
                        queue.push_back((x, y));
                    }
                }
            }
            components.push(cells);
        }
    }

    let is_one = |c: i64, r: i64| -> bool {
        c >= 0 && r >= 0 && (c as usize) < nc && (r as usize) < nr && g.get(c as usize, r as usize) == 1.0
    };
    let mut out = Vec::with_capacity(components.len());
    for (k, cells) in components.iter().enumerate() {
        let mut edges = Vec::new();
        for &(c, r) in cells {
            let (c, r) = (c as i64, r as i64);
            if !is_one(c, r - 1) {
                edges.push(Edge { from: (c, r), dir: 0 });
            }
            if !is_one(c + 1, r) {
                edges.push(Edge { from: (c + 1, r), dir: 1 });
            }
            if !is_one(c, r + 1) {
                edges.push(Edge { from: (c + 1, r + 1), dir: 2 });
            }
            if !is_one(c - 1, r) {
                edges.push(Edge { from: (c, r + 1), dir: 3 });
            }
        }
        let loops = trace_loops(&edges, connectivity);
        let mut outer = None;
        let mut holes = Vec::new();
        for lp in loops {
            let pts: Vec<Point2> = lp
                .iter()
                .map(|&(i, j)| {
                    Point2::new(
                        g.origin().x + (i as f64 - 0.5) * g.cell(),
                        g.origin().y + (j as f64 - 0.5) * g.cell(),
                    )
                })
                .collect();
            if lattice_area2(&lp) > 0 {
                debug_assert!(outer.is_none());
                outer = Some(Ring::new(pts, Orientation::CounterClockwise)?);
            } else {
                holes.push(Ring::new(pts, Orientation::Clockwise)?);
            }
        }
        let outer = outer.expect("every component has an outer boundary");
        out.push(Footprint::from_rings(format!("b{}", k + 1), outer, holes, Source::Predicted)?);
    }
    Ok(out)
}

fn lattice_area2(lp: &[(i64, i64)]) -> i64 {
    let n = lp.len();
    (0..n)
        .map(|i| {
            let (a, b) = (lp[i], lp[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum()
}

/// Follows boundary edges into closed loops of corner vertices, dropping
/// vertices where the direction does not change. Where two cells meet only at
/// a corner, eight-connectivity turns right (keeping them together) and
/// four-connectivity turns left.
fn trace_loops(edges: &[Edge], connectivity: Connectivity) -> Vec<Vec<(i64, i64)>> {
    let mut outgoing: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        outgoing.entry(e.from).or_default().push(i);
    }
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&i| (edges[i].from.1, edges[i].from.0, edges[i].dir));
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for &start in &order {
        if used[start] {
            continue;
        }
        let mut verts = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            let e = edges[cur];
            let cands = &outgoing[&e.to()];
            let next = if cands.len() == 1 {
                cands[0]
            } else {
                let want = match connectivity {
                    Connectivity::Eight => (e.dir + 3) % 4,
                    Connectivity::Four => (e.dir + 1) % 4,
                };
                *cands.iter().find(|&&i| edges[i].dir == want).expect("pinch has both turns")
            };
            if edges[next].dir != e.dir {
                verts.push(e.to());
            }
            if next == start {
                break;
            }
            cur = next;
        }
        loops.push(verts);
    }
    loops
}
