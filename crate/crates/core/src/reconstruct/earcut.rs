//! Ear-clipping triangulation of a polygon with holes. Holes are joined to
//! the outer ring by bridge edges first, then ears are clipped from the
//! resulting single loop.

use crate::geometry::Point2;

fn cross3(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(b))
}

fn signed_area(pts: &[Point2], idx: &[usize]) -> f64 {
    let n = idx.len();
    (0..n).map(|i| pts[idx[i]].cross(pts[idx[(i + 1) % n]])).sum::<f64>() * 0.5
}

fn in_triangle(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    let d1 = b.sub(a).cross(p.sub(a));
    let d2 = c.sub(b).cross(p.sub(b));
    let d3 = a.sub(c).cross(p.sub(c));
    d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0
}

/// Triangles as index triples into the concatenation `outer ++ holes[0] ++ …`,
/// counter-clockwise. Ring orientation of the input does not matter.
pub fn triangulate(outer: &[Point2], holes: &[&[Point2]]) -> Vec<[usize; 3]> {
    let mut pts: Vec<Point2> = outer.to_vec();
    let mut poly: Vec<usize> = (0..outer.len()).collect();
    if signed_area(&pts, &poly) < 0.0 {
        poly.reverse();
    }
    let mut hole_loops: Vec<Vec<usize>> = Vec::new();
    for h in holes {
        let start = pts.len();
        pts.extend_from_slice(h);
        let mut l: Vec<usize> = (start..pts.len()).collect();
        if signed_area(&pts, &l) > 0.0 {
            l.reverse();
        }
        hole_loops.push(l);
    }
    let rightmost = |l: &Vec<usize>| -> usize {
        *l.iter()
            .max_by(|&&a, &&b| pts[a].x.total_cmp(&pts[b].x).then(pts[a].y.total_cmp(&pts[b].y)))
            .unwrap()
    };
    hole_loops.sort_by(|a, b| pts[rightmost(b)].x.total_cmp(&pts[rightmost(a)].x));
    for hole in hole_loops {
        let m = rightmost(&hole);
        poly = bridge(&pts, &poly, &hole, m);
    }
    clip(&pts, poly)
}

fn bridge(pts: &[Point2], poly: &[usize], hole: &[usize], m: usize) -> Vec<usize> {
    let mp = pts[m];
    let n = poly.len();
    // nearest edge hit by the ray from M towards +x
    let mut best: Option<(f64, usize)> = None;
    for i in 0..n {
        let (a, b) = (pts[poly[i]], pts[poly[(i + 1) % n]]);
        if a.y <= mp.y && mp.y <= b.y && a.y != b.y {
            let x = a.x + (mp.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x >= mp.x && best.is_none_or(|(bx, _)| x < bx) {
                best = Some((x, i));
            }
        }
    }
    let (ix, ei) = best.expect("hole lies inside the outer ring");
    let hit = Point2::new(ix, mp.y);
    let (ea, eb) = (poly[ei], poly[(ei + 1) % n]);
    let mut p = if pts[ea].x > pts[eb].x { ea } else { eb };
    if pts[ea] == hit {
        p = ea;
    } else if pts[eb] == hit {
        p = eb;
    } else {
        // a reflex vertex inside triangle (M, I, P) would block the bridge
        let pp = pts[p];
        let mut best_r: Option<(f64, f64, usize)> = None;
        for k in 0..n {
            let r = poly[k];
            let rp = pts[r];
            if r == p || rp == pp {
                continue;
            }
            let prev = pts[poly[(k + n - 1) % n]];
            let next = pts[poly[(k + 1) % n]];
            if cross3(prev, rp, next) >= 0.0 {
                continue;
            }
            let inside = if mp.y < pp.y {
                in_triangle(rp, mp, hit, pp)
            } else {
                in_triangle(rp, mp, pp, hit)
            };
            if inside {
                let d = rp.sub(mp);
                let ang = d.y.abs().atan2(d.x);
                let dist = d.norm();
                if best_r.is_none_or(|(ba, bd, _)| ang < ba || (ang == ba && dist < bd)) {
                    best_r = Some((ang, dist, r));
                }
            }
        }
        if let Some((_, _, r)) = best_r {
            p = r;
        }
    }
    // P may occur more than once after earlier bridges; pick the occurrence
    // whose corner wedge contains the direction towards M.
    let occurrences: Vec<usize> = (0..n).filter(|&k| poly[k] == p).collect();
    let pos = if occurrences.len() == 1 {
        occurrences[0]
    } else {
        *occurrences
            .iter()
            .find(|&&k| {
                let prev = pts[poly[(k + n - 1) % n]];
                let next = pts[poly[(k + 1) % n]];
                in_wedge(prev, pts[p], next, mp)
            })
            .unwrap_or(&occurrences[0])
    };
    let hs = hole.iter().position(|&h| h == m).unwrap();
    let mut out = Vec::with_capacity(n + hole.len() + 2);
    out.extend_from_slice(&poly[..=pos]);
    for k in 0..hole.len() {
        out.push(hole[(hs + k) % hole.len()]);
    }
    out.push(m);
    out.push(p);
    out.extend_from_slice(&poly[pos + 1..]);
    out
}

/// Whether `q` lies in the interior angle at `b` of the CCW corner a→b→c.
fn in_wedge(a: Point2, b: Point2, c: Point2, q: Point2) -> bool {
    let left_of = |s: Point2, e: Point2| e.sub(s).cross(q.sub(s)) > 0.0;
    if cross3(a, b, c) >= 0.0 {
        left_of(a, b) && left_of(b, c)
    } else {
        left_of(a, b) || left_of(b, c)
    }
}

fn clip(pts: &[Point2], mut poly: Vec<usize>) -> Vec<[usize; 3]> {
    let mut tris = Vec::with_capacity(poly.len().saturating_sub(2));
    let mut guard = 0usize;
    while poly.len() > 3 {
        let n = poly.len();
        let mut clipped = false;
        for i in 0..n {
            let (ia, ib, ic) = (poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            let turn = cross3(a, b, c);
            if turn == 0.0 && b.sub(a).dot(c.sub(b)) > 0.0 {
                // straight-through vertex contributes no area
                poly.remove(i);
                clipped = true;
                break;
            }
            if turn <= 0.0 {
                continue;
            }
            let blocked = poly.iter().any(|&r| {
                let q = pts[r];
                q != a && q != b && q != c && in_triangle(q, a, b, c)
            });
            if !blocked {
                tris.push([ia, ib, ic]);
                poly.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // numerically stuck: take the most convex corner
            let i = (0..n)
                .max_by(|&i, &j| {
                    let t = |k: usize| cross3(pts[poly[(k + n - 1) % n]], pts[poly[k]], pts[poly[(k + 1) % n]]);
                    t(i).total_cmp(&t(j))
                })
                .unwrap();
            let tri = [poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]];
            if cross3(pts[tri[0]], pts[tri[1]], pts[tri[2]]) > 0.0 {
                tris.push(tri);
            }
            poly.remove(i);
            guard += 1;
            log::debug!("ear clipping forced a corner ({guard})");
        }
    }
    if poly.len() == 3 && cross3(pts[poly[0]], pts[poly[1]], pts[poly[2]]) > 0.0 {
        tris.push([poly[0], poly[1], poly[2]]);
    }
    tris
}
