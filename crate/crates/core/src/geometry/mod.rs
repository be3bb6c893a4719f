//! Planar geometry primitives: points, rings, footprints and their measurements.
//!
//! Rings are stored open (the closing vertex is implicit). Orientation is
//! normalized on construction: outer rings counter-clockwise, holes clockwise,
//! so the polygon interior is always on the left of every edge.

mod buffer;
pub mod geojson;
mod mbr;
mod scan;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use buffer::buffer_polygon;
pub use mbr::{convex_hull, min_area_rect, MinRect};
pub use scan::{polygon_iou, rasterize_cells, CellRaster, DEFAULT_IOU_CELL};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2::new(x, y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn empty() -> Self {
        Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min_x > self.max_x || self.min_y > self.max_y
    }

    pub fn extend(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }

    pub fn union(&self, o: &Bounds) -> Bounds {
        Bounds {
            min_x: self.min_x.min(o.min_x),
            min_y: self.min_y.min(o.min_y),
            max_x: self.max_x.max(o.max_x),
            max_y: self.max_y.max(o.max_y),
        }
    }

    /// Closed-interval overlap test.
    pub fn intersects(&self, o: &Bounds) -> bool {
        !(self.is_empty() || o.is_empty())
            && self.min_x <= o.max_x
            && o.min_x <= self.max_x
            && self.min_y <= o.max_y
            && o.min_y <= self.max_y
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn expanded(&self, d: f64) -> Bounds {
        Bounds {
            min_x: self.min_x - d,
            min_y: self.min_y - d,
            max_x: self.max_x + d,
            max_y: self.max_y + d,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

/// Twice the signed area of an open vertex loop (positive when counter-clockwise).
pub(crate) fn signed_area2(pts: &[Point2]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    // Shifted to the first vertex to keep the products small for georeferenced coordinates.
    let o = pts[0];
    let mut s = 0.0;
    for i in 1..n - 1 {
        let a = pts[i].sub(o);
        let b = pts[i + 1].sub(o);
        s += a.cross(b);
    }
    s
}

pub(crate) fn ring_length(pts: &[Point2]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| pts[i].dist(pts[(i + 1) % n])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

/// A closed, implicitly-closed vertex loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    vertices: Vec<Point2>,
}

impl Ring {
    /// Builds a ring, dropping an explicit closing vertex and consecutive
    /// duplicates, and reorienting it to `orientation`.
    pub fn new(vertices: Vec<Point2>, orientation: Orientation) -> Result<Ring> {
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "non-finite vertex ({}, {})",
                p.x, p.y
            )));
        }
        let mut v: Vec<Point2> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if v.last() != Some(&p) {
                v.push(p);
            }
        }
        while v.len() > 1 && v.first() == v.last() {
            v.pop();
        }
        if v.len() < 3 {
            return Err(Error::InvalidGeometry(format!(
                "ring needs at least 3 distinct vertices, got {}",
                v.len()
            )));
        }
        let a2 = signed_area2(&v);
        if a2 == 0.0 || !a2.is_finite() {
            return Err(Error::InvalidGeometry("ring is collinear".into()));
        }
        let ccw = a2 > 0.0;
        if ccw != (orientation == Orientation::CounterClockwise) {
            v.reverse();
        }
        Ok(Ring { vertices: v })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Unsigned enclosed area.
    pub fn area(&self) -> f64 {
        signed_area2(&self.vertices).abs() * 0.5
    }

    pub fn length(&self) -> f64 {
        ring_length(&self.vertices)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bounds(&self) -> Bounds {
        let mut b = Bounds::empty();
        for p in &self.vertices {
            b.extend(p.x, p.y);
        }
        b
    }

    pub fn orientation(&self) -> Orientation {
        if signed_area2(&self.vertices) > 0.0 {
            Orientation::CounterClockwise
        } else {
            Orientation::Clockwise
        }
    }
}

/// Where a footprint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Predicted,
    Reference,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Predicted => "predicted",
            Source::Reference => "reference",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted" => Ok(Source::Predicted),
            "reference" => Ok(Source::Reference),
            other => Err(Error::parse(
                "footprint source",
                "property `source`",
                format!("expected \"predicted\" or \"reference\", got {other:?}"),
            )),
        }
    }
}

/// A building footprint: one outer ring and zero or more holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    pub id: String,
    outer: Ring,
    holes: Vec<Ring>,
    pub source: Source,
}

impl Footprint {
    pub fn new(
        id: impl Into<String>,
        outer: Vec<Point2>,
        holes: Vec<Vec<Point2>>,
        source: Source,
    ) -> Result<Footprint> {
        let outer = Ring::new(outer, Orientation::CounterClockwise)?;
        let holes = holes
            .into_iter()
            .map(|h| Ring::new(h, Orientation::Clockwise))
            .collect::<Result<Vec<_>>>()?;
        Footprint::from_rings(id, outer, holes, source)
    }

    pub(crate) fn from_rings(
        id: impl Into<String>,
        outer: Ring,
        holes: Vec<Ring>,
        source: Source,
    ) -> Result<Footprint> {
        let id = id.into();
        let outer_only = Footprint {
            id: id.clone(),
            outer: outer.clone(),
            holes: Vec::new(),
            source,
        };
        for h in &holes {
            if !h.vertices.iter().all(|p| point_in_polygon(*p, &outer_only)) {
                return Err(Error::InvalidGeometry(format!(
                    "footprint `{id}`: hole is not inside the outer ring"
                )));
            }
        }
        let fp = Footprint {
            id,
            outer,
            holes,
            source,
        };
        if fp.area() <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "footprint `{}` has non-positive area",
                fp.id
            )));
        }
        Ok(fp)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rect(id: impl Into<String>, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Footprint> {
        Footprint::new(
            id,
            vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ],
            Vec::new(),
            Source::Reference,
        )
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn outer(&self) -> &Ring {
        &self.outer
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.rings().flat_map(|r| r.edges())
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(Ring::len).sum()
    }

    pub fn area(&self) -> f64 {
        self.outer.area() - self.holes.iter().map(Ring::area).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.rings().map(Ring::length).sum()
    }

    pub fn bounds(&self) -> Bounds {
        self.outer.bounds()
    }

    /// Applies `f` to every vertex and rebuilds the footprint.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Result<Footprint> {
        let outer = self.outer.vertices.iter().map(|p| f(*p)).collect();
        let holes = self
            .holes
            .iter()
            .map(|h| h.vertices.iter().map(|p| f(*p)).collect())
            .collect();
        Footprint::new(self.id.clone(), outer, holes, self.source)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Result<Footprint> {
        self.map_points(|p| Point2::new(p.x + dx, p.y + dy))
    }

    /// Rotates by `angle` radians about `pivot`.
    pub fn rotated(&self, angle: f64, pivot: Point2) -> Result<Footprint> {
        let (s, c) = angle.sin_cos();
        self.map_points(|p| {
            let d = p.sub(pivot);
            Point2::new(pivot.x + c * d.x - s * d.y, pivot.y + s * d.x + c * d.y)
        })
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Point2 {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a = 0.0;
        let o = self.outer.vertices[0];
        for ring in self.rings() {
            for (p, q) in ring.edges() {
                let p = p.sub(o);
                let q = q.sub(o);
                let w = p.cross(q);
                a += w;
                cx += (p.x + q.x) * w;
                cy += (p.y + q.y) * w;
            }
        }
        Point2::new(o.x + cx / (3.0 * a), o.y + cy / (3.0 * a))
    }

    /// True when no two edges of any rings cross or touch, apart from
    /// consecutive edges sharing their common vertex.
    pub fn is_simple(&self) -> bool {
        is_simple_rings(&self.rings().map(|r| r.vertices()).collect::<Vec<_>>())
    }
}

pub fn polygon_area(fp: &Footprint) -> f64 {
    fp.area()
}

pub fn polygon_perimeter(fp: &Footprint) -> f64 {
    fp.perimeter()
}

/// x-coordinate where the segment crosses the horizontal line at `y`.
///
/// The endpoints are ordered by y first so both edge directions round identically;
/// the scanline rasterizer relies on this to agree bit-for-bit with `point_in_polygon`.
#[inline]
pub(crate) fn crossing_x(a: Point2, b: Point2, y: f64) -> f64 {
    let (lo, hi) = if a.y < b.y || (a.y == b.y && a.x <= b.x) {
        (a, b)
    } else {
        (b, a)
    };
    lo.x + (y - lo.y) * (hi.x - lo.x) / (hi.y - lo.y)
}

/// Half-open straddle rule for the crossing test.
#[inline]
pub(crate) fn straddles(a: Point2, b: Point2, y: f64) -> bool {
    (a.y <= y) != (b.y <= y)
}

pub(crate) fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    let cross = b.sub(a).cross(p.sub(a));
    cross == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

pub(crate) fn on_boundary(p: Point2, fp: &Footprint) -> bool {
    fp.edges().any(|(a, b)| on_segment(p, a, b))
}

pub(crate) fn crossing_parity(p: Point2, fp: &Footprint) -> bool {
    let mut inside = false;
    for (a, b) in fp.edges() {
        if straddles(a, b, p.y) && crossing_x(a, b, p.y) > p.x {
            inside = !inside;
        }
    }
    inside
}

pub fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let l2 = ab.dot(ab);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

/// Distance from `p` to the nearest edge of any ring.
pub fn boundary_distance(p: Point2, fp: &Footprint) -> f64 {
    fp.edges().map(|(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
}

/// Membership test; points on the boundary count as inside.
pub fn point_in_polygon(p: Point2, fp: &Footprint) -> bool {
    if !fp.bounds().contains(p.x, p.y) {
        return false;
    }
    crossing_parity(p, fp) || on_boundary(p, fp)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn within_box(p: Point2, a: Point2, b: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub(crate) fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && within_box(a, c, d))
        || (d2 == 0.0 && within_box(b, c, d))
        || (d3 == 0.0 && within_box(c, a, b))
        || (d4 == 0.0 && within_box(d, a, b))
}

pub(crate) fn is_simple_rings(rings: &[&[Point2]]) -> bool {
    struct Seg {
        a: Point2,
        b: Point2,
        ring: usize,
        idx: usize,
        len: usize,
        min_x: f64,
        max_x: f64,
    }
    let mut segs = Vec::new();
    for (r, pts) in rings.iter().enumerate() {
        let n = pts.len();
        for i in 0..n {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            segs.push(Seg {
                a,
                b,
                ring: r,
                idx: i,
                len: n,
                min_x: a.x.min(b.x),
                max_x: a.x.max(b.x),
            });
        }
    }
    segs.sort_by(|s, t| s.min_x.total_cmp(&t.min_x));
    for i in 0..segs.len() {
        let s = &segs[i];
        for t in &segs[i + 1..] {
            if t.min_x > s.max_x {
                break;
            }
            let adjacent = s.ring == t.ring
                && (s.idx + 1) % s.len == t.idx
                || t.ring == s.ring && (t.idx + 1) % t.len == s.idx;
            if adjacent {
                // Consecutive edges may only share their common vertex: reject fold-backs.
                let (p, shared, q) = if (s.idx + 1) % s.len == t.idx {
                    (s.a, s.b, t.b)
                } else {
                    (t.a, t.b, s.b)
                };
                if orient(p, shared, q) == 0.0 && p.sub(shared).dot(q.sub(shared)) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(s.a, s.b, t.a, t.b) {
                return false;
            }
        }
    }
    true
}
