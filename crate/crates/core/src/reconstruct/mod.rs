//! LOD1 prisms: extrusion, face decomposition by slope, and 3D model output.

pub mod cityjson;
mod earcut;
mod obj;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Footprint, Point2};
use crate::heights::HeightMeasure;

pub use cityjson::{parse_cityjson, read_cityjson, to_cityjson, write_cityjson};
pub use earcut::triangulate;
pub use obj::{format_obj, write_obj};

/// Faces steeper than this are walls.
pub const WALL_SLOPE_DEG: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn at(p: Point2, z: f64) -> Self {
        Point3 { x: p.x, y: p.y, z }
    }

    pub fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lod1Solid {
    pub id: String,
    pub footprint: Footprint,
    pub base: f64,
    pub top: f64,
    pub measure: Option<HeightMeasure>,
}

impl Lod1Solid {
    pub fn height(&self) -> f64 {
        self.top - self.base
    }

    pub fn with_measure(mut self, m: HeightMeasure) -> Self {
        self.measure = Some(m);
        self
    }
}

pub fn extrude(fp: &Footprint, base: f64, top: f64) -> Result<Lod1Solid> {
    if !(top > base) || !base.is_finite() || !top.is_finite() {
        return Err(Error::DegenerateHeight { base, top });
    }
    Ok(Lod1Solid {
        id: fp.id.clone(),
        footprint: fp.clone(),
        base,
        top,
        measure: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaceKind {
    Wall,
    Roof,
    Ground,
}

impl FaceKind {
    pub fn semantic(&self) -> &'static str {
        match self {
            FaceKind::Wall => "WallSurface",
            FaceKind::Roof => "RoofSurface",
            FaceKind::Ground => "GroundSurface",
        }
    }
}

/// A planar polygon: `rings[0]` is the boundary, the rest are holes. Loops are
/// ordered counter-clockwise seen from outside the solid.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub rings: Vec<Vec<Point3>>,
    pub kind: FaceKind,
    pub area: f64,
}

impl Face {
    pub fn vertices(&self) -> &[Point3] {
        &self.rings[0]
    }

    /// Outward unit normal.
    pub fn normal(&self) -> Point3 {
        let n = vector_area(&self.rings);
        let l = n.norm();
        Point3::new(n.x / l, n.y / l, n.z / l)
    }

    /// Angle between the face plane and the horizontal, degrees.
    pub fn slope_deg(&self) -> f64 {
        self.normal().z.abs().min(1.0).acos().to_degrees()
    }
}

/// Newell's vector area summed over all loops; holes wound opposite to the
/// boundary subtract.
fn vector_area(rings: &[Vec<Point3>]) -> Point3 {
    let o = rings[0][0];
    let mut s = Point3::new(0.0, 0.0, 0.0);
    for ring in rings {
        let n = ring.len();
        for i in 0..n {
            let a = ring[i].sub(o);
            let b = ring[(i + 1) % n].sub(o);
            let c = a.cross(b);
            s = Point3::new(s.x + c.x, s.y + c.y, s.z + c.z);
        }
    }
    Point3::new(0.5 * s.x, 0.5 * s.y, 0.5 * s.z)
}

fn classify(rings: &[Vec<Point3>]) -> FaceKind {
    let n = vector_area(rings);
    let slope = (n.z.abs() / n.norm()).min(1.0).acos().to_degrees();
    if slope >= WALL_SLOPE_DEG {
        FaceKind::Wall
    } else if n.z > 0.0 {
        FaceKind::Roof
    } else {
        FaceKind::Ground
    }
}

fn make_face(rings: Vec<Vec<Point3>>) -> Face {
    let kind = classify(&rings);
    let area = vector_area(&rings).norm();
    Face { rings, kind, area }
}

/// Ground, roof, then one quadrilateral wall per footprint edge (outer ring
/// first, then holes). Kinds come from each face's slope.
pub fn faces(s: &Lod1Solid) -> Vec<Face> {
    let rings: Vec<&[Point2]> = s.footprint.rings().map(|r| r.vertices()).collect();
    let mut out = Vec::with_capacity(2 + s.footprint.vertex_count());
    out.push(make_face(
        rings
            .iter()
            .map(|r| r.iter().rev().map(|&p| Point3::at(p, s.base)).collect())
            .collect(),
    ));
    out.push(make_face(
        rings
            .iter()
            .map(|r| r.iter().map(|&p| Point3::at(p, s.top)).collect())
            .collect(),
    ));
    for r in &rings {
        let n = r.len();
        for i in 0..n {
            let (a, b) = (r[i], r[(i + 1) % n]);
            out.push(make_face(vec![vec![
                Point3::at(a, s.base),
                Point3::at(b, s.base),
                Point3::at(b, s.top),
                Point3::at(a, s.top),
            ]]));
        }
    }
    out
}

/// Divergence theorem over the faces: V = ⅓ Σ p·N over faces, with p any
/// point on the face and N its vector area.
pub fn volume(faces: &[Face]) -> f64 {
    let Some(o) = faces.first().map(|f| f.rings[0][0]) else {
        return 0.0;
    };
    faces
        .iter()
        .map(|f| f.rings[0][0].sub(o).dot(vector_area(&f.rings)))
        .sum::<f64>()
        / 3.0
}

pub fn wall_area(faces: &[Face]) -> f64 {
    faces.iter().filter(|f| f.kind == FaceKind::Wall).map(|f| f.area).sum()
}
