use super::{signed_area2, Footprint, Orientation, Point2, Ring};
use crate::error::{Error, Result};

/// Offsets one ring to the right of its edges by `d` with miter joins.
fn offset_ring(pts: &[Point2], d: f64) -> Vec<Point2> {
    let n = pts.len();
    let dirs: Vec<Point2> = (0..n)
        .map(|i| {
            let e = pts[(i + 1) % n].sub(pts[i]);
            e.scale(1.0 / e.norm())
        })
        .collect();
    (0..n)
        .map(|j| {
            let i = (j + n - 1) % n;
            let (di, dj) = (dirs[i], dirs[j]);
            let ni = Point2::new(di.y, -di.x);
            let nj = Point2::new(dj.y, -dj.x);
            let denom = di.cross(dj);
            if denom.abs() < 1e-12 {
                return pts[j].add(nj.scale(d));
            }
            // p_i + t·d_i = p_j + s·d_j, with both lines shifted along their normals.
            let pi = pts[i].add(ni.scale(d));
            let pj = pts[j].add(nj.scale(d));
            let t = pj.sub(pi).cross(dj) / denom;
            pi.add(di.scale(t))
        })
        .collect()
}

/// Grows the footprint outward by `d` meters: outer edges move out, holes shrink.
///
/// Fails with [`Error::BufferFailure`] when the offset flips a ring or makes it
/// self-intersecting; callers fall back to the unbuffered polygon.
pub fn buffer_polygon(fp: &Footprint, d: f64) -> Result<Footprint> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::Precondition(format!("buffer distance must be >= 0, got {d}")));
    }
    if d == 0.0 {
        return Ok(fp.clone());
    }
    let mut rings = Vec::with_capacity(1 + fp.holes().len());
    for (k, ring) in fp.rings().enumerate() {
        let off = offset_ring(ring.vertices(), d);
        let before = signed_area2(ring.vertices());
        let after = signed_area2(&off);
        let v = ring.vertices();
        let n = v.len();
        let flipped_edge = (0..n).any(|i| {
            let orig = v[(i + 1) % n].sub(v[i]);
            let moved = off[(i + 1) % n].sub(off[i]);
            orig.dot(moved) <= 0.0
        });
        if !after.is_finite()
            || before.signum() != after.signum()
            || flipped_edge
            || off.iter().any(|p| !p.is_finite())
        {
            return Err(Error::BufferFailure(format!(
                "footprint `{}`: ring {k} collapsed under a {d} m offset",
                fp.id
            )));
        }
        rings.push(off);
    }
    let refs: Vec<&[Point2]> = rings.iter().map(|r| r.as_slice()).collect();
    if !super::is_simple_rings(&refs) {
        return Err(Error::BufferFailure(format!(
            "footprint `{}`: {d} m offset is self-intersecting",
            fp.id
        )));
    }
    let mut it = rings.into_iter();
    let outer = Ring::new(it.next().unwrap_or_default(), Orientation::CounterClockwise)
        .map_err(|e| Error::BufferFailure(e.to_string()))?;
    let holes = it
        .map(|h| Ring::new(h, Orientation::Clockwise))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::BufferFailure(e.to_string()))?;
    Footprint::from_rings(fp.id.clone(), outer, holes, fp.source)
        .map_err(|e| Error::BufferFailure(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Source;

    #[test]
    fn unit_square_grows_analytically() {
        let u = Footprint::rect("u", 0.0, 0.0, 1.0, 1.0).unwrap();
        let b = buffer_polygon(&u, 0.05).unwrap();
        assert!((b.area() - 1.21).abs() < 1e-12);
        let bb = b.bounds();
        assert!((bb.min_x + 0.05).abs() < 1e-12 && (bb.max_y - 1.05).abs() < 1e-12);
    }

    #[test]
    fn ten_metre_square_with_default_distance() {
        let s = Footprint::rect("s", 0.0, 0.0, 10.0, 10.0).unwrap();
        let b = buffer_polygon(&s, 0.05).unwrap();
        assert!((b.area() - 102.01).abs() < 1e-9);
    }

    #[test]
    fn zero_distance_is_identity() {
        let s = Footprint::rect("s", 0.0, 0.0, 3.0, 2.0).unwrap();
        assert_eq!(buffer_polygon(&s, 0.0).unwrap(), s);
    }

    #[test]
    fn holes_shrink() {
        let fp = Footprint::new(
            "h",
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(10.0, 0.0),
                Point2::new(10.0, 10.0),
                Point2::new(0.0, 10.0),
            ],
            vec![vec![
                Point2::new(4.0, 4.0),
                Point2::new(6.0, 4.0),
                Point2::new(6.0, 6.0),
                Point2::new(4.0, 6.0),
            ]],
            Source::Reference,
        )
        .unwrap();
        let b = buffer_polygon(&fp, 0.5).unwrap();
        assert!((b.holes()[0].area() - 1.0).abs() < 1e-12);
        assert!((b.outer().area() - 121.0).abs() < 1e-12);
        // hole of side 2 vanishes at d = 1
        assert!(matches!(buffer_polygon(&fp, 1.5), Err(Error::BufferFailure(_))));
    }

    #[test]
    fn narrow_notch_closing_fails() {
        // U-shape with a 0.2 m slot: a 0.15 m offset makes the arms overlap.
        let fp = Footprint::new(
            "u",
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.2, 0.0),
                Point2::new(2.2, 3.0),
                Point2::new(1.2, 3.0),
                Point2::new(1.2, 1.0),
                Point2::new(1.0, 1.0),
                Point2::new(1.0, 3.0),
                Point2::new(0.0, 3.0),
            ],
            vec![],
            Source::Predicted,
        )
        .unwrap();
        assert!(buffer_polygon(&fp, 0.05).is_ok());
        assert!(matches!(buffer_polygon(&fp, 0.15), Err(Error::BufferFailure(_))));
    }

    #[test]
    fn negative_distance_rejected() {
        let s = Footprint::rect("s", 0.0, 0.0, 3.0, 2.0).unwrap();
        assert!(buffer_polygon(&s, -1.0).is_err());
    }
}
