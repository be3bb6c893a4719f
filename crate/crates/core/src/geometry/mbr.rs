use std::f64::consts::FRAC_PI_2;

use super::{Footprint, Point2};
use crate::error::{Error, Result};

/// Minimum-area bounding rectangle. `width` is measured along the axis
/// `(cos angle, sin angle)`, `height` perpendicular to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinRect {
    pub center: Point2,
    pub angle: f64,
    pub width: f64,
    pub height: f64,
}

impl MinRect {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Point2; 4] {
        let u = Point2::new(self.angle.cos(), self.angle.sin());
        let v = Point2::new(-u.y, u.x);
        let (hw, hh) = (self.width * 0.5, self.height * 0.5);
        [
            self.center.add(u.scale(-hw)).add(v.scale(-hh)),
            self.center.add(u.scale(hw)).add(v.scale(-hh)),
            self.center.add(u.scale(hw)).add(v.scale(hh)),
            self.center.add(u.scale(-hw)).add(v.scale(hh)),
        ]
    }
}

/// Andrew's monotone chain; counter-clockwise, without collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if b.sub(a).cross(p.sub(a)) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Rotating-calipers minimum-area rectangle of the outer ring's convex hull.
/// The angle is normalized to `[0, π/2)`.
pub fn min_area_rect(fp: &Footprint) -> Result<MinRect> {
    let hull = convex_hull(fp.outer().vertices());
    if hull.len() < 3 {
        return Err(Error::InvalidGeometry(format!(
            "footprint `{}` has a degenerate convex hull",
            fp.id
        )));
    }
    let o = hull[0];
    let n = hull.len();
    let mut best: Option<(f64, f64)> = None; // (area, angle)
    for i in 0..n {
        let e = hull[(i + 1) % n].sub(hull[i]);
        let mut angle = e.y.atan2(e.x).rem_euclid(FRAC_PI_2);
        if FRAC_PI_2 - angle < 1e-12 {
            angle = 0.0;
        }
        let (w, h, _) = extents(&hull, o, angle);
        let area = w * h;
        match best {
            Some((a, _)) if area >= a * (1.0 - 1e-12) => {}
            _ => best = Some((area, angle)),
        }
    }
    let (_, angle) = best.expect("hull has edges");
    let (width, height, center) = extents(&hull, o, angle);
    Ok(MinRect {
        center,
        angle,
        width,
        height,
    })
}

fn extents(hull: &[Point2], o: Point2, angle: f64) -> (f64, f64, Point2) {
    let u = Point2::new(angle.cos(), angle.sin());
    let v = Point2::new(-u.y, u.x);
    let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in hull {
        let d = p.sub(o);
        let (a, b) = (d.dot(u), d.dot(v));
        u0 = u0.min(a);
        u1 = u1.max(a);
        v0 = v0.min(b);
        v1 = v1.max(b);
    }
    let center = o.add(u.scale(0.5 * (u0 + u1))).add(v.scale(0.5 * (v0 + v1)));
    (u1 - u0, v1 - v0, center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn axis_aligned_square() {
        let u = Footprint::rect("u", 0.0, 0.0, 1.0, 1.0).unwrap();
        let r = min_area_rect(&u).unwrap();
        assert_eq!(r.angle, 0.0);
        assert!((r.width - 1.0).abs() < 1e-12 && (r.height - 1.0).abs() < 1e-12);
        assert!((r.center.x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rotated_square_recovers_angle() {
        let u = Footprint::rect("u", -1.0, -1.0, 1.0, 1.0).unwrap();
        let r = min_area_rect(&u.rotated(PI / 6.0, Point2::new(0.0, 0.0)).unwrap()).unwrap();
        assert!((r.angle - PI / 6.0).abs() < 1e-9, "{}", r.angle);
        assert!((r.area() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rectangle_area() {
        let u = Footprint::rect("u", 0.0, 0.0, 2.0, 1.0).unwrap();
        let r = min_area_rect(&u).unwrap();
        assert!((r.area() - 2.0).abs() < 1e-12);
        assert!((r.width - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 2.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 2.0),
        ];
        assert_eq!(convex_hull(&pts).len(), 4);
    }
}
