use std::fmt::Write as _;
use std::path::Path;

use super::{faces, triangulate, FaceKind, Lod1Solid};
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Wavefront OBJ, one `g` group per solid in id order, every face
/// triangulated. Vertices are the footprint rings at base then at top.
pub fn format_obj(solids: &[Lod1Solid]) -> Result<String> {
    if solids.is_empty() {
        return Err(Error::Precondition("no solids to write".into()));
    }
    let mut order: Vec<&Lod1Solid> = solids.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut s = String::new();
    let mut offset = 1usize;
    for solid in order {
        let rings: Vec<&[Point2]> = solid.footprint.rings().map(|r| r.vertices()).collect();
        let nv: usize = rings.iter().map(|r| r.len()).sum();
        let _ = writeln!(s, "g {}", solid.id);
        for z in [solid.base, solid.top] {
            for p in rings.iter().flat_map(|r| r.iter()) {
                let _ = writeln!(s, "v {:.6} {:.6} {:.6}", p.x, p.y, z);
            }
        }
        let tris = triangulate(rings[0], &rings[1..]);
        let (b, t) = (offset, offset + nv);
        for f in faces(solid) {
            match f.kind {
                FaceKind::Roof => {
                    for tri in &tris {
                        let _ = writeln!(s, "f {} {} {}", t + tri[0], t + tri[1], t + tri[2]);
                    }
                }
                FaceKind::Ground => {
                    for tri in &tris {
                        let _ = writeln!(s, "f {} {} {}", b + tri[0], b + tri[2], b + tri[1]);
                    }
                }
                FaceKind::Wall => {}
            }
        }
        let mut start = 0;
        for r in &rings {
            let n = r.len();
            for i in 0..n {
                let (a, c) = (start + i, start + (i + 1) % n);
                let _ = writeln!(s, "f {} {} {}", b + a, b + c, t + c);
                let _ = writeln!(s, "f {} {} {}", b + a, t + c, t + a);
            }
            start += n;
        }
        offset += 2 * nv;
    }
    Ok(s)
}

pub fn write_obj(solids: &[Lod1Solid], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_obj(solids)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Footprint, Source};
    use crate::reconstruct::extrude;

    fn parse(text: &str) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
        let mut v = Vec::new();
        let mut f = Vec::new();
        for line in text.lines() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.first() {
                Some(&"v") => v.push([parts[1].parse().unwrap(), parts[2].parse().unwrap(), parts[3].parse().unwrap()]),
                Some(&"f") => f.push([parts[1].parse().unwrap(), parts[2].parse().unwrap(), parts[3].parse().unwrap()]),
                _ => {}
            }
        }
        (v, f)
    }

    #[test]
    fn unit_cube_counts() {
        let s = extrude(&Footprint::rect("u", 0.0, 0.0, 1.0, 1.0).unwrap(), 0.0, 1.0).unwrap();
        let text = format_obj(&[s]).unwrap();
        let (v, f) = parse(&text);
        assert_eq!(v.len(), 8);
        assert_eq!(f.len(), 12);
        assert!(text.starts_with("g u\n"));
    }

    #[test]
    fn holed_roof_area_and_outward_triangles() {
        let fp = Footprint::new(
            "h",
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(10.0, 0.0),
                Point2::new(10.0, 10.0),
                Point2::new(0.0, 10.0),
            ],
            vec![vec![
                Point2::new(3.0, 3.0),
                Point2::new(7.0, 3.0),
                Point2::new(7.0, 6.0),
                Point2::new(3.0, 6.0),
            ]],
            Source::Reference,
        )
        .unwrap();
        let s = extrude(&fp, 2.0, 5.0).unwrap();
        let (v, f) = parse(&format_obj(&[s]).unwrap());
        let mut roof = 0.0;
        let mut signed_volume = 0.0;
        for t in &f {
            let [a, b, c] = t.map(|i| v[i - 1]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
            if a[2] == 5.0 && b[2] == 5.0 && c[2] == 5.0 {
                roof += 0.5 * n[2];
            }
            signed_volume += (a[0] * n[0] + a[1] * n[1] + a[2] * n[2]) / 6.0;
        }
        assert!((roof - 88.0).abs() < 1e-9, "{roof}");
        assert!((signed_volume - 88.0 * 3.0).abs() < 1e-9, "{signed_volume}");
    }

    #[test]
    fn groups_sorted_and_indices_offset() {
        let a = extrude(&Footprint::rect("b", 0.0, 0.0, 1.0, 1.0).unwrap(), 0.0, 1.0).unwrap();
        let b = extrude(&Footprint::rect("a", 5.0, 0.0, 6.0, 1.0).unwrap(), 0.0, 1.0).unwrap();
        let text = format_obj(&[a.clone(), b.clone()]).unwrap();
        let groups: Vec<&str> = text.lines().filter(|l| l.starts_with("g ")).collect();
        assert_eq!(groups, vec!["g a", "g b"]);
        let (v, f) = parse(&text);
        assert_eq!(v.len(), 16);
        assert!(f.iter().flatten().all(|&i| (1..=16).contains(&i)));
        assert_eq!(text, format_obj(&[b, a]).unwrap());
        assert!(format_obj(&[]).is_err());
    }
}
