//! CityJSON 2.0 documents: one `Building` with an LOD1 `Solid` per prism.
//! Coordinates are stored as integers under a 1 mm `transform`.

use std::path::Path;

use serde_json::{json, Map, Value};

use super::{faces, FaceKind, Lod1Solid};
use crate::error::{Error, Result};
use crate::geometry::{Footprint, Point2, Source};
use crate::heights::HeightMeasure;

pub const SCALE: f64 = 0.001;
const WHAT: &str = "CityJSON";

/// Each solid gets its own vertices: its footprint rings at base, then at top.
pub fn to_cityjson(solids: &[Lod1Solid]) -> Result<Value> {
    if solids.is_empty() {
        return Err(Error::Precondition("no solids to write".into()));
    }
    let mut order: Vec<&Lod1Solid> = solids.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = order.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::Precondition(format!("duplicate solid id `{}`", w[0].id)));
    }
    let mut t = [f64::INFINITY; 3];
    for s in &order {
        let b = s.footprint.bounds();
        t[0] = t[0].min(b.min_x);
        t[1] = t[1].min(b.min_y);
        t[2] = t[2].min(s.base);
    }
    let q = |v: f64, k: usize| ((v - t[k]) / SCALE).round() as i64;

    let mut vertices: Vec<Value> = Vec::new();
    let mut objects = Map::new();
    for s in order {
        let rings: Vec<&[Point2]> = s.footprint.rings().map(|r| r.vertices()).collect();
        let nv: usize = rings.iter().map(|r| r.len()).sum();
        let first = vertices.len();
        for z in [s.base, s.top] {
            for p in rings.iter().flat_map(|r| r.iter()) {
                vertices.push(json!([q(p.x, 0), q(p.y, 1), q(z, 2)]));
            }
        }
        let base_idx = |ring: usize, i: usize| -> usize {
            let start: usize = rings[..ring].iter().map(|r| r.len()).sum();
            first + start + i % rings[ring].len()
        };
        let top_idx = |ring: usize, i: usize| base_idx(ring, i) + nv;

        // same order as faces(): ground (rings reversed), roof, then one quad per edge
        let values: Vec<Value> = faces(s)
            .iter()
            .map(|f| match f.kind {
                FaceKind::Ground => json!(0),
                FaceKind::Roof => json!(1),
                FaceKind::Wall => json!(2),
            })
            .collect();
        let mut surfaces: Vec<Value> = Vec::new();
        surfaces.push(Value::Array(
            rings
                .iter()
                .enumerate()
                .map(|(k, r)| json!((0..r.len()).rev().map(|i| base_idx(k, i)).collect::<Vec<_>>()))
                .collect(),
        ));
        surfaces.push(Value::Array(
            rings
                .iter()
                .enumerate()
                .map(|(k, r)| json!((0..r.len()).map(|i| top_idx(k, i)).collect::<Vec<_>>()))
                .collect(),
        ));
        for (k, r) in rings.iter().enumerate() {
            for i in 0..r.len() {
                surfaces.push(json!([[base_idx(k, i), base_idx(k, i + 1), top_idx(k, i + 1), top_idx(k, i)]]));
            }
        }

        let mut attributes = Map::new();
        attributes.insert("id".into(), json!(s.id));
        attributes.insert(
            "measure".into(),
            s.measure.map_or(Value::Null, |m| json!(m.name())),
        );
        attributes.insert("base".into(), json!(s.base));
        attributes.insert("top".into(), json!(s.top));
        objects.insert(
            s.id.clone(),
            json!({
                "type": "Building",
                "attributes": attributes,
                "geometry": [{
                    "type": "Solid",
                    "lod": "1",
                    "boundaries": [surfaces],
                    "semantics": {
                        "surfaces": [
                            {"type": "GroundSurface"},
                            {"type": "RoofSurface"},
                            {"type": "WallSurface"}
                        ],
                        "values": [values]
                    }
                }]
            }),
        );
    }
    Ok(json!({
        "type": "CityJSON",
        "version": "2.0",
        "transform": {"scale": [SCALE, SCALE, SCALE], "translate": t},
        "CityObjects": objects,
        "vertices": vertices,
    }))
}

pub fn write_cityjson(solids: &[Lod1Solid], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let doc = to_cityjson(solids)?;
    let mut text = serde_json::to_string(&doc)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn bad(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::parse(WHAT, location, message)
}

/// Rebuilds prisms from the roof and ground surfaces of each Building.
pub fn parse_cityjson(doc: &Value) -> Result<Vec<Lod1Solid>> {
    if doc.get("type").and_then(Value::as_str) != Some("CityJSON") {
        return Err(bad("type", "expected \"CityJSON\""));
    }
    let tr = doc.get("transform").ok_or_else(|| bad("transform", "missing"))?;
    let vec3 = |key: &str| -> Result<[f64; 3]> {
        let a = tr
            .get(key)
            .and_then(Value::as_array)
            .filter(|a| a.len() == 3)
            .ok_or_else(|| bad(format!("transform.{key}"), "expected 3 numbers"))?;
        let mut out = [0.0; 3];
        for (k, v) in a.iter().enumerate() {
            out[k] = v.as_f64().ok_or_else(|| bad(format!("transform.{key}[{k}]"), "not a number"))?;
        }
        Ok(out)
    };
    let (scale, translate) = (vec3("scale")?, vec3("translate")?);
    let verts: Vec<[f64; 3]> = doc
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("vertices", "missing"))?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let a = v.as_array().filter(|a| a.len() == 3).ok_or_else(|| bad(format!("vertices[{i}]"), "expected 3 integers"))?;
            let mut out = [0.0; 3];
            for k in 0..3 {
                let n = a[k].as_i64().ok_or_else(|| bad(format!("vertices[{i}]"), "expected integers"))?;
                out[k] = n as f64 * scale[k] + translate[k];
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let objects = doc
        .get("CityObjects")
        .and_then(Value::as_object)
        .ok_or_else(|| bad("CityObjects", "missing"))?;

    let mut out = Vec::new();
    for (key, obj) in objects {
        let loc = format!("CityObjects.{key}");
        let geom = obj
            .pointer("/geometry/0")
            .ok_or_else(|| bad(&loc, "no geometry"))?;
        if geom.get("type").and_then(Value::as_str) != Some("Solid") {
            return Err(bad(&loc, "geometry is not a Solid"));
        }
        let shell = geom
            .pointer("/boundaries/0")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(&loc, "missing boundaries"))?;
        let sem_types: Vec<&str> = geom
            .pointer("/semantics/surfaces")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(&loc, "missing semantics"))?
            .iter()
            .map(|s| s.get("type").and_then(Value::as_str).unwrap_or(""))
            .collect();
        let values = geom
            .pointer("/semantics/values/0")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(&loc, "missing semantic values"))?;
        let kind_of = |i: usize| -> Option<&str> {
            values.get(i).and_then(Value::as_u64).and_then(|k| sem_types.get(k as usize).copied())
        };
        let surface_rings = |i: usize| -> Result<Vec<Vec<[f64; 3]>>> {
            shell[i]
                .as_array()
                .ok_or_else(|| bad(&loc, "surface is not an array"))?
                .iter()
                .map(|ring| {
                    ring.as_array()
                        .ok_or_else(|| bad(&loc, "ring is not an array"))?
                        .iter()
                        .map(|ix| {
                            ix.as_u64()
                                .and_then(|ix| verts.get(ix as usize).copied())
                                .ok_or_else(|| bad(&loc, "vertex index out of range"))
                        })
                        .collect()
                })
                .collect()
        };
        let roof_i = (0..shell.len()).find(|&i| kind_of(i) == Some("RoofSurface")).ok_or_else(|| bad(&loc, "no RoofSurface"))?;
        let ground_i = (0..shell.len()).find(|&i| kind_of(i) == Some("GroundSurface")).ok_or_else(|| bad(&loc, "no GroundSurface"))?;
        let roof = surface_rings(roof_i)?;
        let ground = surface_rings(ground_i)?;
        let top = roof[0][0][2];
        let base = ground[0][0][2];
        let to2 = |r: &Vec<[f64; 3]>| r.iter().map(|p| Point2::new(p[0], p[1])).collect::<Vec<_>>();
        let attrs = obj.get("attributes");
        let id = attrs
            .and_then(|a| a.get("id"))
            .and_then(Value::as_str)
            .unwrap_or(key)
            .to_string();
        let measure = attrs
            .and_then(|a| a.get("measure"))
            .and_then(Value::as_str)
            .map(str::parse::<HeightMeasure>)
            .transpose()?;
        let footprint = Footprint::new(
            id.clone(),
            to2(&roof[0]),
            roof[1..].iter().map(to2).collect(),
            Source::Predicted,
        )?;
        out.push(Lod1Solid {
            id,
            footprint,
            base,
            top,
            measure,
        });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn read_cityjson(path: impl AsRef<Path>) -> Result<Vec<Lod1Solid>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_str(&text)?;
    parse_cityjson(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruct::extrude;

    fn cube() -> Lod1Solid {
        extrude(&Footprint::rect("u", 0.0, 0.0, 1.0, 1.0).unwrap(), 0.0, 1.0)
            .unwrap()
            .with_measure(HeightMeasure::P90)
    }

    #[test]
    fn unit_cube_document() {
        let doc = to_cityjson(&[cube()]).unwrap();
        assert_eq!(doc["type"], "CityJSON");
        assert_eq!(doc["version"], "2.0");
        assert_eq!(doc["vertices"].as_array().unwrap().len(), 8);
        let objs = doc["CityObjects"].as_object().unwrap();
        assert_eq!(objs.len(), 1);
        let b = &objs["u"];
        assert_eq!(b["type"], "Building");
        assert_eq!(b["geometry"][0]["lod"], "1");
        assert_eq!(b["geometry"][0]["boundaries"][0].as_array().unwrap().len(), 6);
        assert_eq!(b["attributes"]["measure"], "p90");
        assert_eq!(doc["transform"]["scale"], json!([0.001, 0.001, 0.001]));
    }

    #[test]
    fn roundtrip_within_a_millimetre() {
        let fp = Footprint::rect("a", 100.1234, 200.98765, 110.5, 207.25).unwrap();
        let s = extrude(&fp, 1.2345, 9.87654).unwrap().with_measure(HeightMeasure::Median);
        let back = parse_cityjson(&to_cityjson(&[s.clone(), cube()]).unwrap()).unwrap();
        assert_eq!(back.len(), 2);
        let a = &back[0];
        assert_eq!(a.id, "a");
        assert_eq!(a.measure, Some(HeightMeasure::Median));
        assert!((a.base - s.base).abs() <= 5e-4 + 1e-12);
        assert!((a.top - s.top).abs() <= 5e-4 + 1e-12);
        for (p, q) in a.footprint.outer().vertices().iter().zip(s.footprint.outer().vertices()) {
            assert!(p.dist(*q) <= 1e-3);
        }
    }

    #[test]
    fn vertex_pool_is_per_solid() {
        let b = extrude(&Footprint::rect("b", 0.0, 0.0, 1.0, 1.0).unwrap(), 0.0, 1.0).unwrap();
        let doc = to_cityjson(&[cube(), b]).unwrap();
        assert_eq!(doc["vertices"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(to_cityjson(&[]), Err(Error::Precondition(_))));
        assert!(matches!(to_cityjson(&[cube(), cube()]), Err(Error::Precondition(_))));
    }

    #[test]
    fn hole_becomes_inner_ring() {
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
        let doc = to_cityjson(&[extrude(&fp, 0.0, 3.0).unwrap()]).unwrap();
        let shell = doc["CityObjects"]["h"]["geometry"][0]["boundaries"][0].as_array().unwrap();
        assert_eq!(shell.len(), 2 + 8);
        assert_eq!(shell[1].as_array().unwrap().len(), 2);
        let back = parse_cityjson(&doc).unwrap();
        assert_eq!(back[0].footprint.holes().len(), 1);
        assert!((back[0].footprint.area() - 96.0).abs() < 1e-9);
    }
}
