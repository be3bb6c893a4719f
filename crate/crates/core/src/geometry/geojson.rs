//! GeoJSON (RFC 7946) FeatureCollection I/O for footprints.
//!
//! Each feature carries a `Polygon` geometry and the properties `id` and
//! `source`. Extra properties are written verbatim and ignored on read.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{Footprint, Point2, Source};
use crate::error::{Error, Result};

fn ring_json(pts: &[Point2]) -> Value {
    let mut coords: Vec<Value> = pts.iter().map(|p| json!([p.x, p.y])).collect();
    if let Some(first) = pts.first() {
        coords.push(json!([first.x, first.y]));
    }
    Value::Array(coords)
}

pub fn footprint_feature(fp: &Footprint, extra: Option<&Map<String, Value>>) -> Value {
    let rings: Vec<Value> = fp.rings().map(|r| ring_json(r.vertices())).collect();
    let mut props = Map::new();
    props.insert("id".into(), Value::String(fp.id.clone()));
    props.insert("source".into(), Value::String(fp.source.as_str().into()));
    if let Some(extra) = extra {
        for (k, v) in extra {
            props.insert(k.clone(), v.clone());
        }
    }
    json!({
        "type": "Feature",
        "properties": Value::Object(props),
        "geometry": { "type": "Polygon", "coordinates": rings },
    })
}

pub fn to_feature_collection<'a>(
    items: impl IntoIterator<Item = (&'a Footprint, Option<&'a Map<String, Value>>)>,
) -> Value {
    let features: Vec<Value> = items
        .into_iter()
        .map(|(fp, extra)| footprint_feature(fp, extra))
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

pub fn write_footprints(path: &Path, fps: &[Footprint]) -> Result<()> {
    write_collection(path, &to_feature_collection(fps.iter().map(|f| (f, None))))
}

pub fn write_collection(path: &Path, fc: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(fc)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn bad(loc: String, msg: impl Into<String>) -> Error {
    Error::parse("GeoJSON", loc, msg)
}

fn parse_ring(v: &Value, loc: &str) -> Result<Vec<Point2>> {
    let arr = v
        .as_array()
        .ok_or_else(|| bad(loc.to_string(), "ring is not an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, c)| {
            let c = c.as_array().filter(|c| c.len() >= 2);
            let xy = c.and_then(|c| Some((c[0].as_f64()?, c[1].as_f64()?)));
            xy.map(Point2::from)
                .ok_or_else(|| bad(format!("{loc}[{i}]"), "position must be [x, y, ...] numbers"))
        })
        .collect()
}

/// Parses a FeatureCollection. Features without a `source` property get `default_source`.
pub fn parse_footprints(doc: &Value, default_source: Source) -> Result<Vec<Footprint>> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(bad("root".into(), "expected a FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("root".into(), "missing `features` array"))?;
    let mut out = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let loc = format!("features[{i}]");
        let props = f.get("properties").and_then(Value::as_object);
        let id = match props.and_then(|p| p.get("id")) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => match f.get("id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => return Err(bad(loc, "missing `id` property")),
            },
        };
        let source = match props.and_then(|p| p.get("source")).and_then(Value::as_str) {
            Some(s) => s.parse()?,
            None => default_source,
        };
        let geom = f
            .get("geometry")
            .ok_or_else(|| bad(loc.clone(), "missing geometry"))?;
        if geom.get("type").and_then(Value::as_str) != Some("Polygon") {
            return Err(bad(loc, "only Polygon geometries are supported"));
        }
        let rings = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| bad(loc.clone(), "polygon has no rings"))?;
        let outer = parse_ring(&rings[0], &format!("{loc}.coordinates[0]"))?;
        let holes = rings[1..]
            .iter()
            .enumerate()
            .map(|(k, r)| parse_ring(r, &format!("{loc}.coordinates[{}]", k + 1)))
            .collect::<Result<Vec<_>>>()?;
        let fp = Footprint::new(id, outer, holes, source).map_err(|e| bad(loc, e.to_string()))?;
        out.push(fp);
    }
    Ok(out)
}

pub fn read_footprints(path: &Path, default_source: Source) -> Result<Vec<Footprint>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::parse("GeoJSON", format!("{}:{}", path.display(), e.line()), e.to_string()))?;
    parse_footprints(&doc, default_source)
}
