//! Per-building morphology: footprint area and perimeter, and per height
//! measure the height, exterior wall area and volume.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::heights::HeightMeasure;
use crate::reconstruct::{faces, volume, wall_area, Lod1Solid};

pub const CSV_HEADER: [&str; 8] = [
    "id",
    "area_m2",
    "perimeter_m",
    "measure",
    "height_m",
    "wall_area_m2",
    "volume_m3",
    "flags",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureMorph {
    pub height: f64,
    pub wall_area: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorphRecord {
    pub id: String,
    pub area: f64,
    pub perimeter: f64,
    /// Keyed by measure; `None` for solids extruded without one.
    pub per_measure: BTreeMap<Option<HeightMeasure>, MeasureMorph>,
    pub flags: Vec<String>,
}

impl MorphRecord {
    pub fn get(&self, m: HeightMeasure) -> Option<&MeasureMorph> {
        self.per_measure.get(&Some(m))
    }
}

/// Wall area and volume come from the solid's faces.
pub fn morphology_of(s: &Lod1Solid) -> MorphRecord {
    let fs = faces(s);
    MorphRecord {
        id: s.id.clone(),
        area: s.footprint.area(),
        perimeter: s.footprint.perimeter(),
        per_measure: BTreeMap::from([(
            s.measure,
            MeasureMorph {
                height: s.height(),
                wall_area: wall_area(&fs),
                volume: volume(&fs),
            },
        )]),
        flags: Vec::new(),
    }
}

/// One record per id, merging the per-measure entries of solids sharing an
/// id. Records come out sorted by id.
pub fn morphology_table(solids: &[Lod1Solid]) -> Vec<MorphRecord> {
    let mut by_id: BTreeMap<String, MorphRecord> = BTreeMap::new();
    for s in solids {
        let r = morphology_of(s);
        match by_id.get_mut(&r.id) {
            Some(existing) => existing.per_measure.extend(r.per_measure),
            None => {
                by_id.insert(r.id.clone(), r);
            }
        }
    }
    by_id.into_values().collect()
}

fn measure_name(m: Option<HeightMeasure>) -> &'static str {
    m.map_or("", |m| m.name())
}

pub fn write_morphology_csv_to<W: std::io::Write>(records: &[MorphRecord], w: W) -> Result<()> {
    let mut rows: Vec<(&str, &str, &MorphRecord, &MeasureMorph)> = records
        .iter()
        .flat_map(|r| {
            r.per_measure
                .iter()
                .map(move |(m, v)| (r.id.as_str(), measure_name(*m), r, v))
        })
        .collect();
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for (id, m, r, v) in rows {
        wr.write_record([
            id.to_string(),
            format!("{:.3}", r.area),
            format!("{:.3}", r.perimeter),
            m.to_string(),
            format!("{:.3}", v.height),
            format!("{:.3}", v.wall_area),
            format!("{:.3}", v.volume),
            r.flags.join(";"),
        ])?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_morphology_csv(records: &[MorphRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_morphology_csv_to(records, std::io::BufWriter::new(f))
}
