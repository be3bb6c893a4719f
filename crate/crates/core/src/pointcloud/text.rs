//! `x y z class` whitespace-separated text points. `#` starts a comment.

use std::fmt::Write as _;

use super::LidarPoint;
use crate::error::{Error, Result};

pub fn parse_xyzc(text: &str) -> Result<Vec<LidarPoint>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let loc = || format!("line {}", ln + 1);
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                "xyzc",
                loc(),
                format!("expected 4 fields `x y z class`, got {}", fields.len()),
            ));
        }
        let mut xyz = [0.0f64; 3];
        for (k, name) in ["x", "y", "z"].iter().enumerate() {
            xyz[k] = fields[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse("xyzc", loc(), format!("field {name} is not a finite number: {:?}", fields[k])))?;
        }
        let class = fields[3]
            .parse::<u8>()
            .map_err(|_| Error::parse("xyzc", loc(), format!("class must be an integer 0-255, got {:?}", fields[3])))?;
        out.push(LidarPoint::new(xyz[0], xyz[1], xyz[2], class));
    }
    Ok(out)
}

/// Shortest round-trip rendering, so re-parsing is value-exact.
pub fn format_xyzc(points: &[LidarPoint]) -> String {
    let mut s = String::with_capacity(points.len() * 32);
    for p in points {
        let _ = writeln!(s, "{} {} {} {}", p.x, p.y, p.z, p.class);
    }
    s
}
