//! ESRI ASCII grids. Values are written with shortest round-trip decimals so
//! reading back is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{Grid, DEFAULT_NODATA};
use crate::error::{Error, Result};
use crate::geometry::Point2;

const WHAT: &str = "ESRI ASCII grid";

pub fn format_grid(g: &Grid) -> String {
    let mut s = String::with_capacity(g.values().len() * 4 + 128);
    let _ = writeln!(s, "ncols {}", g.ncols());
    let _ = writeln!(s, "nrows {}", g.nrows());
    let _ = writeln!(s, "xllcenter {}", g.origin().x);
    let _ = writeln!(s, "yllcenter {}", g.origin().y);
    let _ = writeln!(s, "cellsize {}", g.cell());
    let _ = writeln!(s, "NODATA_value {}", g.nodata());
    for r in (0..g.nrows()).rev() {
        for c in 0..g.ncols() {
            let v = g.get(c, r);
            let v = if v.is_nan() { g.nodata() } else { v };
            if c > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_grid(text: &str) -> Result<Grid> {
    let mut ncols = None;
    let mut nrows = None;
    let mut x = None;
    let mut y = None;
    let mut corner = false;
    let mut cell = None;
    let mut nodata = None;
    let mut lines = text.lines().enumerate().peekable();

    fn set<T>(slot: &mut Option<T>, v: T, key: &str, ln: usize) -> Result<()> {
        if slot.is_some() {
            return Err(Error::parse(WHAT, format!("line {ln}"), format!("duplicate header key `{key}`")));
        }
        *slot = Some(v);
        Ok(())
    }

    while let Some(&(i, line)) = lines.peek() {
        let ln = i + 1;
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        lines.next();
        let raw = parts
            .next()
            .ok_or_else(|| Error::parse(WHAT, format!("line {ln}"), format!("header key `{key}` has no value")))?;
        let num = || -> Result<f64> {
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(WHAT, format!("line {ln}"), format!("`{key}` is not a number: {raw:?}")))
        };
        let count = || -> Result<usize> {
            raw.parse::<usize>()
                .map_err(|_| Error::parse(WHAT, format!("line {ln}"), format!("`{key}` must be a non-negative integer, got {raw:?}")))
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => set(&mut ncols, count()?, "ncols", ln)?,
            "nrows" => set(&mut nrows, count()?, "nrows", ln)?,
            "xllcenter" => set(&mut x, num()?, "xllcenter", ln)?,
            "yllcenter" => set(&mut y, num()?, "yllcenter", ln)?,
            "xllcorner" => {
                corner = true;
                set(&mut x, num()?, "xllcorner", ln)?
            }
            "yllcorner" => {
                corner = true;
                set(&mut y, num()?, "yllcorner", ln)?
            }
            "cellsize" => set(&mut cell, num()?, "cellsize", ln)?,
            "nodata_value" => set(&mut nodata, num()?, "NODATA_value", ln)?,
            _ => {
                return Err(Error::parse(WHAT, format!("line {ln}"), format!("unknown header key `{key}`")));
            }
        }
    }
    let header_end = lines.peek().map_or(text.lines().count() + 1, |&(i, _)| i + 1);
    let missing = |k: &str| Error::parse(WHAT, format!("line {header_end}"), format!("missing header key `{k}`"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let x = x.ok_or_else(|| missing("xllcenter"))?;
    let y = y.ok_or_else(|| missing("yllcenter"))?;
    let cell = cell.ok_or_else(|| missing("cellsize"))?;
    let nodata = nodata.unwrap_or(DEFAULT_NODATA);
    let origin = if corner {
        Point2::new(x + 0.5 * cell, y + 0.5 * cell)
    } else {
        Point2::new(x, y)
    };

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(nrows);
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::parse(WHAT, format!("line {ln}"), format!("not a number: {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != ncols {
            return Err(Error::parse(
                WHAT,
                format!("line {ln}"),
                format!("row has {} values but ncols is {ncols}", row.len()),
            ));
        }
        if rows.len() == nrows {
            return Err(Error::parse(WHAT, format!("line {ln}"), format!("more than nrows = {nrows} rows")));
        }
        rows.push(row);
    }
    if rows.len() != nrows {
        return Err(Error::parse(
            WHAT,
            format!("line {}", text.lines().count() + 1),
            format!("found {} rows but nrows is {nrows}", rows.len()),
        ));
    }
    let values = rows.into_iter().rev().flatten().collect();
    Grid::from_values(origin, cell, ncols, nrows, values, nodata)
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid(&text).map_err(|e| match e {
        Error::Parse { what, location, message } => Error::Parse {
            what,
            location: format!("{}: {location}", path.display()),
            message,
        },
        e => e,
    })
}

pub fn write_grid(g: &Grid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_grid(g)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_cell_layout() {
        let g = Grid::new(Point2::new(0.5, 0.5), 1.0, 1, 1, 5.0, DEFAULT_NODATA).unwrap();
        let s = format_grid(&g);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[6], "5");
        assert_eq!(lines[5], "NODATA_value -9999");
        assert_eq!(parse_grid(&s).unwrap(), g);
    }

    #[test]
    fn top_row_first() {
        let s = "ncols 2\nnrows 2\nxllcenter 0\nyllcenter 0\ncellsize 1\nNODATA_value -9999\n1 2\n3 4\n";
        let g = parse_grid(s).unwrap();
        assert_eq!(g.get(0, 0), 3.0);
        assert_eq!(g.get(1, 1), 2.0);
        assert_eq!(format_grid(&g), s);
    }

    #[test]
    fn corner_header_and_default_nodata() {
        let s = "NCOLS 1\nNROWS 1\nXLLCORNER 10\nYLLCORNER 20\nCELLSIZE 2\n7\n";
        let g = parse_grid(s).unwrap();
        assert_eq!(g.origin(), Point2::new(11.0, 21.0));
        assert_eq!(g.nodata(), DEFAULT_NODATA);
    }

    #[test]
    fn header_errors() {
        let e = parse_grid("ncols 3\nnrows 1\nxllcenter 0\nyllcenter 0\ncellsize 1\n1 2\n").unwrap_err();
        assert!(e.to_string().contains("ncols"), "{e}");
        assert!(e.to_string().contains("line 6"), "{e}");
        let e = parse_grid("ncols 1\nncols 1\n").unwrap_err();
        assert!(e.to_string().contains("duplicate") && e.to_string().contains("line 2"), "{e}");
        let e = parse_grid("ncols 1\nnrows 1\nxllcenter 0\ncellsize 1\n1\n").unwrap_err();
        assert!(e.to_string().contains("yllcenter"), "{e}");
        let e = parse_grid("ncols 1\nnrows 2\nxllcenter 0\nyllcenter 0\ncellsize 1\n1\n").unwrap_err();
        assert!(e.to_string().contains("nrows"), "{e}");
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.asc");
        let g = Grid::from_values(Point2::new(0.115, 0.115), 0.23, 2, 1, vec![0.1 + 0.2, -9999.0], -9999.0).unwrap();
        write_grid(&g, &p).unwrap();
        assert_eq!(read_grid(&p).unwrap(), g);
        std::fs::write(&p, "ncols x\n").unwrap();
        assert!(read_grid(&p).unwrap_err().to_string().contains("g.asc"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn random_grid_roundtrip_bit_exact(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..100 * 100).map(|_| rng.gen_range(-1e4..1e4)).collect();
            let g = Grid::from_values(Point2::new(rng.gen(), rng.gen()), 0.23, 100, 100, vals, DEFAULT_NODATA).unwrap();
            let back = parse_grid(&format_grid(&g)).unwrap();
            prop_assert!(back.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(back, g);
        }
    }
}
