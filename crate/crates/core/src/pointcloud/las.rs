//! Minimal LAS 1.2–1.4 reader/writer for point data record formats 0, 1 and 6.
//!
//! Only coordinates and classification are kept. Coordinates are
//! `raw · scale + offset` with the header's per-axis scale and offset.

use std::path::Path;

use super::LidarPoint;
use crate::error::{Error, Result};

const SIGNATURE: &[u8; 4] = b"LASF";

fn base_record_len(format: u8) -> Option<usize> {
    match format {
        0 => Some(20),
        1 => Some(28),
        6 => Some(30),
        _ => None,
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn slice(&self, at: usize, n: usize, field: &str) -> Result<&[u8]> {
        self.bytes.get(at..at + n).ok_or_else(|| {
            Error::parse(
                "LAS",
                format!("byte {at}"),
                format!("file truncated while reading {field}"),
            )
        })
    }
    fn u8(&self, at: usize, f: &str) -> Result<u8> {
        Ok(self.slice(at, 1, f)?[0])
    }
    fn u16(&self, at: usize, f: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.slice(at, 2, f)?.try_into().unwrap()))
    }
    fn u32(&self, at: usize, f: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.slice(at, 4, f)?.try_into().unwrap()))
    }
    fn i32(&self, at: usize, f: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.slice(at, 4, f)?.try_into().unwrap()))
    }
    fn u64(&self, at: usize, f: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.slice(at, 8, f)?.try_into().unwrap()))
    }
    fn f64(&self, at: usize, f: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.slice(at, 8, f)?.try_into().unwrap()))
    }
}

/// Parsed public header fields the reader needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LasHeader {
    pub version: (u8, u8),
    pub header_size: u16,
    pub point_offset: u32,
    pub format: u8,
    pub record_len: u16,
    pub count: u64,
    pub scale: [f64; 3],
    pub offset: [f64; 3],
}

pub fn parse_header(bytes: &[u8]) -> Result<LasHeader> {
    let r = Reader { bytes };
    if r.slice(0, 4, "file signature")? != SIGNATURE {
        return Err(Error::parse("LAS", "byte 0", "missing LASF signature"));
    }
    let version = (r.u8(24, "version major")?, r.u8(25, "version minor")?);
    if version.0 != 1 || !(2..=4).contains(&version.1) {
        return Err(Error::parse(
            "LAS",
            "byte 24",
            format!("unsupported LAS version {}.{}", version.0, version.1),
        ));
    }
    let header_size = r.u16(94, "header size")?;
    let min_header = if version.1 == 4 { 375 } else { 227 };
    if (header_size as usize) < min_header {
        return Err(Error::parse(
            "LAS",
            "byte 94",
            format!("header size {header_size} too small for LAS 1.{}", version.1),
        ));
    }
    let point_offset = r.u32(96, "offset to point data")?;
    if point_offset < header_size as u32 {
        return Err(Error::parse("LAS", "byte 96", "point data offset inside header"));
    }
    let format = r.u8(104, "point data format")? & 0x3f;
    let Some(base) = base_record_len(format) else {
        return Err(Error::UnsupportedPointFormat(format));
    };
    let record_len = r.u16(105, "point record length")?;
    if (record_len as usize) < base {
        return Err(Error::parse(
            "LAS",
            "byte 105",
            format!("record length {record_len} shorter than format {format} needs ({base})"),
        ));
    }
    let legacy = r.u32(107, "legacy point count")? as u64;
    let count = if version.1 == 4 {
        let c = r.u64(247, "point count")?;
        if c == 0 {
            legacy
        } else {
            c
        }
    } else {
        legacy
    };
    let scale = [r.f64(131, "x scale")?, r.f64(139, "y scale")?, r.f64(147, "z scale")?];
    let offset = [r.f64(155, "x offset")?, r.f64(163, "y offset")?, r.f64(171, "z offset")?];
    if scale.iter().any(|s| *s == 0.0 || !s.is_finite()) {
        return Err(Error::parse("LAS", "byte 131", "scale factors must be finite and nonzero"));
    }
    Ok(LasHeader {
        version,
        header_size,
        point_offset,
        format,
        record_len,
        count,
        scale,
        offset,
    })
}

pub fn parse_las(bytes: &[u8]) -> Result<Vec<LidarPoint>> {
    let h = parse_header(bytes)?;
    let r = Reader { bytes };
    let stride = h.record_len as usize;
    let start = h.point_offset as usize;
    let class_at = if h.format == 6 { 16 } else { 15 };
    let mut out = Vec::with_capacity(h.count.min(1 << 28) as usize);
    for i in 0..h.count as usize {
        let at = start + i * stride;
        r.slice(at, stride, &format!("point record {i}"))?;
        let x = r.i32(at, "x")? as f64 * h.scale[0] + h.offset[0];
        let y = r.i32(at + 4, "y")? as f64 * h.scale[1] + h.offset[1];
        let z = r.i32(at + 8, "z")? as f64 * h.scale[2] + h.offset[2];
        let mut class = r.u8(at + class_at, "classification")?;
        if h.format < 6 {
            class &= 0x1f;
        }
        out.push(LidarPoint { x, y, z, class });
    }
    Ok(out)
}

/// Serializes points as LAS 1.2 (formats 0/1) or 1.4 (format 6), no VLRs.
pub fn encode_las(points: &[LidarPoint], format: u8, scale: [f64; 3], offset: [f64; 3]) -> Result<Vec<u8>> {
    let Some(rec) = base_record_len(format) else {
        return Err(Error::UnsupportedPointFormat(format));
    };
    let v14 = format == 6;
    let header_size: usize = if v14 { 375 } else { 227 };
    let mut buf = vec![0u8; header_size];
    buf[0..4].copy_from_slice(SIGNATURE);
    buf[24] = 1;
    buf[25] = if v14 { 4 } else { 2 };
    let sw = b"lod1";
    buf[58..58 + sw.len()].copy_from_slice(sw);
    buf[94..96].copy_from_slice(&(header_size as u16).to_le_bytes());
    buf[96..100].copy_from_slice(&(header_size as u32).to_le_bytes());
    buf[104] = format;
    buf[105..107].copy_from_slice(&(rec as u16).to_le_bytes());
    let legacy = if v14 { 0 } else { points.len() as u32 };
    buf[107..111].copy_from_slice(&legacy.to_le_bytes());
    for k in 0..3 {
        buf[131 + 8 * k..139 + 8 * k].copy_from_slice(&scale[k].to_le_bytes());
        buf[155 + 8 * k..163 + 8 * k].copy_from_slice(&offset[k].to_le_bytes());
    }
    let mut mins = [f64::INFINITY; 3];
    let mut maxs = [f64::NEG_INFINITY; 3];
    for p in points {
        for (k, v) in [p.x, p.y, p.z].into_iter().enumerate() {
            mins[k] = mins[k].min(v);
            maxs[k] = maxs[k].max(v);
        }
    }
    if points.is_empty() {
        mins = [0.0; 3];
        maxs = [0.0; 3];
    }
    for k in 0..3 {
        buf[179 + 16 * k..187 + 16 * k].copy_from_slice(&maxs[k].to_le_bytes());
        buf[187 + 16 * k..195 + 16 * k].copy_from_slice(&mins[k].to_le_bytes());
    }
    if v14 {
        buf[247..255].copy_from_slice(&(points.len() as u64).to_le_bytes());
    }
    buf.reserve(points.len() * rec);
    for (i, p) in points.iter().enumerate() {
        let mut r = vec![0u8; rec];
        for (k, v) in [p.x, p.y, p.z].into_iter().enumerate() {
            let raw = ((v - offset[k]) / scale[k]).round();
            if raw < i32::MIN as f64 || raw > i32::MAX as f64 {
                return Err(Error::Precondition(format!(
                    "point {i} coordinate {v} does not fit the LAS scale/offset"
                )));
            }
            r[4 * k..4 * k + 4].copy_from_slice(&(raw as i32).to_le_bytes());
        }
        if v14 {
            r[14] = 0x11; // return 1 of 1
            r[16] = p.class;
        } else {
            r[14] = 0x09;
            r[15] = p.class & 0x1f;
        }
        buf.extend_from_slice(&r);
    }
    Ok(buf)
}

pub fn write_las(path: &Path, points: &[LidarPoint], format: u8, scale: [f64; 3], offset: [f64; 3]) -> Result<()> {
    let bytes = encode_las(points, format, scale, offset)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
