//! Flat little-endian fallback containers for hosts without HDF5 tooling.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! 0..8    magic  b"\x89EVPIPE\n"
//! 8..10   u16    format version (1)
//! 10..12  u16    kind: 1 = events, 2 = frames
//! 12..14  u16    sensor width
//! 14..16  u16    sensor height
//! 16..24  u64    record count
//! events: count x (i64 t, i64 x, i64 y, i64 p)
//! frames: count x (i64 t, height*width u8 pixels)
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{event_rows, events_from_rows, ContainerError};
use crate::model::{EventStream, Frame, SensorGeometry};

pub const MAGIC: &[u8; 8] = b"\x89EVPIPE\n";
pub const VERSION: u16 = 1;
const KIND_EVENTS: u16 = 1;
const KIND_FRAMES: u16 = 2;
const PREAMBLE: usize = 24;

fn header(kind: u16, geometry: SensorGeometry, count: usize) -> Result<[u8; PREAMBLE], ContainerError> {
    let dim = |v: u32| {
        u16::try_from(v).map_err(|_| ContainerError::BadHeader(format!("dimension {v} exceeds u16")))
    };
    let mut h = [0u8; PREAMBLE];
    h[..8].copy_from_slice(MAGIC);
    h[8..10].copy_from_slice(&VERSION.to_le_bytes());
    h[10..12].copy_from_slice(&kind.to_le_bytes());
    h[12..14].copy_from_slice(&dim(geometry.width)?.to_le_bytes());
    h[14..16].copy_from_slice(&dim(geometry.height)?.to_le_bytes());
    h[16..24].copy_from_slice(&(count as u64).to_le_bytes());
    Ok(h)
}

fn parse_header(bytes: &[u8], kind: u16) -> Result<(SensorGeometry, usize), ContainerError> {
    if bytes.len() < PREAMBLE || &bytes[..8] != MAGIC {
        return Err(ContainerError::BadHeader("not an .evt container".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let version = u16_at(8);
    if version != VERSION {
        return Err(ContainerError::BadHeader(format!("unsupported .evt version {version}")));
    }
    let found = u16_at(10);
    if found != kind {
        return Err(ContainerError::BadHeader(format!(
            "container kind {found}, expected {kind}"
        )));
    }
    let geometry = SensorGeometry::new(u32::from(u16_at(12)), u32::from(u16_at(14)))
        .ok_or_else(|| ContainerError::BadHeader("zero sensor dimension".into()))?;
    let count = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    Ok((geometry, count))
}

fn truncated(name: &str) -> ContainerError {
    ContainerError::BadShape {
        name: name.into(),
        shape: vec![],
        expected: "payload matching the header count".into(),
    }
}

pub fn read_events(path: &Path) -> Result<EventStream, ContainerError> {
    let bytes = fs::read(path)?;
    let (geometry, count) = parse_header(&bytes, KIND_EVENTS)?;
    let body = &bytes[PREAMBLE..];
    if body.len() != count.checked_mul(32).ok_or_else(|| truncated("events"))? {
        return Err(truncated("events"));
    }
    let rows: Vec<[i64; 4]> = body
        .chunks_exact(32)
        .map(|c| std::array::from_fn(|k| i64::from_le_bytes(c[k * 8..k * 8 + 8].try_into().unwrap())))
        .collect();
    events_from_rows(&rows, geometry)
}

pub fn write_events(stream: &EventStream, path: &Path) -> Result<(), ContainerError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&header(KIND_EVENTS, stream.geometry(), stream.len())?)?;
    for row in event_rows(stream) {
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_frames(path: &Path) -> Result<Vec<Frame>, ContainerError> {
    let bytes = fs::read(path)?;
    let (geometry, count) = parse_header(&bytes, KIND_FRAMES)?;
    let record = 8 + geometry.pixel_count();
    let body = &bytes[PREAMBLE..];
    if body.len() != count.checked_mul(record).ok_or_else(|| truncated("frames"))? {
        return Err(truncated("frames"));
    }
    Ok(body
        .chunks_exact(record)
        .map(|c| Frame {
            t: i64::from_le_bytes(c[..8].try_into().unwrap()),
            width: geometry.width,
            height: geometry.height,
            pixels: c[8..].to_vec(),
        })
        .collect())
}

pub fn write_frames(frames: &[Frame], path: &Path) -> Result<(), ContainerError> {
    let geometry = frames
        .first()
        .map(|f| SensorGeometry {
            width: f.width,
            height: f.height,
        })
        .unwrap_or_default();
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&header(KIND_FRAMES, geometry, frames.len())?)?;
    for f in frames {
        w.write_all(&f.t.to_le_bytes())?;
        w.write_all(&f.pixels)?;
    }
    w.flush()?;
    Ok(())
}
