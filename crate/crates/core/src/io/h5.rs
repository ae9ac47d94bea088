use std::path::Path;

use hdf5::types::TypeDescriptor;
use hdf5::File;

use super::{event_rows, events_from_rows, ContainerError};
use crate::model::{EventStream, Frame, SensorGeometry};

const WIDTH_ATTR: &str = "sensor_width";
const HEIGHT_ATTR: &str = "sensor_height";

// The library reports failures through `Result`; HDF5's own per-thread
// error printing would only duplicate them on stderr.
fn open(path: &Path) -> Result<File, ContainerError> {
    hdf5::silence_errors(true);
    Ok(File::open(path)?)
}

fn create(path: &Path) -> Result<File, ContainerError> {
    hdf5::silence_errors(true);
    // No object timestamps, so identical content gives identical bytes.
    Ok(File::with_options()
        .with_fcpl(|p| p.obj_track_times(false))
        .create(path)?)
}

fn dataset(file: &File, name: &str) -> Result<hdf5::Dataset, ContainerError> {
    file.dataset(name)
        .map_err(|_| ContainerError::MissingDataset(name.to_string()))
}

/// Refuses non-integer datasets instead of letting HDF5 convert them.
fn require_integer(ds: &hdf5::Dataset, name: &str) -> Result<(), ContainerError> {
    let desc = ds.dtype()?.to_descriptor()?;
    match desc {
        TypeDescriptor::Integer(_) | TypeDescriptor::Unsigned(_) => Ok(()),
        other => Err(ContainerError::WrongDtype {
            name: name.to_string(),
            found: format!("{other:?}"),
        }),
    }
}

fn stored_geometry(file: &File) -> Option<SensorGeometry> {
    let names = file.attr_names().ok()?;
    if ![WIDTH_ATTR, HEIGHT_ATTR].iter().all(|a| names.iter().any(|n| n == a)) {
        return None;
    }
    let w = file.attr(WIDTH_ATTR).ok()?.read_scalar::<u32>().ok()?;
    let h = file.attr(HEIGHT_ATTR).ok()?.read_scalar::<u32>().ok()?;
    SensorGeometry::new(w, h)
}

fn store_geometry(file: &File, g: SensorGeometry) -> Result<(), ContainerError> {
    file.new_attr::<u32>().create(WIDTH_ATTR)?.write_scalar(&g.width)?;
    file.new_attr::<u32>().create(HEIGHT_ATTR)?.write_scalar(&g.height)?;
    Ok(())
}

pub(super) fn read_events(path: &Path, fallback: SensorGeometry) -> Result<EventStream, ContainerError> {
    let file = open(path)?;
    let geometry = stored_geometry(&file).unwrap_or(fallback);
    let ds = dataset(&file, "events")?;
    require_integer(&ds, "events")?;
    let shape = ds.shape();
    let n = match shape.as_slice() {
        [n, 4] => *n,
        _ => {
            return Err(ContainerError::BadShape {
                name: "events".into(),
                shape,
                expected: "N x 4".into(),
            })
        }
    };
    let flat: Vec<i64> = if n == 0 { Vec::new() } else { ds.read_raw()? };
    let rows: Vec<[i64; 4]> = flat
        .chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect();
    events_from_rows(&rows, geometry)
}

pub(super) fn write_events(stream: &EventStream, path: &Path) -> Result<(), ContainerError> {
    let file = create(path)?;
    store_geometry(&file, stream.geometry())?;
    let rows = event_rows(stream);
    let ds = file
        .new_dataset::<i64>()
        .shape((rows.len(), 4))
        .create("events")?;
    if !rows.is_empty() {
        let flat: Vec<i64> = rows.iter().flatten().copied().collect();
        ds.write_raw(&flat)?;
    }
    file.flush()?;
    Ok(())
}

pub(super) fn read_frames(path: &Path) -> Result<Vec<Frame>, ContainerError> {
    let file = open(path)?;
    let frames = dataset(&file, "frames")?;
    let stamps = dataset(&file, "frame_ts")?;
    require_integer(&frames, "frames")?;
    require_integer(&stamps, "frame_ts")?;
    let shape = frames.shape();
    let (m, h, w) = match shape.as_slice() {
        [m, h, w] => (*m, *h, *w),
        _ => {
            return Err(ContainerError::BadShape {
                name: "frames".into(),
                shape,
                expected: "M x H x W".into(),
            })
        }
    };
    let ts_shape = stamps.shape();
    if ts_shape != [m] {
        return Err(ContainerError::BadShape {
            name: "frame_ts".into(),
            shape: ts_shape,
            expected: format!("({m},)"),
        });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let pixels: Vec<u8> = frames.read_raw()?;
    let ts: Vec<i64> = stamps.read_raw()?;
    let size = h * w;
    Ok(ts
        .into_iter()
        .zip(pixels.chunks_exact(size))
        .map(|(t, px)| Frame {
            t,
            width: w as u32,
            height: h as u32,
            pixels: px.to_vec(),
        })
        .collect())
}

pub(super) fn write_frames(frames: &[Frame], path: &Path) -> Result<(), ContainerError> {
    let file = create(path)?;
    let (h, w) = frames
        .first()
        .map(|f| (f.height as usize, f.width as usize))
        .unwrap_or((0, 0));
    if let Some(f) = frames.first() {
        store_geometry(&file, SensorGeometry { width: f.width, height: f.height })?;
    }
    let pixels_ds = file
        .new_dataset::<u8>()
        .shape((frames.len(), h, w))
        .create("frames")?;
    let ts_ds = file
        .new_dataset::<i64>()
        .shape((frames.len(),))
        .create("frame_ts")?;
    if !frames.is_empty() {
        let pixels: Vec<u8> = frames.iter().flat_map(|f| f.pixels.iter().copied()).collect();
        pixels_ds.write_raw(&pixels)?;
        let ts: Vec<i64> = frames.iter().map(|f| f.t).collect();
        ts_ds.write_raw(&ts)?;
    }
    file.flush()?;
    Ok(())
}
