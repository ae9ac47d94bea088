//! On-disk containers.
//!
//! A sequence directory holds:
//!
//! | file              | format | content                                        |
//! |-------------------|--------|------------------------------------------------|
//! | `events.h5`       | HDF5   | `events`: N x 4 `i64` rows `(t, x, y, p)`      |
//! | `frames.h5`       | HDF5   | `frames`: M x H x W `u8`, `frame_ts`: M `i64`  |
//! | `label.npy`       | NPY    | K x 6 `f64` rows `(t, class_id, bx, by, w, h)` |
//! | `frame_label.npy` | NPY    | optional frame labels, same layout             |
//!
//! Event and frame containers may instead use the flat `.evt` format (see
//! [`evt`]); readers dispatch on the file extension. Sample bundles are NPZ
//! archives (see [`bundle`]). Writers go through a temporary file in the
//! target directory and rename it into place.

pub mod bundle;
pub mod evt;
mod h5;
pub mod npy;

use std::fs;
use std::path::{Path, PathBuf};

use crate::model::{
    Annotation, BBox, DefectClass, Event, EventStream, Frame, Micros, Polarity, SensorGeometry,
    SequenceRecording, StreamError,
};

pub use bundle::{read_sample_bundle, write_sample_bundle};

#[derive(Debug, thiserror::Error)]
pub enum ContainerError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("hdf5: {0}")]
    Hdf5(String),
    #[error("zip: {0}")]
    Zip(String),
    #[error("missing dataset `{0}`")]
    MissingDataset(String),
    #[error("`{name}` has shape {shape:?}, expected {expected}")]
    BadShape {
        name: String,
        shape: Vec<usize>,
        expected: String,
    },
    #[error("timestamps decrease at row {index}")]
    UnsortedTimestamps { index: usize },
    #[error("row {index}: pixel ({x}, {y}) is outside the {width}x{height} sensor")]
    CoordinateOutOfBounds {
        index: usize,
        x: i64,
        y: i64,
        width: u32,
        height: u32,
    },
    #[error("row {index}: polarity {value} is not 0 or 1")]
    BadPolarity { index: usize, value: i64 },
    #[error("row {index}: negative timestamp {t}")]
    NegativeTimestamp { index: usize, t: i64 },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("dataset {name} has element type {found}, expected integers")]
    WrongDtype { name: String, found: String },
    #[error("label array has {found} columns, expected 6")]
    WrongColumnCount { found: usize },
    #[error("row {row}: unknown class id {value}")]
    UnknownClassId { row: usize, value: f64 },
    #[error("archive lacks required array `{0}`")]
    MissingRequiredArray(String),
    #[error("bad metadata: {0}")]
    BadMetadata(String),
}

impl From<hdf5::Error> for ContainerError {
    fn from(e: hdf5::Error) -> Self {
        ContainerError::Hdf5(e.to_string())
    }
}

impl From<zip::result::ZipError> for ContainerError {
    fn from(e: zip::result::ZipError) -> Self {
        ContainerError::Zip(e.to_string())
    }
}

pub const EVENTS_FILE: &str = "events.h5";
pub const FRAMES_FILE: &str = "frames.h5";
pub const LABELS_FILE: &str = "label.npy";
pub const FRAME_LABELS_FILE: &str = "frame_label.npy";

/// On-disk encoding for events and frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerFormat {
    #[default]
    Hdf5,
    /// The flat `.evt` fallback.
    Flat,
}

impl ContainerFormat {
    fn extension(self) -> &'static str {
        match self {
            ContainerFormat::Hdf5 => "h5",
            ContainerFormat::Flat => "evt",
        }
    }
}

/// File paths of one recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceLayout {
    pub events_path: PathBuf,
    pub frames_path: Option<PathBuf>,
    pub labels_path: PathBuf,
    pub frame_labels_path: Option<PathBuf>,
}

impl SequenceLayout {
    /// Standard file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self::in_dir_as(dir, ContainerFormat::Hdf5)
    }

    pub fn in_dir_as(dir: &Path, format: ContainerFormat) -> Self {
        let ext = format.extension();
        Self {
            events_path: dir.join(format!("events.{ext}")),
            frames_path: Some(dir.join(format!("frames.{ext}"))),
            labels_path: dir.join(LABELS_FILE),
            frame_labels_path: None,
        }
    }

    /// Finds the containers in `dir`, preferring HDF5 over `.evt`. Frames
    /// and frame labels are optional; events and labels are not.
    pub fn discover(dir: &Path) -> Result<Self, ContainerError> {
        let pick = |stem: &str| {
            [format!("{stem}.h5"), format!("{stem}.hdf5"), format!("{stem}.evt")]
                .into_iter()
                .map(|n| dir.join(n))
                .find(|p| p.is_file())
        };
        let missing = |p: PathBuf| {
            ContainerError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{} not found", p.display()),
            ))
        };
        let events_path = pick("events").ok_or_else(|| missing(dir.join(EVENTS_FILE)))?;
        let labels_path = dir.join(LABELS_FILE);
        if !labels_path.is_file() {
            return Err(missing(labels_path));
        }
        let frame_labels = dir.join(FRAME_LABELS_FILE);
        Ok(Self {
            events_path,
            frames_path: pick("frames"),
            labels_path,
            frame_labels_path: frame_labels.is_file().then_some(frame_labels),
        })
    }
}

fn is_evt(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("evt"))
}

/// Writes through a temporary sibling file that is renamed over `path`.
pub(crate) fn write_atomically<F>(path: &Path, write: F) -> Result<(), ContainerError>
where
    F: FnOnce(&Path) -> Result<(), ContainerError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::Builder::new()
        .prefix(".evpipe-")
        .tempfile_in(dir)?
        .into_temp_path();
    write(&tmp)?;
    tmp.persist(path).map_err(|e| ContainerError::Io(e.error))?;
    Ok(())
}

/// Converts `(t, x, y, p)` rows to events, checking order, bounds and polarity.
pub fn events_from_rows(
    rows: &[[i64; 4]],
    geometry: SensorGeometry,
) -> Result<EventStream, ContainerError> {
    let mut events = Vec::with_capacity(rows.len());
    for (index, &[t, x, y, p]) in rows.iter().enumerate() {
        if !(0..i64::from(geometry.width)).contains(&x) || !(0..i64::from(geometry.height)).contains(&y) {
            return Err(ContainerError::CoordinateOutOfBounds {
                index,
                x,
                y,
                width: geometry.width,
                height: geometry.height,
            });
        }
        let p = Polarity::from_raw(p).ok_or(ContainerError::BadPolarity { index, value: p })?;
        events.push(Event::new(t, x as u16, y as u16, p));
    }
    EventStream::new(geometry, events).map_err(|e| match e {
        StreamError::Unsorted { index, .. } => ContainerError::UnsortedTimestamps { index },
        StreamError::NegativeTimestamp { index, t } => ContainerError::NegativeTimestamp { index, t },
        StreamError::OutOfBounds { index, x, y, width, height } => {
            ContainerError::CoordinateOutOfBounds {
                index,
                x: i64::from(x),
                y: i64::from(y),
                width,
                height,
            }
        }
    })
}

pub fn event_rows(stream: &EventStream) -> Vec<[i64; 4]> {
    stream
        .events()
        .iter()
        .map(|e| [e.t, i64::from(e.x), i64::from(e.y), e.p.to_raw()])
        .collect()
}

/// Reads an event container. The sensor size comes from the file when it
/// records one, otherwise from `fallback`.
pub fn read_events_with(
    path: &Path,
    fallback: SensorGeometry,
) -> Result<EventStream, ContainerError> {
    if is_evt(path) {
        evt::read_events(path)
    } else {
        h5::read_events(path, fallback)
    }
}

/// Reads an event container, assuming a DAVIS346 sensor when the file does
/// not record its size.
pub fn read_events(path: &Path) -> Result<EventStream, ContainerError> {
    read_events_with(path, SensorGeometry::davis346())
}

pub fn write_events(stream: &EventStream, path: &Path) -> Result<(), ContainerError> {
    if is_evt(path) {
        write_atomically(path, |tmp| evt::write_events(stream, tmp))
    } else {
        write_atomically(path, |tmp| h5::write_events(stream, tmp))
    }
}

pub fn read_frames(path: &Path) -> Result<Vec<Frame>, ContainerError> {
    let frames = if is_evt(path) {
        evt::read_frames(path)?
    } else {
        h5::read_frames(path)?
    };
    check_frame_order(&frames)?;
    Ok(frames)
}

pub fn write_frames(frames: &[Frame], path: &Path) -> Result<(), ContainerError> {
    if let Some(first) = frames.first() {
        if let Some(index) = frames
            .iter()
            .position(|f| f.width != first.width || f.height != first.height)
        {
            return Err(ContainerError::BadShape {
                name: format!("frame {index}"),
                shape: vec![frames[index].height as usize, frames[index].width as usize],
                expected: format!("{}x{}", first.height, first.width),
            });
        }
    }
    if is_evt(path) {
        write_atomically(path, |tmp| evt::write_frames(frames, tmp))
    } else {
        write_atomically(path, |tmp| h5::write_frames(frames, tmp))
    }
}

fn check_frame_order(frames: &[Frame]) -> Result<(), ContainerError> {
    match frames.windows(2).position(|w| w[1].t <= w[0].t) {
        Some(i) => Err(ContainerError::UnsortedTimestamps { index: i + 1 }),
        None => Ok(()),
    }
}

/// `(t, class_id, bx, by, w, h)` rows.
pub fn label_rows(anns: &[Annotation]) -> Vec<f64> {
    anns.iter()
        .flat_map(|a| {
            [
                a.t as f64,
                f64::from(a.class.id()),
                a.bbox.x,
                a.bbox.y,
                a.bbox.w,
                a.bbox.h,
            ]
        })
        .collect()
}

pub fn annotations_from_rows(values: &[f64], shape: &[usize]) -> Result<Vec<Annotation>, ContainerError> {
    let rows = match *shape {
        [rows, 6] => rows,
        [_, cols] => return Err(ContainerError::WrongColumnCount { found: cols }),
        // An empty 1-d array is what numpy saves for `np.array([])`.
        [0] => 0,
        _ => {
            return Err(ContainerError::BadShape {
                name: "labels".into(),
                shape: shape.to_vec(),
                expected: "K x 6".into(),
            })
        }
    };
    (0..rows)
        .map(|row| {
            let r = &values[row * 6..row * 6 + 6];
            let class = (r[1].fract() == 0.0)
                .then(|| DefectClass::from_id(r[1] as i64))
                .flatten()
                .ok_or(ContainerError::UnknownClassId { row, value: r[1] })?;
            Ok(Annotation::new(
                r[0] as Micros,
                class,
                BBox::new(r[2], r[3], r[4], r[5]),
            ))
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<Annotation>, ContainerError> {
    let array = npy::from_bytes(&fs::read(path)?)?;
    let shape = array.shape.clone();
    let values = array
        .into_f64()
        .ok_or_else(|| ContainerError::BadHeader("labels must be numeric".into()))?;
    annotations_from_rows(&values, &shape)
}

pub fn write_labels(anns: &[Annotation], path: &Path) -> Result<(), ContainerError> {
    let array = npy::Array::f64(vec![anns.len(), 6], label_rows(anns));
    write_atomically(path, |tmp| {
        let file = fs::File::create(tmp)?;
        let mut w = std::io::BufWriter::new(file);
        npy::write(&mut w, &array)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    })
}

pub fn read_sequence(dir: &Path) -> Result<SequenceRecording, ContainerError> {
    let layout = SequenceLayout::discover(dir)?;
    read_sequence_layout(&layout)
}

pub fn read_sequence_layout(layout: &SequenceLayout) -> Result<SequenceRecording, ContainerError> {
    let events = read_events(&layout.events_path)?;
    let geometry = events.geometry();
    let frames = match &layout.frames_path {
        Some(p) => read_frames(p)?,
        None => Vec::new(),
    };
    let annotations = read_labels(&layout.labels_path)?;
    let frame_annotations = layout
        .frame_labels_path
        .as_deref()
        .map(read_labels)
        .transpose()?;
    Ok(SequenceRecording {
        geometry,
        events,
        frames,
        annotations,
        frame_annotations,
    })
}

/// Writes the standard HDF5/NPY layout into `dir`, creating it if needed.
pub fn write_sequence(seq: &SequenceRecording, dir: &Path) -> Result<SequenceLayout, ContainerError> {
    write_sequence_as(seq, dir, ContainerFormat::Hdf5)
}

pub fn write_sequence_as(
    seq: &SequenceRecording,
    dir: &Path,
    format: ContainerFormat,
) -> Result<SequenceLayout, ContainerError> {
    fs::create_dir_all(dir)?;
    let mut layout = SequenceLayout::in_dir_as(dir, format);
    write_events(&seq.events, &layout.events_path)?;
    write_frames(&seq.frames, layout.frames_path.as_deref().unwrap())?;
    write_labels(&seq.annotations, &layout.labels_path)?;
    if let Some(frame_anns) = &seq.frame_annotations {
        let p = dir.join(FRAME_LABELS_FILE);
        write_labels(frame_anns, &p)?;
        layout.frame_labels_path = Some(p);
    }
    Ok(layout)
}
