//! Sample bundles as NPZ archives.
//!
//! | entry    | dtype | shape     |
//! |----------|-------|-----------|
//! | `hist`   | `<f4` | (2, H, W) |
//! | `frame`  | `<f4` | (H, W), optional |
//! | `labels` | `<f8` | (K, 6)    |
//! | `meta`   | `<U`  | ()        |
//!
//! `meta` is a JSON document holding ids, window, geometry, encoder
//! settings, clip statistics and provenance.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use super::{annotations_from_rows, label_rows, npy, write_atomically, ContainerError};
use crate::association::SampleBundle;
use crate::encoding::{ClipStats, EncoderConfig, NormalizedHistogram, Provenance};
use crate::frame_prep::ImageF32;
use crate::model::{Micros, SensorGeometry, TimeWindow};

pub const BUNDLE_FORMAT: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    format: u32,
    sequence_id: String,
    image_id: u64,
    window: TimeWindow,
    geometry: SensorGeometry,
    frame_t: Option<Micros>,
    encoder: EncoderConfig,
    clip: ClipStats,
    provenance: Option<Provenance>,
}

pub fn write_sample_bundle(bundle: &SampleBundle, path: &Path) -> Result<(), ContainerError> {
    let g = bundle.histogram.geometry;
    let (h, w) = (g.height as usize, g.width as usize);
    let meta = Meta {
        format: BUNDLE_FORMAT,
        sequence_id: bundle.sequence_id.clone(),
        image_id: bundle.image_id,
        window: bundle.window,
        geometry: g,
        frame_t: bundle.frame_t,
        encoder: bundle.encoder.clone(),
        clip: bundle.histogram.stats,
        provenance: bundle.histogram.provenance.clone(),
    };
    let meta = serde_json::to_string(&meta).map_err(|e| ContainerError::BadMetadata(e.to_string()))?;

    let mut entries = vec![(
        "hist",
        npy::Array::f32(vec![2, h, w], bundle.histogram.values.clone()),
    )];
    if let Some(frame) = &bundle.frame {
        entries.push((
            "frame",
            npy::Array::f32(
                vec![frame.height as usize, frame.width as usize],
                frame.data.clone(),
            ),
        ));
    }
    entries.push((
        "labels",
        npy::Array::f64(vec![bundle.annotations.len(), 6], label_rows(&bundle.annotations)),
    ));
    entries.push(("meta", npy::Array::string(&meta)));

    write_atomically(path, |tmp| {
        let mut zip = ZipWriter::new(BufWriter::new(fs::File::create(tmp)?));
        let opts = SimpleFileOptions::default().compression_method(CompressionMethod::Deflated);
        for (name, array) in &entries {
            zip.start_file(format!("{name}.npy"), opts)?;
            npy::write(&mut zip, array)?;
        }
        zip.finish()?.flush()?;
        Ok(())
    })
}

fn entry(
    archive: &mut ZipArchive<fs::File>,
    name: &str,
) -> Result<Option<npy::Array>, ContainerError> {
    let key = [format!("{name}.npy"), name.to_string()]
        .into_iter()
        .find(|k| archive.index_for_name(k).is_some());
    let Some(key) = key else { return Ok(None) };
    let mut bytes = Vec::new();
    archive.by_name(&key)?.read_to_end(&mut bytes)?;
    npy::from_bytes(&bytes).map(Some)
}

fn required(archive: &mut ZipArchive<fs::File>, name: &str) -> Result<npy::Array, ContainerError> {
    entry(archive, name)?.ok_or_else(|| ContainerError::MissingRequiredArray(name.to_string()))
}

fn bad_shape(name: &str, shape: &[usize], expected: String) -> ContainerError {
    ContainerError::BadShape {
        name: name.into(),
        shape: shape.to_vec(),
        expected,
    }
}

pub fn read_sample_bundle(path: &Path) -> Result<SampleBundle, ContainerError> {
    let mut archive = ZipArchive::new(fs::File::open(path)?)?;
    let hist = required(&mut archive, "hist")?;
    let labels = required(&mut archive, "labels")?;
    let meta = required(&mut archive, "meta")?;
    let frame = entry(&mut archive, "frame")?;

    let meta = meta
        .into_string()
        .ok_or_else(|| ContainerError::BadMetadata("meta is not a string".into()))?;
    let meta: Meta =
        serde_json::from_str(&meta).map_err(|e| ContainerError::BadMetadata(e.to_string()))?;
    if meta.format != BUNDLE_FORMAT {
        return Err(ContainerError::BadMetadata(format!(
            "unsupported bundle format {}",
            meta.format
        )));
    }
    let g = meta.geometry;
    let expected = vec![2, g.height as usize, g.width as usize];
    if hist.shape != expected {
        return Err(bad_shape("hist", &hist.shape, format!("{expected:?}")));
    }
    let values = hist
        .into_f32()
        .ok_or_else(|| ContainerError::BadHeader("hist must be floating point".into()))?;

    let frame = match frame {
        None => None,
        Some(a) => {
            let [h, w] = a.shape[..] else {
                return Err(bad_shape("frame", &a.shape, "H x W".into()));
            };
            let data = a
                .into_f32()
                .ok_or_else(|| ContainerError::BadHeader("frame must be floating point".into()))?;
            ImageF32::new(w as u32, h as u32, data)
        }
    };

    let label_shape = labels.shape.clone();
    let label_values = labels
        .into_f64()
        .ok_or_else(|| ContainerError::BadHeader("labels must be numeric".into()))?;
    let annotations = annotations_from_rows(&label_values, &label_shape)?;

    Ok(SampleBundle {
        sequence_id: meta.sequence_id,
        image_id: meta.image_id,
        frame,
        frame_t: meta.frame_t,
        histogram: NormalizedHistogram {
            geometry: g,
            window: meta.window,
            values,
            stats: meta.clip,
            provenance: meta.provenance,
        },
        annotations,
        window: meta.window,
        encoder: meta.encoder,
    })
}
