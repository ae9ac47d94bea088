//! Temporal association of frames, events and labels, and extraction of
//! benchmark samples from a recording.
//!
//! All intervals are closed on both ends.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{
    build_histogram, clip_and_normalize, encode, Anchor, EncodeError, EncoderConfig, EncoderMode,
    EventVolume, GridLayout, GridSummary, NormalizedHistogram,
};
use crate::frame_prep::{ImageF32, PrepConfig};
use crate::model::{Annotation, Event, EventStream, Frame, Micros, SequenceRecording, TimeWindow};

pub const DEFAULT_HALF_WINDOW_US: Micros = 10_000;

/// Events with `t` in `[t_min, t_max]`.
pub fn events_in_window(stream: &EventStream, window: TimeWindow) -> &[Event] {
    &stream.events()[stream.index_range(window)]
}

/// Events within `half_window_us` of a frame timestamp.
pub fn events_for_frame(stream: &EventStream, frame_t: Micros, half_window_us: Micros) -> &[Event] {
    events_in_window(stream, TimeWindow::around(frame_t, half_window_us))
}

/// Annotations with `t` in the window, in input order.
pub fn annotations_for_window(anns: &[Annotation], window: TimeWindow) -> Vec<Annotation> {
    if anns.windows(2).all(|w| w[0].t <= w[1].t) {
        let start = anns.partition_point(|a| a.t < window.t_min);
        let end = anns.partition_point(|a| a.t <= window.t_max).max(start);
        anns[start..end].to_vec()
    } else {
        anns.iter().filter(|a| window.contains(a.t)).copied().collect()
    }
}

pub fn annotations_for_frame(
    anns: &[Annotation],
    frame_t: Micros,
    half_window_us: Micros,
) -> Vec<Annotation> {
    annotations_for_window(anns, TimeWindow::around(frame_t, half_window_us))
}

/// The frame closest to `t`, if one lies within `half_window_us`. Ties go to
/// the earlier frame.
pub fn nearest_frame(frames: &[Frame], t: Micros, half_window_us: Micros) -> Option<&Frame> {
    let i = frames.partition_point(|f| f.t < t);
    let before = i.checked_sub(1).map(|j| &frames[j]);
    let after = frames.get(i);
    let best = match (before, after) {
        (Some(b), Some(a)) => {
            if t - b.t <= a.t - t {
                b
            } else {
                a
            }
        }
        (Some(f), None) | (None, Some(f)) => f,
        (None, None) => return None,
    };
    ((best.t - t).abs() <= half_window_us).then_some(best)
}

/// One benchmark sample: histogram, optional preprocessed frame and the
/// labels whose timestamps fall in the histogram's window.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBundle {
    pub sequence_id: String,
    pub image_id: u64,
    pub frame: Option<ImageF32>,
    pub frame_t: Option<Micros>,
    pub histogram: NormalizedHistogram,
    pub annotations: Vec<Annotation>,
    pub window: TimeWindow,
    pub encoder: EncoderConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleCount {
    pub min: usize,
    pub max: usize,
}

impl Default for SampleCount {
    fn default() -> Self {
        Self { min: 10, max: 15 }
    }
}

/// Anchors closer than `EDGE_PACKETS * q` events to either end of the
/// stream are not drawn.
pub const EDGE_PACKETS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub bundles: Vec<SampleBundle>,
    /// Number of samples drawn for the target.
    pub target: usize,
    /// Anchors whose selection never met its thresholds.
    pub failed_anchors: Vec<usize>,
}

impl Extraction {
    pub fn shortfall(&self) -> usize {
        self.target.saturating_sub(self.bundles.len())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractError {
    #[error("sequence has no events")]
    EmptyStream,
    #[error("no anchor satisfied the encoder ({attempts} tried)")]
    EncoderNeverSatisfiable { attempts: usize },
    #[error("invalid sample count range {min}..={max}")]
    BadCount { min: usize, max: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("{0}")]
    Prep(String),
}

/// Draws between `count.min` and `count.max` samples from a recording.
///
/// Anchor events are drawn uniformly without replacement from the stream
/// minus its edges. Anchors whose selection never satisfies the encoder are
/// skipped and replaced, up to four candidates per requested sample. A frame
/// is attached when one lies within the encoder's half window of the anchor.
pub fn extract_samples(
    seq: &SequenceRecording,
    sequence_id: &str,
    count: SampleCount,
    encoder: &EncoderConfig,
    prep: &PrepConfig,
    seed: u64,
) -> Result<Extraction, ExtractError> {
    if count.min == 0 || count.min > count.max {
        return Err(ExtractError::BadCount {
            min: count.min,
            max: count.max,
        });
    }
    encoder
        .validate(seq.geometry)
        .map_err(|e| EncodeError::InvalidConfig(e.0))?;
    prep.validate().map_err(|e| ExtractError::Prep(e.to_string()))?;
    let stream = &seq.events;
    let n = stream.len();
    if n == 0 {
        return Err(ExtractError::EmptyStream);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.gen_range(count.min..=count.max);
    let margin = encoder.q.saturating_mul(EDGE_PACKETS);
    let (lo, hi) = if n > 2 * margin { (margin, n - margin) } else { (0, n) };
    let candidates = hi - lo;
    let draws = candidates.min(target * 4);
    let order = sample(&mut rng, candidates, draws);

    let half_window = encoder.half_window_us();
    let mut picked: Vec<(usize, NormalizedHistogram)> = Vec::with_capacity(target);
    let mut failed_anchors = Vec::new();
    for offset in order.iter() {
        if picked.len() == target {
            break;
        }
        let anchor = lo + offset;
        match encode(stream, Anchor::Index(anchor), encoder) {
            Ok(h) => picked.push((anchor, h)),
            Err(EncodeError::NeverSatisfied { .. } | EncodeError::EmptyWindow { .. }) => {
                failed_anchors.push(anchor)
            }
            Err(e) => return Err(e.into()),
        }
    }
    if picked.is_empty() {
        return Err(ExtractError::EncoderNeverSatisfiable {
            attempts: failed_anchors.len(),
        });
    }
    picked.sort_by_key(|(anchor, _)| *anchor);

    let bundles = picked
        .into_iter()
        .enumerate()
        .map(|(i, (anchor, histogram))| {
            let anchor_t = stream.events()[anchor].t;
            let frame = nearest_frame(&seq.frames, anchor_t, half_window);
            let window = histogram.window;
            SampleBundle {
                sequence_id: sequence_id.to_string(),
                image_id: i as u64,
                frame: frame.map(|f| prep.prepare_frame(f)),
                frame_t: frame.map(|f| f.t),
                annotations: annotations_for_window(&seq.annotations, window),
                window,
                encoder: encoder.resolved(),
                histogram,
            }
        })
        .collect();
    Ok(Extraction {
        bundles,
        target,
        failed_anchors,
    })
}

/// Re-derives a bundle's invariants from the source stream. Returns one
/// message per failed check.
pub fn verify_bundle(bundle: &SampleBundle, stream: &EventStream) -> Vec<String> {
    let mut problems = Vec::new();
    let h = &bundle.histogram;
    if h.window != bundle.window {
        problems.push(format!(
            "histogram window {:?} differs from bundle window {:?}",
            h.window, bundle.window
        ));
    }
    for (i, a) in bundle.annotations.iter().enumerate() {
        if !bundle.window.contains(a.t) {
            problems.push(format!("annotation {i} at t={} lies outside the window", a.t));
        }
    }
    if h.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        problems.push("histogram values leave [0, 1]".into());
    }
    if !h.is_all_zero() && h.max_value() != 1.0 {
        problems.push(format!("histogram maximum is {}, not 1", h.max_value()));
    }

    let Some(prov) = &h.provenance else {
        problems.push("histogram carries no provenance".into());
        return problems;
    };
    let Some(volume) = EventVolume::from_range(stream, prov.start..prov.end, prov.anchor) else {
        problems.push(format!(
            "event range {}..{} is not inside the stream",
            prov.start, prov.end
        ));
        return problems;
    };
    if volume.window != bundle.window {
        problems.push(format!(
            "events {}..{} span {:?}, bundle says {:?}",
            prov.start, prov.end, volume.window, bundle.window
        ));
    }
    let raw = build_histogram(&volume, stream.geometry());
    let pos = volume.events.iter().filter(|e| e.p == crate::model::Polarity::Positive).count() as u64;
    let neg = volume.len() as u64 - pos;
    if raw.total_pos() != pos || raw.total_neg() != neg {
        problems.push("histogram channel sums differ from event counts".into());
    }
    if (prov.positive_events, prov.negative_events) != (pos, neg) {
        problems.push(format!(
            "recorded counts ({}, {}) differ from recount ({pos}, {neg})",
            prov.positive_events, prov.negative_events
        ));
    }
    let redone = clip_and_normalize(&raw, prov.config.per_channel_max);
    if redone.values != h.values {
        problems.push("histogram values differ from a fresh encoding".into());
    }
    if prov.config.mode == EncoderMode::Adaptive {
        let cfg = &prov.config;
        if volume.duration() <= cfg.t_th_us() {
            problems.push(format!(
                "duration {} us does not exceed T_th {} us",
                volume.duration(),
                cfg.t_th_us()
            ));
        }
        match GridLayout::new(stream.geometry(), cfg.grid_m, cfg.grid_n) {
            Some(layout) => {
                let summary = GridSummary::from_events(&layout, volume.events);
                if summary.max_excess <= cfg.a_th {
                    problems.push(format!(
                        "max cell excess {} does not exceed A_th {}",
                        summary.max_excess, cfg.a_th
                    ));
                }
            }
            None => problems.push("grid does not fit the sensor".into()),
        }
    }
    problems
}
