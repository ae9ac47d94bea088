//! Two-channel event-histogram encoding.
//!
//! An encoder picks an [`EventVolume`] out of a stream (fixed time, fixed
//! count, grid threshold or adaptive growth), counts it into a
//! [`Histogram2C`] and clips/normalizes that into a [`NormalizedHistogram`].

mod config;
mod grid;
mod histogram;
mod select;

pub use config::{ConfigError, EncoderConfig, EncoderMode, Lighting};
pub use grid::{GridLayout, GridSummary};
pub use histogram::{
    build_histogram, clip_and_normalize, ClipStats, Histogram2C, NormalizedHistogram, Provenance,
};
pub use select::{
    select_adaptive, select_fixed_count, select_fixed_time, select_grid_threshold, AdaptiveGrowth,
    AdaptiveStep, EventVolume,
};

use crate::model::{EventStream, Micros, Polarity, TimeWindow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodeError {
    #[error("no events in window [{}, {}]", window.t_min, window.t_max)]
    EmptyWindow { window: TimeWindow },
    #[error("selection around event {anchor} never met its thresholds ({steps} steps)")]
    NeverSatisfied { anchor: usize, steps: usize },
    #[error("anchor {anchor} is outside a stream of {len} events")]
    AnchorOutOfRange { anchor: usize, len: usize },
    #[error("grid {rows}x{cols} does not fit the sensor")]
    InvalidGrid { rows: u32, cols: u32 },
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
}

/// Where to centre a selection: an event index or a timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Index(usize),
    Time(Micros),
}

impl Anchor {
    fn index(self, stream: &EventStream) -> usize {
        match self {
            Anchor::Index(i) => i,
            Anchor::Time(t) => stream
                .events()
                .partition_point(|e| e.t < t)
                .min(stream.len().saturating_sub(1)),
        }
    }

    fn time(self, stream: &EventStream) -> Result<Micros, EncodeError> {
        match self {
            Anchor::Time(t) => Ok(t),
            Anchor::Index(i) => stream
                .events()
                .get(i)
                .map(|e| e.t)
                .ok_or(EncodeError::AnchorOutOfRange {
                    anchor: i,
                    len: stream.len(),
                }),
        }
    }
}

/// Runs the selector named by `cfg.mode`.
pub fn select<'a>(
    stream: &'a EventStream,
    anchor: Anchor,
    cfg: &EncoderConfig,
) -> Result<EventVolume<'a>, EncodeError> {
    cfg.validate(stream.geometry())
        .map_err(|e| EncodeError::InvalidConfig(e.0))?;
    if stream.is_empty() {
        return match anchor {
            Anchor::Time(t) => Err(EncodeError::EmptyWindow {
                window: TimeWindow::around(t, cfg.t_th_us() / 2),
            }),
            Anchor::Index(i) => Err(EncodeError::AnchorOutOfRange { anchor: i, len: 0 }),
        };
    }
    match cfg.mode {
        EncoderMode::FixedTime => select_fixed_time(stream, anchor.time(stream)?, cfg.t_th_us()),
        EncoderMode::FixedCount => select_fixed_count(stream, anchor.index(stream), cfg.count_n),
        EncoderMode::GridThreshold => select_grid_threshold(
            stream,
            anchor.index(stream),
            cfg.grid_m,
            cfg.grid_n,
            cfg.cell_threshold,
        ),
        EncoderMode::Adaptive => select_adaptive(stream, anchor.index(stream), cfg),
    }
}

/// Selects a volume, counts it and clips/normalizes the result.
pub fn encode(
    stream: &EventStream,
    anchor: Anchor,
    cfg: &EncoderConfig,
) -> Result<NormalizedHistogram, EncodeError> {
    let volume = select(stream, anchor, cfg)?;
    let hist = build_histogram(&volume, stream.geometry());
    let mut out = clip_and_normalize(&hist, cfg.per_channel_max);
    let positive = volume.events.iter().filter(|e| e.p == Polarity::Positive).count() as u64;
    out.provenance = Some(Provenance {
        start: volume.range.start,
        end: volume.range.end,
        anchor: volume.anchor,
        positive_events: positive,
        negative_events: volume.len() as u64 - positive,
        config: cfg.resolved(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Event, Polarity, SensorGeometry};

    fn dense_stream() -> EventStream {
        // 20k events over 200 ms, concentrated on a moving column
        let events = (0..20_000u32)
            .map(|i| {
                let t = i64::from(i) * 10;
                let x = ((i / 100) % 346) as u16;
                let y = (i % 260) as u16;
                let p = if i % 3 == 0 { Polarity::Negative } else { Polarity::Positive };
                Event::new(t, x, y, p)
            })
            .collect();
        EventStream::new(SensorGeometry::davis346(), events).unwrap()
    }

    #[test]
    fn adaptive_encode_meets_invariants() {
        let s = dense_stream();
        let cfg = EncoderConfig::default();
        let h = encode(&s, Anchor::Index(10_000), &cfg).unwrap();
        assert_eq!(h.max_value(), 1.0);
        assert!(h.values.iter().all(|v| (0.0..=1.0).contains(v)));
        let prov = h.provenance.as_ref().unwrap();
        let vol = &s.events()[prov.start..prov.end];
        assert_eq!(h.window.t_min, vol[0].t);
        assert_eq!(h.window.t_max, vol[vol.len() - 1].t);
        assert!(h.window.duration() > 15_000);
        let pos = vol.iter().filter(|e| e.p == Polarity::Positive).count() as u64;
        assert_eq!(prov.positive_events, pos);
        assert_eq!(prov.negative_events, vol.len() as u64 - pos);
    }

    #[test]
    fn fixed_time_empty_window() {
        let s = dense_stream();
        let cfg = EncoderConfig::default().with_mode(EncoderMode::FixedTime);
        assert!(matches!(
            encode(&s, Anchor::Time(10_000_000), &cfg),
            Err(EncodeError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn encode_is_deterministic() {
        let s = dense_stream();
        for mode in [
            EncoderMode::FixedTime,
            EncoderMode::FixedCount,
            EncoderMode::GridThreshold,
            EncoderMode::Adaptive,
        ] {
            let cfg = EncoderConfig::default().with_mode(mode);
            let a = encode(&s, Anchor::Index(5000), &cfg).unwrap();
            let b = encode(&s, Anchor::Index(5000), &cfg).unwrap();
            assert_eq!(a, b, "{mode:?}");
        }
    }
}
