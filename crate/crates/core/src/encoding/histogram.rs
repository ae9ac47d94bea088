use serde::{Deserialize, Serialize};

use super::config::EncoderConfig;
use super::select::EventVolume;
use crate::model::{Event, Polarity, SensorGeometry, TimeWindow};

/// Per-pixel event counts, one grid per polarity, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram2C {
    pub geometry: SensorGeometry,
    pub window: TimeWindow,
    pub counts_pos: Vec<u32>,
    pub counts_neg: Vec<u32>,
}

impl Histogram2C {
    pub fn zeros(geometry: SensorGeometry, window: TimeWindow) -> Self {
        let n = geometry.pixel_count();
        Self {
            geometry,
            window,
            counts_pos: vec![0; n],
            counts_neg: vec![0; n],
        }
    }

    /// Accumulates `events` into a fresh histogram.
    ///
    /// Panics if an event lies outside `geometry`.
    pub fn from_events(geometry: SensorGeometry, window: TimeWindow, events: &[Event]) -> Self {
        let mut h = Self::zeros(geometry, window);
        h.accumulate(events);
        h
    }

    pub fn accumulate(&mut self, events: &[Event]) {
        let w = self.geometry.width as usize;
        let hgt = self.geometry.height as usize;
        for e in events {
            let (x, y) = (e.x as usize, e.y as usize);
            assert!(x < w && y < hgt, "event ({x}, {y}) outside {w}x{hgt} sensor");
            let idx = y * w + x;
            match e.p {
                Polarity::Positive => self.counts_pos[idx] += 1,
                Polarity::Negative => self.counts_neg[idx] += 1,
            }
        }
    }

    pub fn get(&self, p: Polarity, x: u32, y: u32) -> u32 {
        let idx = y as usize * self.geometry.width as usize + x as usize;
        match p {
            Polarity::Positive => self.counts_pos[idx],
            Polarity::Negative => self.counts_neg[idx],
        }
    }

    pub fn total_pos(&self) -> u64 {
        self.counts_pos.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn total_neg(&self) -> u64 {
        self.counts_neg.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Counts positive and negative events of a volume per pixel.
pub fn build_histogram(volume: &EventVolume<'_>, geometry: SensorGeometry) -> Histogram2C {
    Histogram2C::from_events(geometry, volume.window, volume.events)
}

/// Statistics of the outlier clip applied before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipStats {
    pub mean: f64,
    /// Population standard deviation over all bins of both channels.
    pub sigma: f64,
    /// `3 * sigma`; `None` when `sigma == 0` and clipping was skipped.
    pub ceiling: Option<f64>,
    /// Largest value after clipping, the normalization divisor.
    pub max_clipped: f64,
}

/// Where an encoded histogram came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub start: usize,
    pub end: usize,
    pub anchor: Option<usize>,
    pub positive_events: u64,
    pub negative_events: u64,
    pub config: EncoderConfig,
}

/// Clipped, max-normalized two-channel histogram with values in `[0, 1]`.
///
/// `values` holds the positive channel followed by the negative channel,
/// each `height x width` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedHistogram {
    pub geometry: SensorGeometry,
    pub window: TimeWindow,
    pub values: Vec<f32>,
    pub stats: ClipStats,
    pub provenance: Option<Provenance>,
}

impl NormalizedHistogram {
    pub fn channel(&self, p: Polarity) -> &[f32] {
        let n = self.geometry.pixel_count();
        match p {
            Polarity::Positive => &self.values[..n],
            Polarity::Negative => &self.values[n..],
        }
    }

    pub fn max_value(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

struct ChannelSums {
    sum: u128,
    sum_sq: u128,
    max: u32,
}

impl ChannelSums {
    fn of(bins: &[u32]) -> Self {
        let (mut sum, mut sum_sq, mut max) = (0u64, 0u64, 0u32);
        for &v in bins {
            sum += u64::from(v);
            sum_sq = sum_sq.wrapping_add(u64::from(v) * u64::from(v));
            max = max.max(v);
        }
        // sum(c^2) <= sum(c)^2, so the u64 lane only wraps past 2^32 events.
        let sum_sq = if sum >> 32 == 0 {
            u128::from(sum_sq)
        } else {
            bins.iter().map(|&v| u128::from(v) * u128::from(v)).sum()
        };
        Self {
            sum: u128::from(sum),
            sum_sq,
            max,
        }
    }
}

/// Clips every bin to `3 * sigma`, then divides by the largest clipped value.
///
/// `sigma` is the population standard deviation over both channels jointly.
/// When `sigma == 0` the histogram is uniform and is left unclipped. With
/// `per_channel_max` each channel is divided by its own maximum instead.
pub fn clip_and_normalize(h: &Histogram2C, per_channel_max: bool) -> NormalizedHistogram {
    let pos = ChannelSums::of(&h.counts_pos);
    let neg = ChannelSums::of(&h.counts_neg);
    let n = (h.counts_pos.len() + h.counts_neg.len()) as u128;
    let (sum, sum_sq) = (pos.sum + neg.sum, pos.sum_sq + neg.sum_sq);
    let mean = sum as f64 / n as f64;
    // Exact integer moments: n^2 var = n * sum(c^2) - sum(c)^2.
    let var = (n * sum_sq - sum * sum) as f64 / (n * n) as f64;
    let sigma = var.sqrt();
    let ceiling = (sigma > 0.0).then_some(3.0 * sigma);
    // Clipping is monotone, so each channel's clipped maximum is its clipped raw maximum.
    let clip = |v: u32| match ceiling {
        Some(c) => f64::from(v).min(c),
        None => f64::from(v),
    };
    let max_pos = clip(pos.max);
    let max_neg = clip(neg.max);
    let max_clipped = max_pos.max(max_neg);

    let scale = |bins: &[u32], divisor: f64, out: &mut Vec<f32>| {
        if divisor > 0.0 {
            let c = ceiling.unwrap_or(f64::INFINITY);
            out.extend(bins.iter().map(|&v| (f64::from(v).min(c) / divisor) as f32));
        } else {
            out.extend(std::iter::repeat(0.0).take(bins.len()));
        }
    };
    let mut values = Vec::with_capacity(n as usize);
    if per_channel_max {
        scale(&h.counts_pos, max_pos, &mut values);
        scale(&h.counts_neg, max_neg, &mut values);
    } else {
        scale(&h.counts_pos, max_clipped, &mut values);
        scale(&h.counts_neg, max_clipped, &mut values);
    }

    NormalizedHistogram {
        geometry: h.geometry,
        window: h.window,
        values,
        stats: ClipStats {
            mean,
            sigma,
            ceiling,
            max_clipped,
        },
        provenance: None,
    }
}
