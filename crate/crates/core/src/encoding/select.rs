//! Event-volume selection.
//!
//! All selectors return contiguous index ranges into the source stream.

use std::ops::Range;

use super::config::EncoderConfig;
use super::grid::{max_excess, GridLayout};
use super::EncodeError;
use crate::model::{Event, EventStream, Micros, TimeWindow};

/// A nonempty contiguous run of events from a stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventVolume<'a> {
    pub events: &'a [Event],
    /// Position of `events` inside the source stream.
    pub range: Range<usize>,
    /// Timestamps of the first and last event.
    pub window: TimeWindow,
    pub anchor: Option<usize>,
}

impl<'a> EventVolume<'a> {
    /// `None` when `range` is empty or out of bounds.
    pub fn from_range(
        stream: &'a EventStream,
        range: Range<usize>,
        anchor: Option<usize>,
    ) -> Option<Self> {
        let events = stream.events().get(range.clone())?;
        let (first, last) = (events.first()?, events.last()?);
        Some(Self {
            events,
            range,
            window: TimeWindow {
                t_min: first.t,
                t_max: last.t,
            },
            anchor,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration(&self) -> Micros {
        self.window.duration()
    }
}

/// Events in `[center - T/2, center + T/2]`, both ends inclusive.
pub fn select_fixed_time(
    stream: &EventStream,
    center: Micros,
    length_us: Micros,
) -> Result<EventVolume<'_>, EncodeError> {
    let window = TimeWindow::around(center, length_us / 2);
    let range = stream.index_range(window);
    EventVolume::from_range(stream, range, None).ok_or(EncodeError::EmptyWindow { window })
}

/// `count` events centred on `anchor`: `floor(count / 2)` before it, the rest
/// from it onwards, shifted inward at the stream edges.
pub fn select_fixed_count(
    stream: &EventStream,
    anchor: usize,
    count: usize,
) -> Result<EventVolume<'_>, EncodeError> {
    let len = stream.len();
    check_anchor(anchor, len)?;
    let take = count.min(len).max(1);
    let mut start = anchor.saturating_sub(take / 2);
    if start + take > len {
        start = len - take;
    }
    Ok(EventVolume::from_range(stream, start..start + take, Some(anchor))
        .expect("range is nonempty and in bounds"))
}

/// Shortest run starting at `start` in which some grid cell holds more than
/// `cell_threshold` events.
pub fn select_grid_threshold(
    stream: &EventStream,
    start: usize,
    rows: u32,
    cols: u32,
    cell_threshold: u64,
) -> Result<EventVolume<'_>, EncodeError> {
    let len = stream.len();
    check_anchor(start, len)?;
    let layout = GridLayout::new(stream.geometry(), rows, cols)
        .ok_or_else(|| EncodeError::InvalidGrid { rows, cols })?;
    let mut cells = vec![0u64; layout.cell_count()];
    for (i, e) in stream.events()[start..].iter().enumerate() {
        let c = layout.cell_of(e.x, e.y);
        cells[c] += 1;
        if cells[c] > cell_threshold {
            let end = start + i + 1;
            return Ok(EventVolume::from_range(stream, start..end, Some(start))
                .expect("range is nonempty and in bounds"));
        }
    }
    Err(EncodeError::NeverSatisfied {
        anchor: start,
        steps: len - start,
    })
}

/// One iteration of adaptive growth.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveStep {
    pub count: usize,
    pub range: Range<usize>,
    /// `t[last] - t[first]` of the events in `range`.
    pub duration_us: Micros,
    pub max_excess: f64,
    pub satisfied: bool,
}

/// Iterator over the growth steps of the adaptive selector.
///
/// Step `count` covers `[anchor - q*count, anchor + q*count)` clamped to the
/// stream. Cell counts are updated incrementally as the range widens. The
/// iterator stops after the first satisfied step, or after the step that
/// covers the whole stream.
#[derive(Debug, Clone)]
pub struct AdaptiveGrowth<'a> {
    events: &'a [Event],
    layout: GridLayout,
    cells: Vec<u64>,
    covered: Range<usize>,
    anchor: usize,
    q: usize,
    count: usize,
    t_th: Micros,
    a_th: f64,
    done: bool,
}

impl<'a> AdaptiveGrowth<'a> {
    pub fn new(
        stream: &'a EventStream,
        anchor: usize,
        cfg: &EncoderConfig,
    ) -> Result<Self, EncodeError> {
        check_anchor(anchor, stream.len())?;
        cfg.validate(stream.geometry())
            .map_err(|e| EncodeError::InvalidConfig(e.0))?;
        let layout = GridLayout::new(stream.geometry(), cfg.grid_m, cfg.grid_n).ok_or(
            EncodeError::InvalidGrid {
                rows: cfg.grid_m,
                cols: cfg.grid_n,
            },
        )?;
        Ok(Self {
            events: stream.events(),
            cells: vec![0; layout.cell_count()],
            layout,
            covered: anchor..anchor,
            anchor,
            q: cfg.q,
            count: 0,
            t_th: cfg.t_th_us(),
            a_th: cfg.a_th,
            done: false,
        })
    }

    fn add(&mut self, range: Range<usize>) {
        for e in &self.events[range] {
            self.cells[self.layout.cell_of(e.x, e.y)] += 1;
        }
    }
}

impl Iterator for AdaptiveGrowth<'_> {
    type Item = AdaptiveStep;

    fn next(&mut self) -> Option<AdaptiveStep> {
        if self.done {
            return None;
        }
        self.count += 1;
        let reach = self.q.saturating_mul(self.count);
        let sid = self.anchor.saturating_sub(reach);
        let eid = self.anchor.saturating_add(reach).min(self.events.len());
        let Range { start, end } = self.covered.clone();
        self.add(sid..start);
        self.add(end..eid);
        self.covered = sid..eid;

        let duration_us = self.events[eid - 1].t - self.events[sid].t;
        let total = (eid - sid) as f64;
        let excess = max_excess(&self.cells, total / self.cells.len() as f64);
        let satisfied = duration_us > self.t_th && excess > self.a_th;
        if satisfied || (sid == 0 && eid == self.events.len()) {
            self.done = true;
        }
        Some(AdaptiveStep {
            count: self.count,
            range: sid..eid,
            duration_us,
            max_excess: excess,
            satisfied,
        })
    }
}

/// Grows a volume around `anchor` until its duration exceeds `T_th` and the
/// busiest grid cell exceeds the mean cell count by more than `A_th`.
pub fn select_adaptive<'a>(
    stream: &'a EventStream,
    anchor: usize,
    cfg: &EncoderConfig,
) -> Result<EventVolume<'a>, EncodeError> {
    let mut steps = 0;
    for step in AdaptiveGrowth::new(stream, anchor, cfg)? {
        steps = step.count;
        if step.satisfied {
            return Ok(EventVolume::from_range(stream, step.range, Some(anchor))
                .expect("range contains the anchor"));
        }
    }
    Err(EncodeError::NeverSatisfied { anchor, steps })
}

fn check_anchor(anchor: usize, len: usize) -> Result<(), EncodeError> {
    if anchor < len {
        Ok(())
    } else {
        Err(EncodeError::AnchorOutOfRange { anchor, len })
    }
}
