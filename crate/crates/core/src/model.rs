//! Canonical domain types shared by every pipeline stage.
//!
//! Timestamps are integer microseconds everywhere. Millisecond windows coming
//! from configuration are converted with [`ms_to_us`] at the boundary.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Microsecond timestamp.
pub type Micros = i64;

pub const DAVIS346_WIDTH: u32 = 346;
pub const DAVIS346_HEIGHT: u32 = 260;

/// Converts a millisecond duration to microseconds, rounding to the nearest µs.
pub fn ms_to_us(ms: f64) -> Micros {
    (ms * 1000.0).round() as Micros
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub width: u32,
    pub height: u32,
}

impl SensorGeometry {
    pub fn new(width: u32, height: u32) -> Option<Self> {
        (width >= 1 && height >= 1).then_some(Self { width, height })
    }

    pub const fn davis346() -> Self {
        Self {
            width: DAVIS346_WIDTH,
            height: DAVIS346_HEIGHT,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        u32::from(x) < self.width && u32::from(y) < self.height
    }
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self::davis346()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Brightness increment, stored as `1` on disk.
    Positive,
    /// Brightness decrement, stored as `0` on disk.
    Negative,
}

impl Polarity {
    pub fn from_raw(raw: i64) -> Option<Self> {
        match raw {
            1 => Some(Polarity::Positive),
            0 => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn to_raw(self) -> i64 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => 0,
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: Micros,
    pub x: u16,
    pub y: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: Micros, x: u16, y: u16, p: Polarity) -> Self {
        Self { t, x, y, p }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamError {
    #[error("timestamps decrease at index {index} ({prev} -> {next})")]
    Unsorted { index: usize, prev: Micros, next: Micros },
    #[error("event {index} at ({x}, {y}) lies outside the {width}x{height} sensor")]
    OutOfBounds {
        index: usize,
        x: u16,
        y: u16,
        width: u32,
        height: u32,
    },
    #[error("event {index} has negative timestamp {t}")]
    NegativeTimestamp { index: usize, t: Micros },
}

/// Time-ordered events on a fixed sensor plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream after checking ordering and bounds.
    pub fn new(geometry: SensorGeometry, events: Vec<Event>) -> Result<Self, StreamError> {
        if let Some(err) = first_stream_error(geometry, &events) {
            return Err(err);
        }
        Ok(Self { geometry, events })
    }

    /// Builds a stream without checking invariants. Used to carry suspect
    /// data into [`validate_sequence`].
    pub fn new_unchecked(geometry: SensorGeometry, events: Vec<Event>) -> Self {
        Self { geometry, events }
    }

    pub fn empty(geometry: SensorGeometry) -> Self {
        Self {
            geometry,
            events: Vec::new(),
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Timestamp span `[first, last]`, or `None` for an empty stream.
    pub fn span(&self) -> Option<TimeWindow> {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => Some(TimeWindow {
                t_min: a.t,
                t_max: b.t,
            }),
            _ => None,
        }
    }

    /// Index range of the events whose timestamps fall in the closed window.
    pub fn index_range(&self, window: TimeWindow) -> std::ops::Range<usize> {
        let start = self.events.partition_point(|e| e.t < window.t_min);
        let end = self.events.partition_point(|e| e.t <= window.t_max);
        start..end.max(start)
    }
}

fn first_stream_error(geometry: SensorGeometry, events: &[Event]) -> Option<StreamError> {
    let mut prev: Option<Micros> = None;
    for (index, e) in events.iter().enumerate() {
        if e.t < 0 {
            return Some(StreamError::NegativeTimestamp { index, t: e.t });
        }
        if let Some(p) = prev {
            if e.t < p {
                return Some(StreamError::Unsorted {
                    index,
                    prev: p,
                    next: e.t,
                });
            }
        }
        if !geometry.contains(e.x, e.y) {
            return Some(StreamError::OutOfBounds {
                index,
                x: e.x,
                y: e.y,
                width: geometry.width,
                height: geometry.height,
            });
        }
        prev = Some(e.t);
    }
    None
}

/// Closed time interval `[t_min, t_max]` in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_min: Micros,
    pub t_max: Micros,
}

impl TimeWindow {
    pub fn new(t_min: Micros, t_max: Micros) -> Option<Self> {
        (t_min <= t_max).then_some(Self { t_min, t_max })
    }

    /// `[center - half, center + half]`.
    pub fn around(center: Micros, half: Micros) -> Self {
        let half = half.abs();
        Self {
            t_min: center.saturating_sub(half),
            t_max: center.saturating_add(half),
        }
    }

    pub fn contains(&self, t: Micros) -> bool {
        self.t_min <= t && t <= self.t_max
    }

    pub fn duration(&self) -> Micros {
        self.t_max - self.t_min
    }
}

/// Grayscale APS frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub t: Micros,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(t: Micros, width: u32, height: u32, pixels: Vec<u8>) -> Option<Self> {
        (pixels.len() == width as usize * height as usize).then_some(Self {
            t,
            width,
            height,
            pixels,
        })
    }

    pub fn filled(t: Micros, geometry: SensorGeometry, value: u8) -> Self {
        Self {
            t,
            width: geometry.width,
            height: geometry.height,
            pixels: vec![value; geometry.pixel_count()],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn matches(&self, geometry: SensorGeometry) -> bool {
        self.width == geometry.width
            && self.height == geometry.height
            && self.pixels.len() == geometry.pixel_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectClass {
    Crack,
    Spalling,
}

impl DefectClass {
    pub const ALL: [DefectClass; 2] = [DefectClass::Crack, DefectClass::Spalling];

    pub fn from_id(id: i64) -> Option<Self> {
        match id {
            0 => Some(DefectClass::Crack),
            1 => Some(DefectClass::Spalling),
            _ => None,
        }
    }

    pub fn id(self) -> u8 {
        match self {
            DefectClass::Crack => 0,
            DefectClass::Spalling => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DefectClass::Crack => "crack",
            DefectClass::Spalling => "spalling",
        }
    }
}

impl fmt::Display for DefectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned box as corner + width + height, in pixel units.
///
/// The corner is stored verbatim from the label file; [`CornerConvention`]
/// says how to read it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn x2(&self) -> f64 {
        self.x + self.w
    }

    pub fn y2(&self) -> f64 {
        self.y + self.h
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.w > 0.0 && self.h > 0.0)
    }

    /// Intersection with `[0, width] x [0, height]`, or `None` when empty.
    pub fn clip_to(&self, width: f64, height: f64) -> Option<BBox> {
        let x1 = self.x.max(0.0);
        let y1 = self.y.max(0.0);
        let x2 = self.x2().min(width);
        let y2 = self.y2().min(height);
        (x2 > x1 && y2 > y1).then(|| BBox::new(x1, y1, x2 - x1, y2 - y1))
    }

    /// Intersection-over-union; zero when either box has no area.
    pub fn iou(&self, other: &BBox) -> f64 {
        let iw = (self.x2().min(other.x2()) - self.x.max(other.x)).max(0.0);
        let ih = (self.y2().min(other.y2()) - self.y.max(other.y)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// How the stored bbox corner maps onto y-down image coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerConvention {
    /// `(x, y)` is the top-left corner (COCO).
    #[default]
    TopLeft,
    /// `(x, y)` is the bottom-left corner; the box spans rows `[y - h, y]`.
    BottomLeft,
}

impl CornerConvention {
    /// Re-expresses a stored box with a top-left corner.
    pub fn to_top_left(self, b: BBox) -> BBox {
        match self {
            CornerConvention::TopLeft => b,
            CornerConvention::BottomLeft => BBox::new(b.x, b.y - b.h, b.w, b.h),
        }
    }

    pub fn from_top_left(self, b: BBox) -> BBox {
        match self {
            CornerConvention::TopLeft => b,
            CornerConvention::BottomLeft => BBox::new(b.x, b.y + b.h, b.w, b.h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub t: Micros,
    pub class: DefectClass,
    pub bbox: BBox,
}

impl Annotation {
    pub fn new(t: Micros, class: DefectClass, bbox: BBox) -> Self {
        Self { t, class, bbox }
    }
}

/// A model output: an annotation with a confidence score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub t: Micros,
    pub class: DefectClass,
    pub bbox: BBox,
    pub score: f64,
}

impl Detection {
    pub fn new(annotation: Annotation, score: f64) -> Option<Self> {
        (0.0..=1.0).contains(&score).then_some(Self {
            t: annotation.t,
            class: annotation.class,
            bbox: annotation.bbox,
            score,
        })
    }

    pub fn annotation(&self) -> Annotation {
        Annotation::new(self.t, self.class, self.bbox)
    }
}

/// One recording: events, APS frames and bounding-box labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecording {
    pub geometry: SensorGeometry,
    pub events: EventStream,
    pub frames: Vec<Frame>,
    /// Labels keyed to event timestamps (shared with frames unless
    /// `frame_annotations` is present).
    pub annotations: Vec<Annotation>,
    /// Separate frame labels for recordings whose APS and DVS clocks drifted.
    pub frame_annotations: Option<Vec<Annotation>>,
}

impl SequenceRecording {
    /// Annotations to use for APS frames.
    pub fn annotations_for_frames(&self) -> &[Annotation] {
        self.frame_annotations
            .as_deref()
            .unwrap_or(&self.annotations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnsortedEvents { index: usize },
    NegativeEventTimestamp { index: usize },
    EventOutOfBounds { index: usize, x: u16, y: u16 },
    UnsortedFrames { index: usize },
    FrameShape { index: usize, width: u32, height: u32 },
    DegenerateBox { list: LabelList, index: usize },
    BoxOffSensor { list: LabelList, index: usize },
    AnnotationOutsideEvents { index: usize, t: Micros },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelList {
    Events,
    Frames,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnsortedEvents { index } => {
                write!(f, "unsorted timestamps: event {index} precedes its predecessor")
            }
            Violation::NegativeEventTimestamp { index } => {
                write!(f, "event {index} has a negative timestamp")
            }
            Violation::EventOutOfBounds { index, x, y } => {
                write!(f, "event {index} at ({x}, {y}) is out of bounds")
            }
            Violation::UnsortedFrames { index } => {
                write!(f, "unsorted timestamps: frame {index} precedes its predecessor")
            }
            Violation::FrameShape {
                index,
                width,
                height,
            } => write!(f, "frame {index} is {width}x{height}, not the sensor size"),
            Violation::DegenerateBox { list, index } => {
                write!(f, "{list:?} annotation {index} has zero area")
            }
            Violation::BoxOffSensor { list, index } => {
                write!(f, "{list:?} annotation {index} does not touch the sensor plane")
            }
            Violation::AnnotationOutsideEvents { index, t } => {
                write!(f, "annotation {index} at t={t} lies outside the event span")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every schema violation in `seq`.
///
/// Ordering problems are reported once, at the first inversion. Out-of-bounds
/// events are reported individually.
pub fn validate_sequence(seq: &SequenceRecording, corner: CornerConvention) -> ValidationReport {
    let mut violations = Vec::new();
    let geometry = seq.geometry;

    let events = seq.events.events();
    if let Some(index) = first_inversion(events.iter().map(|e| e.t)) {
        violations.push(Violation::UnsortedEvents { index });
    }
    for (index, e) in events.iter().enumerate() {
        if e.t < 0 {
            violations.push(Violation::NegativeEventTimestamp { index });
        }
        if !geometry.contains(e.x, e.y) {
            violations.push(Violation::EventOutOfBounds {
                index,
                x: e.x,
                y: e.y,
            });
        }
    }

    if let Some(index) = first_inversion(seq.frames.iter().map(|f| f.t)) {
        violations.push(Violation::UnsortedFrames { index });
    }
    for (index, frame) in seq.frames.iter().enumerate() {
        if !frame.matches(geometry) {
            violations.push(Violation::FrameShape {
                index,
                width: frame.width,
                height: frame.height,
            });
        }
    }

    let mut check_boxes = |list: LabelList, anns: &[Annotation]| {
        for (index, a) in anns.iter().enumerate() {
            if a.bbox.is_degenerate() {
                violations.push(Violation::DegenerateBox { list, index });
            } else if corner
                .to_top_left(a.bbox)
                .clip_to(geometry.width as f64, geometry.height as f64)
                .is_none()
            {
                violations.push(Violation::BoxOffSensor { list, index });
            }
        }
    };
    check_boxes(LabelList::Events, &seq.annotations);
    if let Some(frame_anns) = &seq.frame_annotations {
        check_boxes(LabelList::Frames, frame_anns);
    }

    // Shared layout: labels are keyed to event timestamps.
    if seq.frame_annotations.is_none() {
        let ts = events.iter().map(|e| e.t);
        if let (Some(lo), Some(hi)) = (ts.clone().min(), ts.max()) {
            let span = TimeWindow { t_min: lo, t_max: hi };
            for (index, a) in seq.annotations.iter().enumerate() {
                if !span.contains(a.t) {
                    violations.push(Violation::AnnotationOutsideEvents { index, t: a.t });
                }
            }
        }
    }

    ValidationReport { violations }
}

fn first_inversion(ts: impl Iterator<Item = Micros>) -> Option<usize> {
    let mut prev = None;
    for (i, t) in ts.enumerate() {
        if let Some(p) = prev {
            if t < p {
                return Some(i);
            }
        }
        prev = Some(t);
    }
    None
}
