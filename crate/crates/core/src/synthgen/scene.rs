use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::dvs::{DvsSimulator, Region};
use crate::model::{
    Annotation, BBox, DefectClass, Event, EventStream, Frame, Micros, Polarity, SensorGeometry,
    SequenceRecording,
};

/// Sensor integration step.
pub const SUBSTEP_US: Micros = 1_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> SceneError {
    SceneError::Invalid(msg.into())
}

/// Shape of a pattern in its own frame, with the origin at the top-left of
/// its bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternKind {
    /// Thick polyline; `points` are offset so the stroke starts at zero.
    CrackPolyline { points: Vec<(f64, f64)>, width: f64 },
    /// Star-shaped blob `r(a) = radius * (1 + sum amp * sin(freq * a + phase))`.
    SpallingBlob { radius: f64, harmonics: Vec<(f64, u32, f64)> },
    Bar { width: f64, height: f64 },
    Checker { cell: f64, cols: u32, rows: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePattern {
    pub kind: PatternKind,
    /// Position of the pattern's top-left corner at `t = 0`.
    pub origin: (f64, f64),
    pub foreground: f64,
    pub background: f64,
    pub class: DefectClass,
}

fn seg_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + s * dx - p.0, a.1 + s * dy - p.1);
    qx * qx + qy * qy
}

impl PatternKind {
    /// Width and height of the bounding box.
    pub fn extent(&self) -> (f64, f64) {
        match self {
            PatternKind::CrackPolyline { points, width } => {
                let max = |f: fn(&(f64, f64)) -> f64| points.iter().map(f).fold(0.0, f64::max);
                (max(|p| p.0) + width / 2.0, max(|p| p.1) + width / 2.0)
            }
            PatternKind::SpallingBlob { radius, harmonics } => {
                let d = 2.0 * self.max_radius(*radius, harmonics);
                (d, d)
            }
            PatternKind::Bar { width, height } => (*width, *height),
            PatternKind::Checker { cell, cols, rows } => {
                (cell * f64::from(*cols), cell * f64::from(*rows))
            }
        }
    }

    fn max_radius(&self, radius: f64, harmonics: &[(f64, u32, f64)]) -> f64 {
        radius * (1.0 + harmonics.iter().map(|h| h.0.abs()).sum::<f64>())
    }

    /// Whether local point `(x, y)` is foreground.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (w, h) = self.extent();
        if x < 0.0 || y < 0.0 || x >= w || y >= h {
            return false;
        }
        match self {
            PatternKind::CrackPolyline { points, width } => {
                let r2 = (width / 2.0).powi(2);
                points.windows(2).any(|s| seg_dist2((x, y), s[0], s[1]) <= r2)
            }
            PatternKind::SpallingBlob { radius, harmonics } => {
                let c = self.max_radius(*radius, harmonics);
                let (dx, dy) = (x - c, y - c);
                let a = dy.atan2(dx);
                let r = radius
                    * (1.0
                        + harmonics
                            .iter()
                            .map(|&(amp, f, ph)| amp * (f64::from(f) * a + ph).sin())
                            .sum::<f64>());
                dx * dx + dy * dy <= r * r
            }
            PatternKind::Bar { .. } => true,
            PatternKind::Checker { cell, .. } => {
                ((x / cell).floor() as i64 + (y / cell).floor() as i64) % 2 == 0
            }
        }
    }

    /// Tight box of the foreground, in local coordinates.
    pub fn local_box(&self) -> BBox {
        match self {
            PatternKind::CrackPolyline { points, width } => {
                let min = |f: fn(&(f64, f64)) -> f64| points.iter().map(f).fold(f64::INFINITY, f64::min);
                let (w, h) = self.extent();
                let (x0, y0) = (min(|p| p.0) - width / 2.0, min(|p| p.1) - width / 2.0);
                BBox::new(x0.max(0.0), y0.max(0.0), w - x0.max(0.0), h - y0.max(0.0))
            }
            _ => {
                let (w, h) = self.extent();
                BBox::new(0.0, 0.0, w, h)
            }
        }
    }
}

impl ScenePattern {
    pub fn validate(&self, geometry: SensorGeometry) -> Result<(), SceneError> {
        for (name, v) in [("foreground", self.foreground), ("background", self.background)] {
            if !(v > 0.0 && v <= 255.0) {
                return Err(invalid(format!("{name} intensity {v} outside (0, 255]")));
            }
        }
        let (w, h) = self.kind.extent();
        if !(w > 0.0 && h > 0.0) {
            return Err(invalid("pattern has no extent"));
        }
        if w > f64::from(geometry.width) || h > f64::from(geometry.height) {
            return Err(invalid(format!("pattern {w}x{h} does not fit the sensor")));
        }
        match &self.kind {
            PatternKind::CrackPolyline { points, width } => {
                if points.len() < 2 || !(*width > 0.0) {
                    return Err(invalid("polyline needs two points and a positive width"));
                }
                if points.iter().any(|p| p.0 < 0.0 || p.1 < 0.0) {
                    return Err(invalid("polyline points must be non-negative"));
                }
            }
            PatternKind::SpallingBlob { radius, harmonics } => {
                let wobble: f64 = harmonics.iter().map(|h| h.0.abs()).sum();
                if !(*radius > 0.0) || wobble >= 1.0 {
                    return Err(invalid("blob needs a positive radius and harmonics summing below 1"));
                }
            }
            PatternKind::Checker { cols, rows, cell } => {
                if *cols == 0 || *rows == 0 || !(*cell > 0.0) {
                    return Err(invalid("checker needs cells"));
                }
            }
            PatternKind::Bar { .. } => {}
        }
        Ok(())
    }

    fn position(&self, motion: &MotionSpec, t: Micros) -> (f64, f64) {
        let s = t as f64 * 1e-6;
        (
            self.origin.0 + motion.velocity.0 * s,
            self.origin.1 + motion.velocity.1 * s,
        )
    }

    /// Intensity at pixel `(x, y)` with the pattern at `pos`, sampled at the
    /// pixel centre.
    fn intensity(&self, pos: (f64, f64), x: u32, y: u32) -> f64 {
        let lx = f64::from(x) + 0.5 - pos.0;
        let ly = f64::from(y) + 0.5 - pos.1;
        if self.kind.contains(lx, ly) {
            self.foreground
        } else {
            self.background
        }
    }

    /// Pixels whose centres the pattern's bounding box can cover at `pos`.
    fn footprint(&self, pos: (f64, f64), geometry: SensorGeometry) -> Option<Region> {
        let (w, h) = self.kind.extent();
        let clamp = |v: f64, hi: u32| v.clamp(0.0, f64::from(hi)) as u32;
        let r = Region {
            x0: clamp((pos.0 - 0.5).floor(), geometry.width),
            y0: clamp((pos.1 - 0.5).floor(), geometry.height),
            x1: clamp((pos.0 + w + 0.5).ceil(), geometry.width),
            y1: clamp((pos.1 + h + 0.5).ceil(), geometry.height),
        };
        (r.x1 > r.x0 && r.y1 > r.y0).then_some(r)
    }

    /// Ground-truth box at `pos`, clipped to the sensor.
    fn label_box(&self, pos: (f64, f64), geometry: SensorGeometry) -> Option<BBox> {
        let b = self.kind.local_box();
        BBox::new(b.x + pos.0, b.y + pos.1, b.w, b.h)
            .clip_to(f64::from(geometry.width), f64::from(geometry.height))
    }
}

fn union(a: Option<Region>, b: Option<Region>) -> Option<Region> {
    match (a, b) {
        (Some(a), Some(b)) => Some(Region {
            x0: a.x0.min(b.x0),
            y0: a.y0.min(b.y0),
            x1: a.x1.max(b.x1),
            y1: a.y1.max(b.y1),
        }),
        (a, b) => a.or(b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSpec {
    /// Pixels per second along x and y.
    pub velocity: (f64, f64),
    pub duration_s: f64,
    /// APS frame rate in Hz, within `[5, 35]`.
    pub fps: f64,
    /// Contrast threshold in log-intensity units.
    pub contrast: f64,
    /// Background noise events per pixel per second.
    pub noise_rate_hz: f64,
    /// Label rate in Hz, at least 15.
    pub label_hz: f64,
}

impl Default for MotionSpec {
    fn default() -> Self {
        Self {
            velocity: (100.0, 0.0),
            duration_s: 1.0,
            fps: 20.0,
            contrast: 0.2,
            noise_rate_hz: 0.0,
            label_hz: 30.0,
        }
    }
}

impl MotionSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(5.0..=35.0).contains(&self.fps) {
            return Err(invalid(format!("frame rate {} Hz outside [5, 35]", self.fps)));
        }
        if !(self.contrast > 0.0) {
            return Err(invalid("contrast threshold must be positive"));
        }
        if !(self.duration_s > 0.0 && self.duration_s <= 600.0) {
            return Err(invalid("duration must be in (0, 600] s"));
        }
        if !(self.noise_rate_hz >= 0.0) {
            return Err(invalid("noise rate must be non-negative"));
        }
        if !(self.label_hz >= 15.0) {
            return Err(invalid("label rate must be at least 15 Hz"));
        }
        if !(self.velocity.0.is_finite() && self.velocity.1.is_finite()) {
            return Err(invalid("velocity must be finite"));
        }
        Ok(())
    }

    fn duration_us(&self) -> Micros {
        (self.duration_s * 1e6).round() as Micros
    }
}

fn ticks(rate_hz: f64, end: Micros) -> impl Iterator<Item = Micros> {
    (0u64..)
        .map(move |j| (j as f64 * 1e6 / rate_hz).round() as Micros)
        .take_while(move |&t| t <= end)
}

/// Renders a moving pattern as a full recording.
///
/// The sensor integrates at 1 ms steps. Frames are sampled at `fps`; labels
/// at `label_hz`, limited to the span of the emitted events. Noise events,
/// when enabled, are drawn from `seed`; without noise the seed is unused.
pub fn render_sequence(
    pattern: &ScenePattern,
    motion: &MotionSpec,
    geometry: SensorGeometry,
    seed: u64,
) -> Result<SequenceRecording, SceneError> {
    pattern.validate(geometry)?;
    motion.validate()?;
    let end = motion.duration_us();
    let pos0 = pattern.position(motion, 0);
    let mut sim = DvsSimulator::new(geometry, motion.contrast, |x, y| pattern.intensity(pos0, x, y));

    let mut events: Vec<Event> = Vec::new();
    let mut t_prev = 0;
    let mut pos_prev = pos0;
    while t_prev < end {
        let t = (t_prev + SUBSTEP_US).min(end);
        let pos = pattern.position(motion, t);
        if pos != pos_prev {
            let region = union(
                pattern.footprint(pos_prev, geometry),
                pattern.footprint(pos, geometry),
            );
            if let Some(region) = region {
                sim.advance(region, |x, y| pattern.intensity(pos, x, y), t_prev, t, &mut events);
            }
        }
        t_prev = t;
        pos_prev = pos;
    }

    if motion.noise_rate_hz > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = motion.noise_rate_hz * geometry.pixel_count() as f64 * motion.duration_s;
        let n = Poisson::new(mean).map(|d| d.sample(&mut rng) as usize).unwrap_or(0);
        events.reserve(n);
        for _ in 0..n {
            let p = if rng.gen_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            events.push(Event::new(
                rng.gen_range(1..=end),
                rng.gen_range(0..geometry.width) as u16,
                rng.gen_range(0..geometry.height) as u16,
                p,
            ));
        }
        events.sort_by_key(|e| (e.t, e.y, e.x));
    }

    let frames = ticks(motion.fps, end)
        .map(|t| {
            let pos = pattern.position(motion, t);
            let w = geometry.width;
            let pixels = (0..geometry.pixel_count() as u32)
                .map(|i| pattern.intensity(pos, i % w, i / w).round().clamp(0.0, 255.0) as u8)
                .collect();
            Frame {
                t,
                width: geometry.width,
                height: geometry.height,
                pixels,
            }
        })
        .collect();

    let annotations = match (events.first(), events.last()) {
        (Some(first), Some(last)) => {
            let (lo, hi) = (first.t, last.t);
            ticks(motion.label_hz, hi)
                .filter(|&t| t >= lo)
                .filter_map(|t| {
                    pattern
                        .label_box(pattern.position(motion, t), geometry)
                        .map(|b| Annotation::new(t, pattern.class, b))
                })
                .collect()
        }
        _ => Vec::new(),
    };

    Ok(SequenceRecording {
        geometry,
        events: EventStream::new_unchecked(geometry, events),
        frames,
        annotations,
        frame_annotations: None,
    })
}

/// Recipe for a batch of random sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub sequences: usize,
    pub width: u32,
    pub height: u32,
    pub duration_s: f64,
    pub fps: f64,
    pub contrast: f64,
    pub noise_rate_hz: f64,
    pub label_hz: f64,
    /// Speed range in px/s; direction is drawn uniformly.
    pub speed: (f64, f64),
    /// Pattern kinds to draw from, by name.
    pub kinds: Vec<String>,
    /// Foreground and background intensity ranges.
    pub foreground: (f64, f64),
    pub background: (f64, f64),
}

impl Default for SceneConfig {
    fn default() -> Self {
        let g = SensorGeometry::davis346();
        Self {
            sequences: 2,
            width: g.width,
            height: g.height,
            duration_s: 1.0,
            fps: 20.0,
            contrast: 0.2,
            noise_rate_hz: 0.0,
            label_hz: 30.0,
            speed: (60.0, 150.0),
            kinds: vec!["crack_polyline".into(), "spalling_blob".into()],
            foreground: (20.0, 60.0),
            background: (150.0, 220.0),
        }
    }
}

const KINDS: [&str; 4] = ["crack_polyline", "spalling_blob", "bar", "checker"];

impl SceneConfig {
    pub fn geometry(&self) -> Result<SensorGeometry, SceneError> {
        SensorGeometry::new(self.width, self.height).ok_or_else(|| invalid("zero sensor size"))
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.geometry()?;
        if self.kinds.is_empty() {
            return Err(invalid("no pattern kinds"));
        }
        if let Some(k) = self.kinds.iter().find(|k| !KINDS.contains(&k.as_str())) {
            return Err(invalid(format!("unknown pattern kind {k:?}")));
        }
        let ordered = |(a, b): (f64, f64)| a <= b;
        if !(ordered(self.speed) && self.speed.0 >= 0.0) {
            return Err(invalid("speed range must be ordered and non-negative"));
        }
        for (a, b) in [self.foreground, self.background] {
            if !(a > 0.0 && a <= b && b <= 255.0) {
                return Err(invalid("intensity ranges must be ordered within (0, 255]"));
            }
        }
        self.motion((0.0, 0.0)).validate()
    }

    fn motion(&self, velocity: (f64, f64)) -> MotionSpec {
        MotionSpec {
            velocity,
            duration_s: self.duration_s,
            fps: self.fps,
            contrast: self.contrast,
            noise_rate_hz: self.noise_rate_hz,
            label_hz: self.label_hz,
        }
    }

    /// Pattern and motion for sequence `index`, drawn from `seed`.
    ///
    /// The pattern starts so that its centre crosses the sensor centre half
    /// way through the sequence.
    pub fn sample(&self, index: usize, seed: u64) -> Result<(ScenePattern, MotionSpec), SceneError> {
        self.validate()?;
        let g = self.geometry()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let kind_name = self.kinds[rng.gen_range(0..self.kinds.len())].as_str();
        let size = (f64::from(g.width.min(g.height)) * rng.gen_range(0.2..0.4)).max(4.0);
        let (kind, class) = match kind_name {
            "crack_polyline" => {
                let n = rng.gen_range(4..8);
                let width = rng.gen_range(2.0..5.0);
                let step = size / (n - 1) as f64;
                let mut y: f64 = size / 2.0;
                let mut points = Vec::with_capacity(n);
                for i in 0..n {
                    points.push((width / 2.0 + i as f64 * step, y));
                    y = (y + rng.gen_range(-step..step)).clamp(width / 2.0, size);
                }
                (PatternKind::CrackPolyline { points, width }, DefectClass::Crack)
            }
            "spalling_blob" => {
                let harmonics = (0..3)
                    .map(|_| {
                        (
                            rng.gen_range(0.03..0.1),
                            rng.gen_range(2..7),
                            rng.gen_range(0.0..std::f64::consts::TAU),
                        )
                    })
                    .collect();
                (
                    PatternKind::SpallingBlob { radius: size / 2.6, harmonics },
                    DefectClass::Spalling,
                )
            }
            "bar" => (
                PatternKind::Bar { width: size * 0.15, height: size },
                DefectClass::Crack,
            ),
            _ => {
                let cols = rng.gen_range(2..5);
                (
                    PatternKind::Checker { cell: size / f64::from(cols), cols, rows: cols },
                    DefectClass::Spalling,
                )
            }
        };
        let speed = rng.gen_range(self.speed.0..=self.speed.1);
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let velocity = (speed * angle.cos(), speed * angle.sin());
        let (w, h) = kind.extent();
        let half = self.duration_s / 2.0;
        let origin = (
            f64::from(g.width) / 2.0 - w / 2.0 - velocity.0 * half,
            f64::from(g.height) / 2.0 - h / 2.0 - velocity.1 * half,
        );
        let pattern = ScenePattern {
            kind,
            origin,
            foreground: rng.gen_range(self.foreground.0..=self.foreground.1),
            background: rng.gen_range(self.background.0..=self.background.1),
            class,
        };
        Ok((pattern, self.motion(velocity)))
    }
}

/// Sequence `index` of a scene batch.
pub fn render_scene(cfg: &SceneConfig, index: usize, seed: u64) -> Result<SequenceRecording, SceneError> {
    let (pattern, motion) = cfg.sample(index, seed)?;
    render_sequence(&pattern, &motion, cfg.geometry()?, seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_sequence, CornerConvention};

    fn bar(vx: f64) -> (ScenePattern, MotionSpec) {
        (
            ScenePattern {
                kind: PatternKind::Bar { width: 10.0, height: 40.0 },
                origin: (50.0, 100.0),
                foreground: 200.0,
                background: 50.0,
                class: DefectClass::Crack,
            },
            MotionSpec {
                velocity: (vx, 0.0),
                duration_s: 0.2,
                ..MotionSpec::default()
            },
        )
    }

    #[test]
    fn static_scene_is_silent() {
        let (p, m) = bar(0.0);
        let seq = render_sequence(&p, &m, SensorGeometry::davis346(), 1).unwrap();
        assert!(seq.events.is_empty());
        assert!(seq.frames.windows(2).all(|f| f[0].pixels == f[1].pixels));
        assert_eq!(seq.frames.len(), 5);
    }

    #[test]
    fn moving_bar_fires_only_on_swept_columns() {
        let (p, m) = bar(100.0);
        let seq = render_sequence(&p, &m, SensorGeometry::davis346(), 1).unwrap();
        assert!(!seq.events.is_empty());
        for e in seq.events.events() {
            let k = (e.t + SUBSTEP_US - 1) / SUBSTEP_US;
            let (a, b) = (
                50.0 + 100.0 * (k - 1) as f64 * 1e-3,
                50.0 + 100.0 * k as f64 * 1e-3,
            );
            let cx = f64::from(e.x) + 0.5;
            let leading = cx >= a + 10.0 && cx < b + 10.0;
            let trailing = cx >= a && cx < b;
            assert!(leading || trailing, "event at x={} t={}", e.x, e.t);
            assert_eq!(e.p == Polarity::Positive, leading);
            assert!((100..140).contains(&e.y));
        }
        let report = validate_sequence(&seq, CornerConvention::TopLeft);
        assert!(report.is_valid(), "{:?}", report.violations);
        let rate = seq.annotations.len() as f64 / 0.2;
        assert!(rate >= 15.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SceneConfig {
            duration_s: 0.3,
            noise_rate_hz: 0.5,
            kinds: KINDS.iter().map(|s| s.to_string()).collect(),
            ..SceneConfig::default()
        };
        for i in 0..4 {
            let a = render_scene(&cfg, i, 9).unwrap();
            assert_eq!(a, render_scene(&cfg, i, 9).unwrap());
            let report = validate_sequence(&a, CornerConvention::TopLeft);
            assert!(report.is_valid(), "{:?}", report.violations);
            assert!(a.events.len() > 1000);
        }
    }

    #[test]
    fn bad_specs_are_rejected() {
        let (p, mut m) = bar(1.0);
        m.fps = 40.0;
        assert!(render_sequence(&p, &m, SensorGeometry::davis346(), 0).is_err());
        let (mut p, m) = bar(1.0);
        p.foreground = 0.0;
        assert!(render_sequence(&p, &m, SensorGeometry::davis346(), 0).is_err());
    }
}
