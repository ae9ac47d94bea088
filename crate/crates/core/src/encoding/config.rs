use serde::{Deserialize, Serialize};

use crate::model::{ms_to_us, Micros, SensorGeometry};

/// How the event volume behind a histogram is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderMode {
    /// Closed window of `T_th` centred on the anchor time.
    FixedTime,
    /// `count_n` events centred on the anchor index.
    FixedCount,
    /// Shortest run from the anchor until one grid cell holds more than
    /// `cell_threshold` events.
    GridThreshold,
    /// Symmetric growth by `q` events per side until both the duration and
    /// the grid-excess thresholds are exceeded.
    #[default]
    Adaptive,
}

/// Lighting regime of a recording; selects the default `T_th`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lighting {
    #[default]
    WellLit,
    LowLight,
}

impl Lighting {
    pub fn default_t_th_ms(self) -> f64 {
        match self {
            Lighting::WellLit => 15.0,
            Lighting::LowLight => 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid encoder config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub mode: EncoderMode,
    pub lighting: Lighting,
    /// Duration threshold (adaptive) or window length (fixed_time). Falls
    /// back to the lighting default when unset.
    #[serde(rename = "T_th_ms", alias = "t_th_ms", skip_serializing_if = "Option::is_none")]
    pub t_th_ms: Option<f64>,
    /// Minimum excess of the busiest grid cell over the mean cell count.
    #[serde(rename = "A_th", alias = "a_th")]
    pub a_th: f64,
    /// Growth packet size, events per side per step.
    pub q: usize,
    /// Grid rows.
    pub grid_m: u32,
    /// Grid columns.
    pub grid_n: u32,
    pub count_n: usize,
    pub cell_threshold: u64,
    pub half_window_ms: f64,
    /// Normalize each polarity channel by its own maximum.
    pub per_channel_max: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            mode: EncoderMode::Adaptive,
            lighting: Lighting::WellLit,
            t_th_ms: None,
            a_th: 175.0,
            q: 100,
            grid_m: 4,
            grid_n: 4,
            count_n: 5000,
            cell_threshold: 200,
            half_window_ms: 10.0,
            per_channel_max: false,
        }
    }
}

impl EncoderConfig {
    pub fn adaptive(t_th_ms: f64, a_th: f64, q: usize, grid: (u32, u32)) -> Self {
        Self {
            mode: EncoderMode::Adaptive,
            t_th_ms: Some(t_th_ms),
            a_th,
            q,
            grid_m: grid.0,
            grid_n: grid.1,
            ..Self::default()
        }
    }

    pub fn with_mode(mut self, mode: EncoderMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn effective_t_th_ms(&self) -> f64 {
        self.t_th_ms
            .unwrap_or_else(|| self.lighting.default_t_th_ms())
    }

    pub fn t_th_us(&self) -> Micros {
        ms_to_us(self.effective_t_th_ms())
    }

    pub fn half_window_us(&self) -> Micros {
        ms_to_us(self.half_window_ms)
    }

    /// Copy with `T_th` pinned to its effective value.
    pub fn resolved(&self) -> Self {
        Self {
            t_th_ms: Some(self.effective_t_th_ms()),
            ..self.clone()
        }
    }

    pub fn validate(&self, geometry: SensorGeometry) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError(msg));
        let t_th = self.effective_t_th_ms();
        if !(t_th.is_finite() && t_th > 0.0) {
            return bad(format!("T_th_ms must be positive, got {t_th}"));
        }
        if !(self.a_th.is_finite() && self.a_th > 0.0) {
            return bad(format!("A_th must be positive, got {}", self.a_th));
        }
        if self.q == 0 {
            return bad("q must be positive".into());
        }
        if self.count_n == 0 {
            return bad("count_n must be positive".into());
        }
        if self.cell_threshold == 0 {
            return bad("cell_threshold must be positive".into());
        }
        if !(self.half_window_ms.is_finite() && self.half_window_ms > 0.0) {
            return bad(format!(
                "half_window_ms must be positive, got {}",
                self.half_window_ms
            ));
        }
        if self.grid_m == 0 || self.grid_n == 0 {
            return bad("grid dimensions must be positive".into());
        }
        if self.grid_n > geometry.width || self.grid_m > geometry.height {
            return bad(format!(
                "grid {}x{} is finer than the {}x{} sensor",
                self.grid_m, self.grid_n, geometry.width, geometry.height
            ));
        }
        Ok(())
    }
}
