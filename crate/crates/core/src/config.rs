//! The pipeline configuration document, readable as TOML or JSON.
//!
//! ```toml
//! [encoder]
//! mode = "adaptive"
//! T_th_ms = 15.0
//! A_th = 175.0
//!
//! [lighting]
//! night_run = "low_light"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::association::SampleCount;
use crate::encoding::{EncoderConfig, Lighting};
use crate::frame_prep::PrepConfig;
use crate::metrics::EvalConfig;
use crate::model::{CornerConvention, SensorGeometry};
use crate::synthgen::SceneConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// How label-file box corners are read.
    pub corner: CornerConvention,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            corner: CornerConvention::TopLeft,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub min_samples: usize,
    pub max_samples: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        let c = SampleCount::default();
        Self {
            min_samples: c.min,
            max_samples: c.max,
        }
    }
}

impl ExtractConfig {
    pub fn count(&self) -> SampleCount {
        SampleCount {
            min: self.min_samples,
            max: self.max_samples,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub encoder: EncoderConfig,
    pub prep: PrepConfig,
    pub extract: ExtractConfig,
    pub scene: SceneConfig,
    pub eval: EvalConfig,
    pub io: IoConfig,
    /// Per-sequence lighting, keyed by sequence directory name.
    pub lighting: BTreeMap<String, Lighting>,
}

impl PipelineConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigFileError> {
        let parsed = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| ConfigFileError::Parse {
            path: origin.to_string(),
            message,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Encoder settings for one sequence, with its lighting override applied.
    /// An explicit `T_th_ms` still wins over the lighting default.
    pub fn encoder_for(&self, sequence: &str) -> EncoderConfig {
        let mut enc = self.encoder.clone();
        if let Some(&lighting) = self.lighting.get(sequence) {
            enc.lighting = lighting;
        }
        enc
    }

    pub fn validate(&self, geometry: SensorGeometry) -> Result<(), ConfigFileError> {
        let invalid = |e: String| ConfigFileError::Invalid(e);
        self.encoder.validate(geometry).map_err(|e| invalid(e.to_string()))?;
        self.prep.validate().map_err(|e| invalid(e.to_string()))?;
        let c = self.extract;
        if c.min_samples == 0 || c.min_samples > c.max_samples {
            return Err(invalid(format!(
                "sample count range {}..={} is empty",
                c.min_samples, c.max_samples
            )));
        }
        if !(0.0..=1.0).contains(&self.eval.conf_thr) {
            return Err(invalid("eval.conf_thr must lie in [0, 1]".into()));
        }
        if let Some(t) = self.eval.nms_iou {
            if !(0.0..=1.0).contains(&t) {
                return Err(invalid("eval.nms_iou must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the effective configuration, for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::EncoderMode;

    #[test]
    fn toml_and_json_agree() {
        let toml_text = r#"
            [encoder]
            mode = "fixed_time"
            T_th_ms = 25.0
            A_th = 150.0

            [eval]
            conf_thr = 0.3

            [lighting]
            night = "low_light"
        "#;
        let a = PipelineConfig::parse(toml_text, "a.toml").unwrap();
        assert_eq!(a.encoder.mode, EncoderMode::FixedTime);
        assert_eq!(a.encoder.effective_t_th_ms(), 25.0);
        assert_eq!(a.eval.nms_iou, Some(0.4));
        let b = PipelineConfig::parse(&a.canonical_json(), "b.json").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lighting_override_selects_default_threshold() {
        let cfg = PipelineConfig::parse("[lighting]\nnight = \"low_light\"\n", "x").unwrap();
        assert_eq!(cfg.encoder_for("night").effective_t_th_ms(), 30.0);
        assert_eq!(cfg.encoder_for("day").effective_t_th_ms(), 15.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::parse("[encoder]\nbogus = 1\n", "x").is_err());
        assert!(PipelineConfig::parse("[nonsense]\n", "x").is_err());
    }
}
