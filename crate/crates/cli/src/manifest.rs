use std::path::Path;

use anyhow::Context;
use evpipe_core::config::PipelineConfig;
use evpipe_core::TimeWindow;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one `gen` or `encode` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub sequences: Vec<SequenceOutcome>,
    pub total_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput: Option<Throughput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Invalid,
    NeverSatisfied,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceOutcome {
    pub sequence_id: String,
    /// Sequence directory read (encode) or written (gen).
    pub path: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub events: usize,
    pub frames: usize,
    pub annotations: usize,
    pub elapsed_ms: f64,
    /// Samples requested; encode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub image_id: u64,
    /// Bundle path relative to the output directory.
    pub file: String,
    pub window: TimeWindow,
    pub anchor: Option<usize>,
    pub range: [usize; 2],
    pub positive_events: u64,
    pub negative_events: u64,
    pub annotations: usize,
    pub frame_t: Option<i64>,
}

/// Single-core histogram encoding rate over the run's sample windows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Throughput {
    pub path: String,
    pub windows: usize,
    pub events: u64,
    pub seconds: f64,
    pub events_per_second: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig, seed: u64, inputs: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: crate::settings::config_hash(config),
            config: config.clone(),
            seed,
            inputs,
            sequences: Vec::new(),
            total_ms: 0.0,
            throughput: None,
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn read(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("bad manifest {}", path.display()))
    }
}

pub fn millis(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
