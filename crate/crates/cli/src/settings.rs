//! Effective configuration, seeds and the worker pool.

use anyhow::Context;
use evpipe_core::config::PipelineConfig;
use sha2::{Digest, Sha256};

use crate::args::Global;
use crate::failure::invalid;

pub fn load(global: &Global) -> anyhow::Result<PipelineConfig> {
    match &global.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| invalid(e.to_string())),
        None => Ok(PipelineConfig::default()),
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical JSON of `cfg`.
pub fn config_hash(cfg: &PipelineConfig) -> String {
    hex(&Sha256::digest(cfg.canonical_json().as_bytes()))
}

/// Per-sequence seed that does not depend on processing order.
pub fn sequence_seed(seed: u64, sequence_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(sequence_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

pub fn pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("cannot start worker pool")
}
