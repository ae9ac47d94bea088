use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use evpipe_core::io::{write_sequence_as, ContainerFormat};
use evpipe_core::model::{validate_sequence, CornerConvention};
use evpipe_core::synthgen::{render_scene, SceneConfig};
use rayon::prelude::*;

use crate::args::{GenArgs, Global};
use crate::failure::invalid;
use crate::manifest::{millis, RunManifest, SequenceOutcome, Status};
use crate::settings;

fn generate_one(
    cfg: &SceneConfig,
    index: usize,
    seed: u64,
    out: &Path,
    format: ContainerFormat,
) -> anyhow::Result<SequenceOutcome> {
    let started = Instant::now();
    let id = format!("seq_{index:03}");
    let seq = render_scene(cfg, index, seed)?;
    let report = validate_sequence(&seq, CornerConvention::TopLeft);
    if !report.is_valid() {
        anyhow::bail!("generated {id} fails validation: {:?}", report.violations);
    }
    let dir = out.join(&id);
    write_sequence_as(&seq, &dir, format).with_context(|| format!("cannot write {}", dir.display()))?;
    Ok(SequenceOutcome {
        sequence_id: id,
        path: dir.display().to_string(),
        status: Status::Ok,
        message: None,
        events: seq.events.len(),
        frames: seq.frames.len(),
        annotations: seq.annotations.len(),
        elapsed_ms: millis(started.elapsed()),
        target: None,
        samples: Vec::new(),
    })
}

pub fn run(global: &Global, args: &GenArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut cfg = settings::load(global)?;
    let scene = &mut cfg.scene;
    if let Some(n) = args.sequences {
        scene.sequences = n;
    }
    if let Some(d) = args.duration_s {
        scene.duration_s = d;
    }
    if let Some(f) = args.fps {
        scene.fps = f;
    }
    if let Some(r) = args.noise_rate_hz {
        scene.noise_rate_hz = r;
    }
    cfg.scene.validate().map_err(|e| invalid(e.to_string()))?;

    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let format = ContainerFormat::from(args.format);
    let outcomes: Vec<anyhow::Result<SequenceOutcome>> = settings::pool(global.jobs)?.install(|| {
        (0..cfg.scene.sequences)
            .into_par_iter()
            .map(|i| generate_one(&cfg.scene, i, global.seed, &args.out, format))
            .collect()
    });
    let mut manifest = RunManifest::new("gen", &cfg, global.seed, Vec::new());
    for o in outcomes {
        let o = o?;
        println!(
            "{}  events {}  frames {}  annotations {}",
            o.sequence_id, o.events, o.frames, o.annotations
        );
        manifest.sequences.push(o);
    }
    manifest.total_ms = millis(started.elapsed());
    manifest.write(&args.out)
}
