use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use evpipe_core::association::{extract_samples, ExtractError, SampleBundle};
use evpipe_core::config::PipelineConfig;
use evpipe_core::encoding::{encode, Anchor, EncoderConfig, EncoderMode};
use evpipe_core::io::{read_sequence, write_sample_bundle, SequenceLayout};
use evpipe_core::metrics::{ground_truth_line, GtBox};
use evpipe_core::model::{validate_sequence, CornerConvention};
use evpipe_core::{EventStream, SequenceRecording};
use rayon::prelude::*;

use crate::args::{EncodeArgs, Global};
use crate::failure::{invalid, Failure};
use crate::manifest::{millis, RunManifest, SampleRecord, SequenceOutcome, Status, Throughput};
use crate::{settings, verify};

pub const LABELS_JSONL: &str = "labels.jsonl";

fn apply_overrides(cfg: &mut PipelineConfig, args: &EncodeArgs) {
    let enc = &mut cfg.encoder;
    if let Some(m) = args.mode {
        enc.mode = m;
    }
    if let Some(l) = args.lighting {
        enc.lighting = l;
        // A flag applies to every input, so it also beats per-sequence entries.
        for v in cfg.lighting.values_mut() {
            *v = l;
        }
    }
    if let Some(t) = args.t_th_ms {
        enc.t_th_ms = Some(t);
    }
    if let Some(a) = args.a_th {
        enc.a_th = a;
    }
    if let Some(q) = args.q {
        enc.q = q;
    }
    if let Some((m, n)) = args.grid {
        enc.grid_m = m;
        enc.grid_n = n;
    }
    if let Some(n) = args.min_samples {
        cfg.extract.min_samples = n;
    }
    if let Some(n) = args.max_samples {
        cfg.extract.max_samples = n;
    }
}

fn is_sequence_dir(dir: &Path) -> bool {
    ["events.h5", "events.hdf5", "events.evt"].iter().any(|n| dir.join(n).is_file())
}

fn dir_name(dir: &Path) -> String {
    dir.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| dir.display().to_string())
}

/// Expands the inputs into `(sequence_id, dir)` pairs sorted by id.
pub fn discover(inputs: &[PathBuf]) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut found = Vec::new();
    for input in inputs {
        if is_sequence_dir(input) {
            found.push((dir_name(input), input.clone()));
            continue;
        }
        let entries = std::fs::read_dir(input).with_context(|| format!("cannot read {}", input.display()))?;
        let mut subdirs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && is_sequence_dir(p))
            .collect();
        if subdirs.is_empty() {
            // Let the reader name the missing container.
            SequenceLayout::discover(input).with_context(|| format!("no sequences under {}", input.display()))?;
        }
        subdirs.sort();
        found.extend(subdirs.into_iter().map(|p| (dir_name(&p), p)));
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = found.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(invalid(format!(
            "sequence id {} appears twice ({} and {})",
            w[0].0,
            w[0].1.display(),
            w[1].1.display()
        )));
    }
    Ok(found)
}

/// Re-expresses stored boxes with a top-left corner.
pub fn to_top_left(seq: &mut SequenceRecording, corner: CornerConvention) {
    let fix = |anns: &mut Vec<evpipe_core::Annotation>| {
        for a in anns {
            a.bbox = corner.to_top_left(a.bbox);
        }
    };
    fix(&mut seq.annotations);
    if let Some(f) = &mut seq.frame_annotations {
        fix(f);
    }
}

#[derive(Default)]
struct Timing {
    windows: usize,
    events: u64,
    seconds: f64,
}

/// Re-encodes each sample window on the fixed-time path, timing every call.
fn time_fixed_time(stream: &EventStream, bundles: &[SampleBundle], enc: &EncoderConfig) -> Timing {
    let cfg = enc.resolved().with_mode(EncoderMode::FixedTime);
    let mut t = Timing::default();
    for b in bundles {
        let Some(p) = &b.histogram.provenance else { continue };
        let anchor = Anchor::Index(p.anchor.unwrap_or(p.start));
        let started = Instant::now();
        let h = encode(stream, anchor, &cfg);
        t.seconds += started.elapsed().as_secs_f64();
        if let Ok(h) = black_box(h) {
            let p = h.provenance.expect("encode sets provenance");
            t.events += p.positive_events + p.negative_events;
            t.windows += 1;
        }
    }
    t
}

struct Processed {
    outcome: SequenceOutcome,
    bundles: Vec<SampleBundle>,
    timing: Timing,
}

fn process(cfg: &PipelineConfig, id: &str, dir: &Path, seed: u64) -> Processed {
    let started = Instant::now();
    let mut p = Processed {
        outcome: SequenceOutcome {
            sequence_id: id.to_string(),
            path: dir.display().to_string(),
            status: Status::Ok,
            message: None,
            events: 0,
            frames: 0,
            annotations: 0,
            elapsed_ms: 0.0,
            target: None,
            samples: Vec::new(),
        },
        bundles: Vec::new(),
        timing: Timing::default(),
    };
    let result = extract_one(cfg, id, dir, seed, &mut p);
    if let Err((status, message)) = result {
        p.outcome.status = status;
        p.outcome.message = Some(message);
    }
    p.outcome.elapsed_ms = millis(started.elapsed());
    p
}

fn extract_one(
    cfg: &PipelineConfig,
    id: &str,
    dir: &Path,
    seed: u64,
    p: &mut Processed,
) -> Result<(), (Status, String)> {
    let mut seq = read_sequence(dir).map_err(|e| (Status::Failed, format!("cannot read {}: {e}", dir.display())))?;
    p.outcome.events = seq.events.len();
    p.outcome.frames = seq.frames.len();
    p.outcome.annotations = seq.annotations.len();
    let report = validate_sequence(&seq, cfg.io.corner);
    if let Some(first) = report.violations.first() {
        return Err((
            Status::Invalid,
            format!("{} violation(s), first: {first}", report.violations.len()),
        ));
    }
    let enc = cfg.encoder_for(id);
    enc.validate(seq.geometry).map_err(|e| (Status::Invalid, e.to_string()))?;
    to_top_left(&mut seq, cfg.io.corner);
    let seed = settings::sequence_seed(seed, id);
    match extract_samples(&seq, id, cfg.extract.count(), &enc, &cfg.prep, seed) {
        Ok(ex) => {
            p.outcome.target = Some(ex.target);
            p.timing = time_fixed_time(&seq.events, &ex.bundles, &enc);
            p.bundles = ex.bundles;
            Ok(())
        }
        Err(e @ ExtractError::EncoderNeverSatisfiable { .. }) => Err((Status::NeverSatisfied, e.to_string())),
        Err(e @ ExtractError::EmptyStream) => Err((Status::Invalid, e.to_string())),
        Err(e) => Err((Status::Failed, e.to_string())),
    }
}

fn write_bundles(out: &Path, p: &mut Processed) -> anyhow::Result<()> {
    let id = &p.outcome.sequence_id;
    std::fs::create_dir_all(out.join(id))?;
    for b in &p.bundles {
        let file = format!("{id}/{:06}.npz", b.image_id);
        write_sample_bundle(b, &out.join(&file)).with_context(|| format!("cannot write {file}"))?;
        let prov = b.histogram.provenance.as_ref().expect("extracted bundles carry provenance");
        p.outcome.samples.push(SampleRecord {
            image_id: b.image_id,
            file,
            window: b.window,
            anchor: prov.anchor,
            range: [prov.start, prov.end],
            positive_events: prov.positive_events,
            negative_events: prov.negative_events,
            annotations: b.annotations.len(),
            frame_t: b.frame_t,
        });
    }
    Ok(())
}

pub fn run(global: &Global, args: &EncodeArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut cfg = settings::load(global)?;
    apply_overrides(&mut cfg, args);
    let sequences = discover(&args.inputs)?;
    if sequences.is_empty() {
        return Err(invalid("no sequence directories found"));
    }
    // Sensor-independent checks up front; encoder bounds are checked per sequence.
    let c = cfg.extract;
    if c.min_samples == 0 || c.min_samples > c.max_samples {
        return Err(invalid(format!("sample count range {}..={} is empty", c.min_samples, c.max_samples)));
    }
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;

    let pool = settings::pool(global.jobs)?;
    let mut processed: Vec<Processed> = pool.install(|| {
        sequences
            .par_iter()
            .map(|(id, dir)| process(&cfg, id, dir, global.seed))
            .collect()
    });

    // Image ids are global and follow sequence-id order.
    let mut next = 0u64;
    for p in &mut processed {
        for b in &mut p.bundles {
            b.image_id = next;
            next += 1;
        }
    }
    pool.install(|| processed.par_iter_mut().try_for_each(|p| write_bundles(&args.out, p)))?;

    let mut gt = String::new();
    for b in processed.iter().flat_map(|p| &p.bundles) {
        for a in &b.annotations {
            gt.push_str(&ground_truth_line(&GtBox { image_id: b.image_id, class: a.class, bbox: a.bbox }));
            gt.push('\n');
        }
    }
    std::fs::write(args.out.join(LABELS_JSONL), gt)?;

    let inputs = args.inputs.iter().map(|p| p.display().to_string()).collect();
    let mut manifest = RunManifest::new("encode", &cfg, global.seed, inputs);
    let mut timing = Timing::default();
    for p in processed {
        let o = &p.outcome;
        match &o.message {
            None => println!(
                "{}  {} samples of {}  events {}",
                o.sequence_id,
                o.samples.len(),
                o.target.unwrap_or(0),
                o.events
            ),
            Some(m) => eprintln!("{}: {m}", o.sequence_id),
        }
        timing.windows += p.timing.windows;
        timing.events += p.timing.events;
        timing.seconds += p.timing.seconds;
        manifest.sequences.push(p.outcome);
    }
    if timing.windows > 0 {
        manifest.throughput = Some(Throughput {
            path: "fixed_time".into(),
            windows: timing.windows,
            events: timing.events,
            seconds: timing.seconds,
            events_per_second: if timing.seconds > 0.0 { timing.events as f64 / timing.seconds } else { f64::INFINITY },
        });
    }
    manifest.total_ms = millis(started.elapsed());
    manifest.write(&args.out)?;

    if args.verify {
        let report = verify::check_dir(&args.out)?;
        for problem in &report.problems {
            eprintln!("verify: {problem}");
        }
        if !report.problems.is_empty() {
            return Err(invalid(format!("{} problem(s) in written bundles", report.problems.len())));
        }
        println!("verified {} bundles", report.bundles);
    }

    let with = |s: Status| -> Vec<String> {
        manifest
            .sequences
            .iter()
            .filter(|o| o.status == s)
            .map(|o| o.sequence_id.clone())
            .collect()
    };
    let failed = with(Status::Failed);
    if !failed.is_empty() {
        anyhow::bail!("could not process {}", failed.join(", "));
    }
    let bad = with(Status::Invalid);
    if !bad.is_empty() {
        return Err(invalid(format!("invalid input in {}", bad.join(", "))));
    }
    let never = with(Status::NeverSatisfied);
    if !never.is_empty() {
        return Err(Failure::NeverSatisfied(never).into());
    }
    Ok(())
}
