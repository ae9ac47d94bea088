use std::collections::BTreeSet;
use std::path::Path;

use evpipe_core::association::{annotations_for_window, nearest_frame, verify_bundle};
use evpipe_core::io::{read_sample_bundle, read_sequence};
use serde::Serialize;

use crate::args::{Global, VerifyArgs};
use crate::encode::to_top_left;
use crate::failure::invalid;
use crate::manifest::{RunManifest, SequenceOutcome, Status};
use crate::settings;

#[derive(Debug, Default, Serialize)]
pub struct Report {
    pub sequences: usize,
    pub bundles: usize,
    pub problems: Vec<String>,
}

/// Re-reads every bundle listed in an encode manifest and checks it
/// against its source sequence.
pub fn check_dir(dir: &Path) -> anyhow::Result<Report> {
    let m = RunManifest::read(dir)?;
    let mut r = Report::default();
    if m.command != "encode" {
        r.problems.push(format!("manifest is from `{}`, not `encode`", m.command));
    }
    if settings::config_hash(&m.config) != m.config_hash {
        r.problems.push("config hash does not match the recorded config".into());
    }
    let mut ids = BTreeSet::new();
    let mut image_ids = BTreeSet::new();
    for s in &m.sequences {
        if !ids.insert(s.sequence_id.as_str()) {
            r.problems.push(format!("{} listed twice", s.sequence_id));
        }
        for rec in &s.samples {
            if !image_ids.insert(rec.image_id) {
                r.problems.push(format!("image id {} used twice", rec.image_id));
            }
        }
        if s.status == Status::Ok {
            r.sequences += 1;
            check_sequence(dir, &m, s, &mut r);
        } else if !s.samples.is_empty() {
            r.problems.push(format!("{} failed but lists samples", s.sequence_id));
        }
    }
    Ok(r)
}

fn check_sequence(dir: &Path, m: &RunManifest, s: &SequenceOutcome, r: &mut Report) {
    let id = &s.sequence_id;
    let mut seq = match read_sequence(Path::new(&s.path)) {
        Ok(seq) => seq,
        Err(e) => {
            r.problems.push(format!("{id}: cannot re-read {}: {e}", s.path));
            return;
        }
    };
    to_top_left(&mut seq, m.config.io.corner);
    let enc = m.config.encoder_for(id).resolved();
    for rec in &s.samples {
        r.bundles += 1;
        let b = match read_sample_bundle(&dir.join(&rec.file)) {
            Ok(b) => b,
            Err(e) => {
                r.problems.push(format!("{}: {e}", rec.file));
                continue;
            }
        };
        let mut problems = verify_bundle(&b, &seq.events);
        if b.sequence_id != *id || b.image_id != rec.image_id {
            problems.push(format!("identity {}#{} != manifest {id}#{}", b.sequence_id, b.image_id, rec.image_id));
        }
        if b.window != rec.window {
            problems.push("window differs from the manifest".into());
        }
        if b.encoder != enc {
            problems.push("encoder settings differ from the run config".into());
        }
        match &b.histogram.provenance {
            Some(p) if [p.start, p.end] == rec.range && p.anchor == rec.anchor => {
                let anchor_t = p.anchor.and_then(|a| seq.events.events().get(a)).map(|e| e.t);
                let want_frame = anchor_t.and_then(|t| nearest_frame(&seq.frames, t, enc.half_window_us()));
                if want_frame.map(|f| f.t) != b.frame_t {
                    problems.push(format!("frame time {:?}, expected {:?}", b.frame_t, want_frame.map(|f| f.t)));
                } else if want_frame.map(|f| m.config.prep.prepare_frame(f)) != b.frame {
                    problems.push("frame pixels differ from the prepared source frame".into());
                }
            }
            _ => problems.push("provenance differs from the manifest".into()),
        }
        let anns = annotations_for_window(&seq.annotations, b.window);
        if anns != b.annotations {
            problems.push(format!("{} annotations, source window has {}", b.annotations.len(), anns.len()));
        }
        r.problems.extend(problems.into_iter().map(|p| format!("{}: {p}", rec.file)));
    }
}

pub fn run(_global: &Global, args: &VerifyArgs) -> anyhow::Result<()> {
    let report = check_dir(&args.dir)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !report.problems.is_empty() {
        return Err(invalid(format!("{} problem(s) found", report.problems.len())));
    }
    Ok(())
}
