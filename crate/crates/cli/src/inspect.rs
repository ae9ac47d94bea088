use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use evpipe_core::io::read_sequence;
use evpipe_core::model::validate_sequence;
use evpipe_core::{Annotation, DefectClass, Polarity, SequenceRecording, TimeWindow};
use serde::Serialize;

use crate::args::{Global, InspectArgs};
use crate::failure::invalid;
use crate::settings;

#[derive(Debug, Serialize)]
pub struct Summary {
    pub path: String,
    pub width: u32,
    pub height: u32,
    pub events: usize,
    pub positive: usize,
    pub negative: usize,
    pub span: Option<TimeWindow>,
    pub duration_us: i64,
    pub frames: usize,
    pub frame_rate_hz: Option<f64>,
    pub annotations: BTreeMap<String, usize>,
    pub frame_annotations: Option<BTreeMap<String, usize>>,
    pub violations: Vec<String>,
}

fn per_class(anns: &[Annotation]) -> BTreeMap<String, usize> {
    DefectClass::ALL
        .iter()
        .map(|&c| (c.name().to_string(), anns.iter().filter(|a| a.class == c).count()))
        .collect()
}

pub fn summarize(path: &Path, seq: &SequenceRecording, violations: Vec<String>) -> Summary {
    let events = seq.events.events();
    let positive = events.iter().filter(|e| e.p == Polarity::Positive).count();
    let span = seq.events.span();
    let frame_rate_hz = match seq.frames.as_slice() {
        [first, .., last] if last.t > first.t => {
            Some((seq.frames.len() - 1) as f64 * 1e6 / (last.t - first.t) as f64)
        }
        _ => None,
    };
    Summary {
        path: path.display().to_string(),
        width: seq.geometry.width,
        height: seq.geometry.height,
        events: events.len(),
        positive,
        negative: events.len() - positive,
        span,
        duration_us: span.map_or(0, |w| w.duration()),
        frames: seq.frames.len(),
        frame_rate_hz,
        annotations: per_class(&seq.annotations),
        frame_annotations: seq.frame_annotations.as_deref().map(per_class),
        violations,
    }
}

fn counts(m: &BTreeMap<String, usize>) -> String {
    m.iter().map(|(k, v)| format!("{k} {v}")).collect::<Vec<_>>().join(", ")
}

fn print_text(s: &Summary) {
    println!("{:<18}{}", "sequence", s.path);
    println!("{:<18}{}x{}", "sensor", s.width, s.height);
    println!("{:<18}{} (+{} / -{})", "events", s.events, s.positive, s.negative);
    match s.span {
        Some(w) => println!(
            "{:<18}{:.6} s [{} .. {} us]",
            "duration",
            s.duration_us as f64 / 1e6,
            w.t_min,
            w.t_max
        ),
        None => println!("{:<18}-", "duration"),
    }
    match s.frame_rate_hz {
        Some(r) => println!("{:<18}{} at {r:.3} Hz", "frames", s.frames),
        None => println!("{:<18}{}", "frames", s.frames),
    }
    println!("{:<18}{}", "annotations", counts(&s.annotations));
    if let Some(f) = &s.frame_annotations {
        println!("{:<18}{}", "frame annotations", counts(f));
    }
    if s.violations.is_empty() {
        println!("{:<18}none", "violations");
    } else {
        println!("{:<18}{}", "violations", s.violations.len());
        for v in &s.violations {
            println!("  {v}");
        }
    }
}

pub fn run(global: &Global, args: &InspectArgs) -> anyhow::Result<()> {
    let cfg = settings::load(global)?;
    let seq = read_sequence(&args.dir).with_context(|| format!("cannot read {}", args.dir.display()))?;
    let report = validate_sequence(&seq, cfg.io.corner);
    let violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    let summary = summarize(&args.dir, &seq, violations);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        print_text(&summary);
    }
    if !summary.violations.is_empty() {
        return Err(invalid(format!(
            "{} has {} schema violation(s)",
            args.dir.display(),
            summary.violations.len()
        )));
    }
    Ok(())
}
