use std::path::{Path, PathBuf};

use anyhow::Context;
use evpipe_core::io::{read_labels, read_sample_bundle};
use evpipe_core::metrics::{evaluate, parse_detections, parse_ground_truth, GtBox};
use evpipe_core::association::SampleBundle;

use crate::args::{EvalArgs, Global};
use crate::failure::invalid;
use crate::settings;

fn has_ext(p: &Path, ext: &str) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn bundle_boxes(b: &SampleBundle) -> impl Iterator<Item = GtBox> + '_ {
    b.annotations.iter().map(|a| GtBox { image_id: b.image_id, class: a.class, bbox: a.bbox })
}

fn collect_bundles(dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let entries = std::fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))?;
    for entry in entries {
        let p = entry?.path();
        if p.is_dir() {
            collect_bundles(&p, out)?;
        } else if has_ext(&p, "npz") {
            out.push(p);
        }
    }
    Ok(())
}

/// Ground-truth boxes from any of the supported sources.
pub fn load_ground_truth(path: &Path) -> anyhow::Result<Vec<GtBox>> {
    if path.is_dir() {
        let mut files = Vec::new();
        collect_bundles(path, &mut files)?;
        if files.is_empty() {
            return Err(invalid(format!("no .npz bundles under {}", path.display())));
        }
        files.sort();
        let mut gts = Vec::new();
        for f in files {
            let b = read_sample_bundle(&f).with_context(|| format!("cannot read {}", f.display()))?;
            gts.extend(bundle_boxes(&b));
        }
        return Ok(gts);
    }
    if has_ext(path, "npz") {
        let b = read_sample_bundle(path).with_context(|| format!("cannot read {}", path.display()))?;
        return Ok(bundle_boxes(&b).collect());
    }
    if has_ext(path, "npy") {
        let anns = read_labels(path).with_context(|| format!("cannot read {}", path.display()))?;
        return anns
            .iter()
            .map(|a| {
                let image_id = u64::try_from(a.t)
                    .map_err(|_| invalid(format!("negative label timestamp {} in {}", a.t, path.display())))?;
                Ok(GtBox { image_id, class: a.class, bbox: a.bbox })
            })
            .collect();
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_ground_truth(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn run(global: &Global, args: &EvalArgs) -> anyhow::Result<()> {
    let mut cfg = settings::load(global)?;
    if let Some(c) = args.conf_thr {
        cfg.eval.conf_thr = c;
    }
    if let Some(n) = args.nms_iou {
        cfg.eval.nms_iou = n;
    }
    let e = cfg.eval;
    if !(0.0..=1.0).contains(&e.conf_thr) || e.nms_iou.is_some_and(|t| !(0.0..=1.0).contains(&t)) {
        return Err(invalid("thresholds must lie in [0, 1]"));
    }
    let gts = load_ground_truth(&args.gt)?;
    let text = std::fs::read_to_string(&args.det).with_context(|| format!("cannot read {}", args.det.display()))?;
    let dets = parse_detections(&text).map_err(|e| invalid(format!("{}: {e}", args.det.display())))?;
    let report = evaluate(&dets, &gts, &cfg.eval);
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &args.out {
        std::fs::write(out, format!("{json}\n")).with_context(|| format!("cannot write {}", out.display()))?;
    }
    if args.json {
        println!("{json}");
    } else {
        print!("{}", report.table());
    }
    Ok(())
}
