//! Detection and classification metrics: IoU, NMS, greedy matching,
//! interpolated AP and mAP, F1 and accuracy.
//!
//! Matching and AP follow the COCO evaluation protocol: detections are
//! visited by descending score, each takes the unmatched ground truth with
//! the highest IoU at or above the threshold, and AP is the mean of the
//! precision envelope sampled at 101 recall points. Classes without ground
//! truth are left out of every mean.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{BBox, DefectClass};

pub const NMS_IOU: f64 = 0.4;
pub const CONF_THRESHOLD: f64 = 0.2;
pub const F1_IOU: f64 = 0.5;

/// `[0.5, 0.55, ..., 0.95]`, spaced as `numpy.linspace(0.5, 0.95, 10)`.
pub fn coco_iou_thresholds() -> Vec<f64> {
    linspace(0.5, 0.95, 10)
}

/// `[0, 0.01, ..., 1]`, spaced as `numpy.linspace(0, 1, 101)`.
pub fn recall_thresholds() -> Vec<f64> {
    linspace(0.0, 1.0, 101)
}

fn linspace(start: f64, stop: f64, num: usize) -> Vec<f64> {
    let step = (stop - start) / (num - 1) as f64;
    let mut v: Vec<f64> = (0..num).map(|i| start + i as f64 * step).collect();
    v[num - 1] = stop;
    v
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

/// A ground-truth box on one evaluation image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtBox {
    pub image_id: u64,
    pub class: DefectClass,
    pub bbox: BBox,
}

/// A scored detection on one evaluation image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetBox {
    pub image_id: u64,
    pub class: DefectClass,
    pub bbox: BBox,
    pub score: f64,
}

/// Detection order: descending score, ties by position.
fn score_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Greedy suppression within one group of boxes. Returns kept indices in
/// input order.
pub fn nms_indices(boxes: &[BBox], scores: &[f64], iou_thr: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in score_order(scores) {
        if kept.iter().all(|&k| boxes[k].iou(&boxes[i]) <= iou_thr) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Non-maximum suppression per `(image, class)` group. Survivors keep their
/// input order.
pub fn nms(dets: &[DetBox], iou_thr: f64) -> Vec<DetBox> {
    let mut groups: BTreeMap<(u64, DefectClass), Vec<usize>> = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        groups.entry((d.image_id, d.class)).or_default().push(i);
    }
    let mut keep = vec![false; dets.len()];
    for idx in groups.values() {
        let boxes: Vec<BBox> = idx.iter().map(|&i| dets[i].bbox).collect();
        let scores: Vec<f64> = idx.iter().map(|&i| dets[i].score).collect();
        for k in nms_indices(&boxes, &scores, iou_thr) {
            keep[idx[k]] = true;
        }
    }
    dets.iter()
        .zip(keep)
        .filter_map(|(d, k)| k.then_some(*d))
        .collect()
}

/// Outcome of matching one image's detections of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// Per detection, in input order.
    pub det_tp: Vec<bool>,
    /// Per ground truth, in input order.
    pub gt_matched: Vec<bool>,
    /// Ground truth taken by each detection.
    pub det_gt: Vec<Option<usize>>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Greedy matching of scored boxes to ground truth on a single image and
/// class. Equal IoUs resolve to the later ground truth, as in COCO.
pub fn match_detections(dets: &[(BBox, f64)], gts: &[BBox], iou_thr: f64) -> MatchResult {
    let scores: Vec<f64> = dets.iter().map(|d| d.1).collect();
    let mut gt_matched = vec![false; gts.len()];
    let mut det_gt = vec![None; dets.len()];
    for d in score_order(&scores) {
        let mut best = iou_thr.min(1.0 - 1e-10);
        let mut chosen = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_matched[g] {
                continue;
            }
            let v = dets[d].0.iou(gt);
            if v < best {
                continue;
            }
            best = v;
            chosen = Some(g);
        }
        if let Some(g) = chosen {
            gt_matched[g] = true;
            det_gt[d] = Some(g);
        }
    }
    let det_tp: Vec<bool> = det_gt.iter().map(Option::is_some).collect();
    let tp = det_tp.iter().filter(|&&m| m).count();
    MatchResult {
        tp,
        fp: dets.len() - tp,
        fn_: gts.len() - tp,
        det_tp,
        gt_matched,
        det_gt,
    }
}

/// Per-image, per-class grouping of a split.
struct Split<'a> {
    images: BTreeMap<u64, (Vec<&'a DetBox>, Vec<&'a GtBox>)>,
    n_gt: usize,
}

impl<'a> Split<'a> {
    fn new(dets: &'a [DetBox], gts: &'a [GtBox], class: DefectClass, min_score: f64) -> Self {
        let mut images: BTreeMap<u64, (Vec<&DetBox>, Vec<&GtBox>)> = BTreeMap::new();
        let mut n_gt = 0;
        for g in gts.iter().filter(|g| g.class == class) {
            images.entry(g.image_id).or_default().1.push(g);
            n_gt += 1;
        }
        for d in dets.iter().filter(|d| d.class == class && d.score >= min_score) {
            images.entry(d.image_id).or_default().0.push(d);
        }
        Self { images, n_gt }
    }

    /// `(score, is_tp)` per detection in evaluation order: score descending,
    /// then image id, then score order within the image.
    fn scored_flags(&self, iou_thr: f64) -> Vec<(f64, bool)> {
        let mut all = Vec::new();
        for (dets, gts) in self.images.values() {
            let d: Vec<(BBox, f64)> = dets.iter().map(|d| (d.bbox, d.score)).collect();
            let g: Vec<BBox> = gts.iter().map(|g| g.bbox).collect();
            let m = match_detections(&d, &g, iou_thr);
            let scores: Vec<f64> = d.iter().map(|x| x.1).collect();
            all.extend(score_order(&scores).into_iter().map(|i| (d[i].1, m.det_tp[i])));
        }
        all.sort_by(|a, b| b.0.total_cmp(&a.0));
        all
    }

    fn counts(&self, iou_thr: f64) -> Counts {
        let mut c = Counts::default();
        for (dets, gts) in self.images.values() {
            let d: Vec<(BBox, f64)> = dets.iter().map(|d| (d.bbox, d.score)).collect();
            let g: Vec<BBox> = gts.iter().map(|g| g.bbox).collect();
            let m = match_detections(&d, &g, iou_thr);
            c.tp += m.tp;
            c.fp += m.fp;
            c.fn_ += m.fn_;
        }
        c
    }
}

/// Precision and recall after each detection, given TP flags in evaluation
/// order.
pub fn pr_curve(flags: &[bool], n_gt: usize) -> Vec<(f64, f64)> {
    let mut tp = 0usize;
    flags
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            tp += usize::from(f);
            (tp as f64 / (i + 1) as f64, tp as f64 / n_gt as f64)
        })
        .collect()
}

/// 101-point interpolated AP of a `(precision, recall)` curve whose recall
/// is non-decreasing.
pub fn interpolated_ap(curve: &[(f64, f64)]) -> f64 {
    let mut envelope: Vec<f64> = curve.iter().map(|c| c.0).collect();
    for i in (1..envelope.len()).rev() {
        if envelope[i] > envelope[i - 1] {
            envelope[i - 1] = envelope[i];
        }
    }
    let thresholds = recall_thresholds();
    let sum: f64 = thresholds
        .iter()
        .map(|&r| {
            let i = curve.partition_point(|c| c.1 < r);
            envelope.get(i).copied().unwrap_or(0.0)
        })
        .sum();
    sum / thresholds.len() as f64
}

/// AP of one class over a split, or `None` when the class has no ground
/// truth.
pub fn average_precision(
    dets: &[DetBox],
    gts: &[GtBox],
    class: DefectClass,
    iou_thr: f64,
) -> Option<f64> {
    let split = Split::new(dets, gts, class, f64::NEG_INFINITY);
    class_ap(&split, iou_thr)
}

fn class_ap(split: &Split<'_>, iou_thr: f64) -> Option<f64> {
    if split.n_gt == 0 {
        return None;
    }
    let flags: Vec<bool> = split.scored_flags(iou_thr).into_iter().map(|f| f.1).collect();
    Some(interpolated_ap(&pr_curve(&flags, split.n_gt)))
}

/// Mean over thresholds of one class's AP.
fn class_map(split: &Split<'_>, thresholds: &[f64]) -> Option<f64> {
    let aps: Option<Vec<f64>> = thresholds.iter().map(|&t| class_ap(split, t)).collect();
    aps.map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Mean over classes of the mean-over-thresholds AP. `None` when no class
/// has ground truth.
pub fn map_at(dets: &[DetBox], gts: &[GtBox], thresholds: &[f64]) -> Option<f64> {
    assert!(!thresholds.is_empty(), "at least one IoU threshold is required");
    mean(DefectClass::ALL.iter().filter_map(|&c| {
        class_map(&Split::new(dets, gts, c, f64::NEG_INFINITY), thresholds)
    }))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall, zero when both are zero.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Pooled TP/FP/FN at IoU 0.5 over all classes and images, no score filter.
pub fn f1_at_iou50(dets: &[DetBox], gts: &[GtBox]) -> f64 {
    let mut c = Counts::default();
    for class in DefectClass::ALL {
        let k = Split::new(dets, gts, class, f64::NEG_INFINITY).counts(F1_IOU);
        c.tp += k.tp;
        c.fp += k.fp;
        c.fn_ += k.fn_;
    }
    c.f1()
}

/// Fraction of predicted labels equal to the truth; `None` for empty or
/// mismatched inputs.
pub fn accuracy<T: PartialEq>(preds: &[T], truth: &[T]) -> Option<f64> {
    if preds.is_empty() || preds.len() != truth.len() {
        return None;
    }
    let correct = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Some(correct as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Detections scoring below this are dropped before F1, precision and
    /// recall. AP always uses every detection.
    pub conf_thr: f64,
    /// Per-class NMS IoU applied before evaluation; `None` disables it.
    pub nms_iou: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            conf_thr: CONF_THRESHOLD,
            nms_iou: Some(NMS_IOU),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: DefectClass,
    pub n_gt: usize,
    pub n_det: usize,
    pub ap50: f64,
    pub ap50_95: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub ap50: f64,
    pub ap50_95: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub n_images: usize,
    /// Classes with at least one ground-truth box.
    pub classes: Vec<ClassMetrics>,
    /// Unweighted mean over `classes`; `None` when there is no ground truth.
    pub all: Option<Aggregate>,
}

pub fn evaluate(dets: &[DetBox], gts: &[GtBox], cfg: &EvalConfig) -> EvalReport {
    let dets = match cfg.nms_iou {
        Some(t) => nms(dets, t),
        None => dets.to_vec(),
    };
    let thresholds = coco_iou_thresholds();
    let mut classes = Vec::new();
    for class in DefectClass::ALL {
        let split = Split::new(&dets, gts, class, f64::NEG_INFINITY);
        let Some(ap50) = class_ap(&split, F1_IOU) else { continue };
        let ap50_95 = class_map(&split, &thresholds).unwrap_or(0.0);
        let counts = Split::new(&dets, gts, class, cfg.conf_thr).counts(F1_IOU);
        classes.push(ClassMetrics {
            class,
            n_gt: split.n_gt,
            n_det: dets.iter().filter(|d| d.class == class).count(),
            ap50,
            ap50_95,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
        });
    }
    let avg = |f: fn(&ClassMetrics) -> f64| mean(classes.iter().map(f));
    let all = avg(|c| c.ap50).map(|ap50| Aggregate {
        ap50,
        ap50_95: avg(|c| c.ap50_95).unwrap_or(0.0),
        precision: avg(|c| c.precision).unwrap_or(0.0),
        recall: avg(|c| c.recall).unwrap_or(0.0),
        f1: avg(|c| c.f1).unwrap_or(0.0),
    });
    let images: BTreeSet<u64> = gts
        .iter()
        .map(|g| g.image_id)
        .chain(dets.iter().map(|d| d.image_id))
        .collect();
    EvalReport {
        config: *cfg,
        n_images: images.len(),
        classes,
        all,
    }
}

impl EvalReport {
    /// Aligned text table with one row per metric and one column per class,
    /// "All" first.
    pub fn table(&self) -> String {
        let mut header = vec!["All".to_string()];
        header.extend(self.classes.iter().map(|c| c.class.name().to_string()));
        let rows: [(&str, fn(&Aggregate) -> f64, fn(&ClassMetrics) -> f64); 5] = [
            ("mAP@0.5", |a| a.ap50, |c| c.ap50),
            ("mAP@[0.5:0.95]", |a| a.ap50_95, |c| c.ap50_95),
            ("F1@0.5", |a| a.f1, |c| c.f1),
            ("Precision", |a| a.precision, |c| c.precision),
            ("Recall", |a| a.recall, |c| c.recall),
        ];
        let mut out = String::new();
        let _ = write!(out, "{:<16}", "Metric");
        for h in &header {
            let _ = write!(out, "{h:>10}");
        }
        out.push('\n');
        for (name, agg, per) in rows {
            let _ = write!(out, "{name:<16}");
            match &self.all {
                Some(a) => {
                    let _ = write!(out, "{:>10.4}", agg(a));
                }
                None => {
                    let _ = write!(out, "{:>10}", "-");
                }
            }
            for c in &self.classes {
                let _ = write!(out, "{:>10.4}", per(c));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    image_id: u64,
    class_id: i64,
    bbox: [f64; 4],
    #[serde(default)]
    score: Option<f64>,
}

fn parse_records(text: &str) -> Result<Vec<(usize, Record)>, RecordError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<Record>(l)
                .map(|r| (i + 1, r))
                .map_err(|e| RecordError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

fn class_of(line: usize, id: i64) -> Result<DefectClass, RecordError> {
    DefectClass::from_id(id).ok_or(RecordError::Parse {
        line,
        message: format!("unknown class_id {id}"),
    })
}

/// One `{image_id, class_id, bbox: [x, y, w, h], score}` object per line.
pub fn parse_detections(text: &str) -> Result<Vec<DetBox>, RecordError> {
    parse_records(text)?
        .into_iter()
        .map(|(line, r)| {
            let score = r.score.ok_or(RecordError::Parse {
                line,
                message: "missing score".into(),
            })?;
            if !(0.0..=1.0).contains(&score) {
                return Err(RecordError::Parse {
                    line,
                    message: format!("score {score} outside [0, 1]"),
                });
            }
            Ok(DetBox {
                image_id: r.image_id,
                class: class_of(line, r.class_id)?,
                bbox: BBox::new(r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3]),
                score,
            })
        })
        .collect()
}

/// Same shape as detections; a `score` field is accepted and ignored.
pub fn parse_ground_truth(text: &str) -> Result<Vec<GtBox>, RecordError> {
    parse_records(text)?
        .into_iter()
        .map(|(line, r)| {
            Ok(GtBox {
                image_id: r.image_id,
                class: class_of(line, r.class_id)?,
                bbox: BBox::new(r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3]),
            })
        })
        .collect()
}

pub fn detection_line(d: &DetBox) -> String {
    serde_json::json!({
        "image_id": d.image_id,
        "class_id": d.class.id(),
        "bbox": [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
        "score": d.score,
    })
    .to_string()
}

pub fn ground_truth_line(g: &GtBox) -> String {
    serde_json::json!({
        "image_id": g.image_id,
        "class_id": g.class.id(),
        "bbox": [g.bbox.x, g.bbox.y, g.bbox.w, g.bbox.h],
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CRACK: DefectClass = DefectClass::Crack;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h)
    }

    fn gt(image_id: u64, class: DefectClass, bbox: BBox) -> GtBox {
        GtBox { image_id, class, bbox }
    }

    fn det(image_id: u64, class: DefectClass, bbox: BBox, score: f64) -> DetBox {
        DetBox { image_id, class, bbox, score }
    }

    #[test]
    fn iou_spot_values() {
        assert_eq!(iou(&b(0.0, 0.0, 10.0, 10.0), &b(0.0, 0.0, 10.0, 10.0)), 1.0);
        assert_eq!(iou(&b(0.0, 0.0, 10.0, 10.0), &b(20.0, 0.0, 5.0, 5.0)), 0.0);
        assert_eq!(iou(&b(0.0, 0.0, 10.0, 10.0), &b(5.0, 0.0, 10.0, 10.0)), 1.0 / 3.0);
    }

    #[test]
    fn thresholds_match_numpy_linspace() {
        let t = coco_iou_thresholds();
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], 0.5);
        assert_eq!(t[9], 0.95);
        assert_eq!(t[1], 0.55);
        let r = recall_thresholds();
        assert_eq!((r.len(), r[50], r[100]), (101, 0.5, 1.0));
    }

    #[test]
    fn nms_keeps_best_of_duplicates() {
        let d = [
            det(0, CRACK, b(0.0, 0.0, 10.0, 10.0), 0.8),
            det(0, CRACK, b(0.0, 0.0, 10.0, 10.0), 0.9),
            det(0, CRACK, b(50.0, 50.0, 10.0, 10.0), 0.1),
            det(0, DefectClass::Spalling, b(0.0, 0.0, 10.0, 10.0), 0.3),
        ];
        let kept = nms(&d, NMS_IOU);
        assert_eq!(kept, vec![d[1], d[2], d[3]]);
        assert_eq!(nms(&kept, NMS_IOU), kept);
    }

    #[test]
    fn nms_threshold_is_strict() {
        // IoU exactly 0.4 survives.
        let boxes = [b(0.0, 0.0, 10.0, 10.0), b(0.0, 0.0, 10.0, 4.0)];
        assert_eq!(nms_indices(&boxes, &[0.9, 0.8], 0.4), vec![0, 1]);
        assert_eq!(nms_indices(&boxes, &[0.9, 0.8], 0.39), vec![0]);
    }

    #[test]
    fn double_match_is_false_positive() {
        let g = [b(0.0, 0.0, 10.0, 10.0)];
        let m = match_detections(&[(g[0], 0.9), (g[0], 0.8)], &g, 0.5);
        assert_eq!((m.tp, m.fp, m.fn_), (1, 1, 0));
        assert_eq!(m.det_tp, vec![true, false]);
    }

    #[test]
    fn equal_iou_goes_to_later_ground_truth() {
        let g = [b(0.0, 0.0, 10.0, 10.0), b(0.0, 0.0, 10.0, 10.0)];
        let m = match_detections(&[(g[0], 0.9)], &g, 0.5);
        assert_eq!(m.det_gt, vec![Some(1)]);
    }

    #[test]
    fn worked_three_detection_case() {
        let g1 = b(0.0, 0.0, 10.0, 10.0);
        let g2 = b(100.0, 100.0, 10.0, 10.0);
        let gts = [gt(0, CRACK, g1), gt(0, CRACK, g2)];
        let dets = [
            det(0, CRACK, g1, 0.9),
            det(0, CRACK, b(200.0, 0.0, 5.0, 5.0), 0.8),
            det(0, CRACK, g2, 0.7),
        ];
        let ap = average_precision(&dets, &gts, CRACK, 0.5).unwrap();
        let expected = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
        assert!((ap - expected).abs() < 1e-12, "{ap} vs {expected}");
    }

    #[test]
    fn ap_edge_cases() {
        let g = b(0.0, 0.0, 10.0, 10.0);
        let gts = [gt(0, CRACK, g)];
        assert_eq!(average_precision(&[det(0, CRACK, g, 0.5)], &gts, CRACK, 0.5), Some(1.0));
        assert_eq!(average_precision(&[], &gts, CRACK, 0.5), Some(0.0));
        assert_eq!(average_precision(&[], &gts, DefectClass::Spalling, 0.5), None);
    }

    #[test]
    fn map_means_over_classes() {
        let g = b(0.0, 0.0, 10.0, 10.0);
        let gts = [gt(0, CRACK, g), gt(0, DefectClass::Spalling, g)];
        let dets = [det(0, CRACK, g, 0.9)];
        assert_eq!(map_at(&dets, &gts, &[0.5]), Some(0.5));
        assert_eq!(map_at(&dets, &gts, &coco_iou_thresholds()), Some(0.5));
    }

    #[test]
    fn f1_and_accuracy_spot_values() {
        let c = Counts { tp: 2, fp: 1, fn_: 1 };
        assert_eq!(c.f1(), 2.0 / 3.0);
        assert_eq!(Counts::default().f1(), 0.0);
        let truth = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let mut preds = truth;
        preds[0] = 1;
        preds[1] = 0;
        assert_eq!(accuracy(&preds, &truth), Some(0.8));
        assert_eq!(accuracy::<u8>(&[], &[]), None);
    }

    #[test]
    fn confidence_filter_only_affects_f1() {
        let g = b(0.0, 0.0, 10.0, 10.0);
        let gts = [gt(0, CRACK, g)];
        let dets = [det(0, CRACK, g, 0.1)];
        let r = evaluate(&dets, &gts, &EvalConfig::default());
        let all = r.all.unwrap();
        assert_eq!(all.ap50, 1.0);
        assert_eq!(all.f1, 0.0);
        assert!(r.table().contains("mAP@0.5"));
    }

    #[test]
    fn record_parsing() {
        let text = "{\"image_id\":3,\"class_id\":1,\"bbox\":[1,2,3,4],\"score\":0.5}\n\n";
        let d = parse_detections(text).unwrap();
        assert_eq!(d, vec![det(3, DefectClass::Spalling, b(1.0, 2.0, 3.0, 4.0), 0.5)]);
        assert_eq!(parse_detections(&detection_line(&d[0])).unwrap(), d);
        assert!(parse_detections("{\"image_id\":3,\"class_id\":7,\"bbox\":[1,2,3,4],\"score\":0.5}").is_err());
        let g = parse_ground_truth("{\"image_id\":3,\"class_id\":0,\"bbox\":[1,2,3,4]}").unwrap();
        assert_eq!(g[0].class, CRACK);
    }
}
