mod oracles;

use evpipe_core::metrics::{
    average_precision, coco_iou_thresholds, map_at, match_detections, nms, nms_indices, DetBox,
    GtBox,
};
use evpipe_core::{BBox, DefectClass};
use proptest::prelude::*;

fn bbox() -> impl Strategy<Value = BBox> {
    // Coarse coordinates so overlaps, ties and exact thresholds all occur.
    (0u8..12, 0u8..12, 1u8..8, 1u8..8)
        .prop_map(|(x, y, w, h)| BBox::new(f64::from(x) * 2.0, f64::from(y) * 2.0, f64::from(w) * 2.0, f64::from(h) * 2.0))
}

fn score() -> impl Strategy<Value = f64> {
    (0u8..=10).prop_map(|s| f64::from(s) / 10.0)
}

fn scored() -> impl Strategy<Value = Vec<(BBox, f64)>> {
    prop::collection::vec((bbox(), score()), 0..=6)
}

/// A small split: up to 6 boxes per side over two images and two classes.
fn split() -> impl Strategy<Value = (Vec<DetBox>, Vec<GtBox>)> {
    let class = prop_oneof![Just(DefectClass::Crack), Just(DefectClass::Spalling)];
    (
        prop::collection::vec((0u64..2, class.clone(), bbox(), score()), 0..=6),
        prop::collection::vec((0u64..2, class, bbox()), 0..=6),
    )
        .prop_map(|(d, g)| {
            (
                d.into_iter()
                    .map(|(image_id, class, bbox, score)| DetBox { image_id, class, bbox, score })
                    .collect(),
                g.into_iter()
                    .map(|(image_id, class, bbox)| GtBox { image_id, class, bbox })
                    .collect(),
            )
        })
}

fn single(dets: &[(BBox, f64)]) -> Vec<DetBox> {
    dets.iter()
        .map(|&(bbox, score)| DetBox { image_id: 0, class: DefectClass::Crack, bbox, score })
        .collect()
}

fn gts_single(gts: &[BBox]) -> Vec<GtBox> {
    gts.iter()
        .map(|&bbox| GtBox { image_id: 0, class: DefectClass::Crack, bbox })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn iou_matches_pixel_counting(a in (0i32..10, 0i32..10, 1i32..8, 1i32..8), b in (0i32..10, 0i32..10, 1i32..8, 1i32..8)) {
        let f = |r: (i32, i32, i32, i32)| BBox::new(r.0.into(), r.1.into(), r.2.into(), r.3.into());
        prop_assert_eq!(f(a).iou(&f(b)), oracles::pixel_iou(a, b));
    }

    #[test]
    fn matching_equals_greedy_oracle(dets in scored(), gts in prop::collection::vec(bbox(), 0..=6), t in 0usize..10) {
        let thr = coco_iou_thresholds()[t];
        let m = match_detections(&dets, &gts, thr);
        prop_assert_eq!(&m.det_gt, &oracles::greedy_match(&dets, &gts, thr));
        prop_assert_eq!(m.tp + m.fp, dets.len());
        prop_assert_eq!(m.tp + m.fn_, gts.len());
        prop_assert!(m.tp <= gts.len());
    }

    #[test]
    fn nms_equals_exhaustive_suppression(dets in scored(), thr in prop_oneof![Just(0.4), 0.0f64..1.0]) {
        let boxes: Vec<BBox> = dets.iter().map(|d| d.0).collect();
        let scores: Vec<f64> = dets.iter().map(|d| d.1).collect();
        prop_assert_eq!(nms_indices(&boxes, &scores, thr), oracles::nms(&boxes, &scores, thr));
        let all = single(&dets);
        let once = nms(&all, thr);
        prop_assert!(once.iter().all(|d| all.contains(d)));
        prop_assert_eq!(nms(&once, thr), once);
    }

    #[test]
    fn ap_equals_enumeration_oracle(dets in scored(), gts in prop::collection::vec(bbox(), 0..=6), t in 0usize..10) {
        let thr = coco_iou_thresholds()[t];
        let got = average_precision(&single(&dets), &gts_single(&gts), DefectClass::Crack, thr);
        let want = oracles::ap_single(&dets, &gts, thr);
        match (got, want) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn ap_ignores_monotone_rescaling((dets, gts) in split(), k in 0usize..3) {
        let f = [|s: f64| s / 2.0, |s: f64| s * s, |s: f64| (s + 1.0).ln() / 2f64.ln()][k];
        let rescaled: Vec<DetBox> = dets.iter().map(|d| DetBox { score: f(d.score), ..*d }).collect();
        for t in coco_iou_thresholds() {
            for c in DefectClass::ALL {
                prop_assert_eq!(average_precision(&dets, &gts, c, t), average_precision(&rescaled, &gts, c, t));
            }
        }
    }

    #[test]
    fn stricter_thresholds_never_raise_ap((dets, gts) in split()) {
        let thresholds = coco_iou_thresholds();
        for c in DefectClass::ALL {
            let aps: Vec<Option<f64>> = thresholds.iter().map(|&t| average_precision(&dets, &gts, c, t)).collect();
            for w in aps.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    prop_assert!(b <= a + 1e-12, "AP rose from {} to {}", a, b);
                }
            }
        }
        let (m50, m) = (map_at(&dets, &gts, &[0.5]), map_at(&dets, &gts, &thresholds));
        if let (Some(a), Some(b)) = (m50, m) {
            prop_assert!(b <= a + 1e-12);
        }
    }
}
