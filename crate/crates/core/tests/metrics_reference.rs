//! AP values frozen from the COCO reference evaluator on 40 random splits
//! with tied scores, several images and both classes.

use evpipe_core::metrics::{average_precision, coco_iou_thresholds, map_at, parse_detections, parse_ground_truth};
use evpipe_core::DefectClass;
use serde_json::Value;

fn lines(items: &Value) -> String {
    items
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.to_string() + "\n")
        .collect()
}

#[test]
fn ap_matches_reference_evaluator() {
    let text = include_str!("fixtures/coco_reference.json");
    let doc: Value = serde_json::from_str(text).unwrap();
    let thresholds = coco_iou_thresholds();
    let mut checked = 0;
    for (i, case) in doc["cases"].as_array().unwrap().iter().enumerate() {
        let gts = parse_ground_truth(&lines(&case["gts"])).unwrap();
        let dets = parse_detections(&lines(&case["dets"])).unwrap();
        let mut class_means = Vec::new();
        for class in DefectClass::ALL {
            let expected = &case["expected"][class.id().to_string()];
            if expected.is_null() {
                assert_eq!(average_precision(&dets, &gts, class, 0.5), None, "case {i}");
                continue;
            }
            for (k, &t) in thresholds.iter().enumerate() {
                let got = average_precision(&dets, &gts, class, t).unwrap();
                let want = expected["ap_per_threshold"][k].as_f64().unwrap();
                assert!((got - want).abs() < 1e-9, "case {i} {class} t={t}: {got} vs {want}");
                checked += 1;
            }
            class_means.push(expected["ap50_95"].as_f64().unwrap());
        }
        let got = map_at(&dets, &gts, &thresholds);
        if class_means.is_empty() {
            assert_eq!(got, None);
        } else {
            let want = class_means.iter().sum::<f64>() / class_means.len() as f64;
            assert!((got.unwrap() - want).abs() < 1e-9, "case {i}");
        }
    }
    assert!(checked > 300, "only {checked} AP values compared");
}
