//! Shared fixtures for the benchmarks.

use evpipe_core::metrics::{DetBox, GtBox};
use evpipe_core::{BBox, DefectClass, Event, EventStream, Polarity, SensorGeometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` events at `rate_hz` over the full sensor, with a moving hot patch so
/// the adaptive criterion has something to find.
pub fn stream(n: usize, rate_hz: f64, seed: u64) -> EventStream {
    let g = SensorGeometry::davis346();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1e6 / rate_hz;
    let events = (0..n)
        .map(|i| {
            let t = (i as f64 * dt) as i64;
            let (x, y) = if rng.gen_bool(0.3) {
                let cx = (t / 2000) as u32 % (g.width - 20);
                (cx + rng.gen_range(0..20), 120 + rng.gen_range(0..20))
            } else {
                (rng.gen_range(0..g.width), rng.gen_range(0..g.height))
            };
            let p = if rng.gen_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            Event::new(t, x as u16, y as u16, p)
        })
        .collect();
    EventStream::new(g, events).expect("sorted by construction")
}

/// A split of `images` images with a few ground-truth boxes each and noisy
/// detections around them.
pub fn split(images: u64, seed: u64) -> (Vec<DetBox>, Vec<GtBox>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dets, mut gts) = (Vec::new(), Vec::new());
    for image_id in 0..images {
        for _ in 0..rng.gen_range(1..5) {
            let class = if rng.gen_bool(0.5) { DefectClass::Crack } else { DefectClass::Spalling };
            let bbox = BBox::new(rng.gen_range(0.0..300.0), rng.gen_range(0.0..220.0), 30.0, 30.0);
            gts.push(GtBox { image_id, class, bbox });
            for _ in 0..3 {
                let jitter = BBox::new(bbox.x + rng.gen_range(-8.0..8.0), bbox.y + rng.gen_range(-8.0..8.0), 30.0, 30.0);
                dets.push(DetBox { image_id, class, bbox: jitter, score: rng.gen() });
            }
        }
    }
    (dets, gts)
}
