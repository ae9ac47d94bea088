use evpipe_core::io::{read_sequence, write_sequence};
use evpipe_core::model::{validate_sequence, CornerConvention};
use evpipe_core::synthgen::{log_intensity, render_scene, simulate_dvs, DvsSimulator, Region, SceneConfig};
use evpipe_core::SensorGeometry;
use proptest::prelude::*;

fn walk() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, f64)> {
    (
        prop::collection::vec(0.0f64..300.0, 6),
        prop::collection::vec(prop::collection::vec(0.0f64..300.0, 6), 1..60),
        0.05f64..1.0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Each call fires floor(|delta| / C) events and keeps the remainder.
    #[test]
    fn single_step_fires_whole_crossings((i0, steps, c) in walk()) {
        let g = SensorGeometry::new(3, 2).unwrap();
        let mut residual = vec![0.0; 6];
        let mut prev = i0;
        let mut t = 0;
        for next in steps {
            let carried = residual.clone();
            let events = simulate_dvs(&prev, &next, g, t, t + 1000, c, &mut residual);
            prop_assert!(events.windows(2).all(|w| (w[0].t, w[0].y, w[0].x) <= (w[1].t, w[1].y, w[1].x)));
            let mut signed = [0i64; 6];
            for e in &events {
                prop_assert!(e.t > t && e.t <= t + 1000);
                signed[usize::from(e.y) * 3 + usize::from(e.x)] += e.p.sign();
            }
            for i in 0..6 {
                let delta = log_intensity(next[i]) - log_intensity(prev[i]) + carried[i];
                prop_assert_eq!(signed[i].unsigned_abs(), (delta.abs() / c).floor() as u64);
                prop_assert!(residual[i].abs() < c);
                prop_assert!((c * signed[i] as f64 + residual[i] - delta).abs() < 1e-9);
            }
            prev = next;
            t += 1000;
        }
    }

    /// Signed event count times C tracks the total log change within C.
    #[test]
    fn integrator_stays_within_one_threshold((i0, steps, c) in walk()) {
        let g = SensorGeometry::new(3, 2).unwrap();
        let mut sim = DvsSimulator::new(g, c, |x, y| i0[(y * 3 + x) as usize]);
        let full = Region { x0: 0, y0: 0, x1: 3, y1: 2 };
        let mut signed = [0i64; 6];
        let mut t = 0;
        for next in steps {
            let mut events = Vec::new();
            sim.advance(full, |x, y| next[(y * 3 + x) as usize], t, t + 1000, &mut events);
            for e in &events {
                prop_assert!(e.t > t && e.t <= t + 1000);
                signed[usize::from(e.y) * 3 + usize::from(e.x)] += e.p.sign();
            }
            prop_assert_eq!(&signed[..], sim.net_events());
            for i in 0..6 {
                let total = log_intensity(next[i]) - log_intensity(i0[i]);
                prop_assert!((c * signed[i] as f64 - total).abs() < c, "pixel {}", i);
            }
            t += 1000;
        }
    }
}

#[test]
fn generated_sequences_validate_and_round_trip() {
    let cfg = SceneConfig {
        sequences: 4,
        duration_s: 0.4,
        noise_rate_hz: 0.2,
        kinds: vec!["crack_polyline".into(), "spalling_blob".into(), "bar".into(), "checker".into()],
        ..SceneConfig::default()
    };
    for i in 0..cfg.sequences {
        let seq = render_scene(&cfg, i, 77).unwrap();
        let report = validate_sequence(&seq, CornerConvention::TopLeft);
        assert!(report.is_valid(), "{:?}", report.violations);
        let dir = tempfile::tempdir().unwrap();
        write_sequence(&seq, dir.path()).unwrap();
        assert_eq!(read_sequence(dir.path()).unwrap(), seq);
    }
}
