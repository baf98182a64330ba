//! Long-run numerical health of the tracking filter.

use isac_core::channel::Direction;
use isac_core::config::{SystemConfig, Terminal};
use isac_core::tracking::{is_spd, Measurement, Track, TrackConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn covariance_stays_positive_definite() {
    let cfg = SystemConfig::default();
    for (term, full) in [(Terminal::Active, true), (Terminal::Passive, true), (Terminal::Passive, false)] {
        let tc = TrackConfig::for_terminal(&cfg, term);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = |rng: &mut ChaCha8Rng, d: f64| Measurement {
            distance: d + rng.gen_range(-0.1..0.1),
            velocity: rng.gen_range(-tc.velocity_span / 2.0..tc.velocity_span / 2.0),
            departure: Direction::default(),
            arrival: Direction::default(),
            amplitude: 1.0,
        };
        let mut track = Track::new(0, &z(&mut rng, 20.0), full, 0, &tc);
        for frame in 1..=100_000 {
            // Intervals span one frame to long gaps.
            let dt = 10f64.powf(rng.gen_range(-3.0..0.0));
            track.predict(dt, &tc);
            assert!(is_spd(&track.p), "predict, frame {frame}: {:?}", track.p);
            let d = track.x[0];
            track.update(&z(&mut rng, d), frame, &tc);
            assert!(is_spd(&track.p), "update, frame {frame}: {:?}", track.p);
            assert!(track.x.iter().all(|v| v.is_finite()));
        }
    }
}
