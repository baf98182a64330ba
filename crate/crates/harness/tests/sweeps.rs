//! Monte-Carlo sweep properties on a reduced frame.

use isac_core::config::{derive_config, RawConfig, TimeSpec};
use isac_harness::experiments::{joint_trial, run_sweep, TrialSetup};
use isac_harness::stats::SymbolCounts;

fn setup() -> TrialSetup {
    let raw = RawConfig {
        p: Some(24),
        t_us: Some(TimeSpec::expr("12.8")),
        t_chirp_us: Some(TimeSpec::expr("64/60*12.8")),
        t_slot_us: Some(TimeSpec::expr("76/60*12.8")),
        ..Default::default()
    };
    TrialSetup::new(derive_config(&raw).unwrap())
}

/// Paired seeds: SER does not rise with SNR beyond Monte-Carlo noise.
#[test]
fn ser_is_non_increasing_in_snr() {
    let snrs: Vec<Option<f64>> = [-35.0, -30.0, -25.0, -20.0, -15.0].iter().map(|&s| Some(s)).collect();
    let points = run_sweep(&setup(), &snrs, 6, 21).unwrap();
    let check = |f: fn(&isac_harness::experiments::SweepPoint) -> SymbolCounts, what: &str| {
        for w in points.windows(2) {
            let (lo, hi) = (f(&w[0]), f(&w[1]));
            // The higher-SNR interval must reach below the lower-SNR rate.
            assert!(hi.ci().0 <= lo.ser(), "{what}: {:?} dB SER {} above {:?} dB SER {}", w[1].snr_db, hi.ser(), w[0].snr_db, lo.ser());
        }
    };
    check(|p| p.delay, "delay");
    check(|p| p.dpsk, "dpsk");
    assert!(points[0].dpsk.ser() > points[4].dpsk.ser());
}

#[test]
fn every_trial_conserves_symbols() {
    let mut s = setup();
    for snr in [None, Some(-40.0), Some(-25.0)] {
        s.snr_db = snr;
        for seed in 0..3 {
            let o = joint_trial(&s, seed).unwrap();
            assert!(o.delay.is_conserved() && o.dpsk.is_conserved(), "{snr:?} {seed}: {o:?}");
            assert!(o.delay.sent > 0 && o.dpsk.sent > 0);
        }
    }
}

#[test]
fn sweep_points_share_trial_seeds() {
    let points = run_sweep(&setup(), &[Some(-30.0), Some(-20.0)], 3, 8).unwrap();
    assert_eq!(points[0].seeds, points[1].seeds);
    let again = run_sweep(&setup(), &[Some(-30.0)], 3, 8).unwrap();
    assert_eq!(again[0].delay, points[0].delay);
    assert_eq!(again[0].dpsk, points[0].dpsk);
}
