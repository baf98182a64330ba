//! Frame encoding properties.

use isac_core::config::{derive_config, RawConfig, TimeSpec};
use isac_core::modem::{decode_frame, dpsk_decide, dpsk_point, encode_frame};
use isac_core::scheduler::{generate_schedule, ScheduleMode};
use proptest::prelude::*;

fn small_config(d: usize) -> isac_core::config::SystemConfig {
    let raw = RawConfig {
        p: Some(24),
        dpsk_order: Some(d),
        t_us: Some(TimeSpec::expr("12.8")),
        t_chirp_us: Some(TimeSpec::expr("64/60*12.8")),
        t_slot_us: Some(TimeSpec::expr("76/60*12.8")),
        ..Default::default()
    };
    derive_config(&raw).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_round_trip(seed in any::<u64>(), d_pow in 1u32..5, bits_seed in any::<u64>()) {
        let cfg = small_config(1 << d_pow);
        let sched = generate_schedule(&cfg, ScheduleMode::PseudoRandom, seed).unwrap();
        let mut state = bits_seed;
        let bits: Vec<bool> = (0..cfg.n_bit()).map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 63 == 1
        }).collect();
        let payload = encode_frame(&bits, &cfg, &sched).unwrap();
        prop_assert!(payload.f_d.iter().flatten().all(|&f| (f as usize) < cfg.n / 2));
        // Unit modulus, and each stream starts at one.
        for (row, s) in payload.beta.iter().zip(&sched) {
            prop_assert!(row.iter().all(|b| (b.norm() - 1.0).abs() < 1e-12));
            for l in 0..cfg.l_tx() {
                prop_assert!((row[s.column(l)[0]] - 1.0).norm() < 1e-12);
            }
        }
        prop_assert_eq!(decode_frame(&payload.f_d, &payload.increments, &cfg), bits);
    }

    #[test]
    fn dpsk_points_decide_to_themselves(d_pow in 1u32..6, k in 0u32..32, jitter in -0.4f64..0.4) {
        let d = 1usize << d_pow;
        let k = k % d as u32;
        let z = dpsk_point(k, d) * isac_core::Complex64::from_polar(2.5, jitter * std::f64::consts::PI / d as f64);
        prop_assert_eq!(dpsk_decide(z, d), k);
    }
}
