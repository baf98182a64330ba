//! Properties of the antenna schedules.

use isac_core::scheduler::schedule::generate;
use isac_core::scheduler::ScheduleMode;
use proptest::prelude::*;

proptest! {
    #[test]
    fn pseudo_random_schedules_are_latin(cycles in 1usize..12, l_tx in 1usize..7, seed in any::<u64>(), m_frac in 0.0f64..1.0) {
        let m = 1 + ((l_tx - 1) as f64 * m_frac) as usize;
        let p = cycles * l_tx;
        let s = generate(p, m, l_tx, ScheduleMode::PseudoRandom, seed).unwrap();
        prop_assert_eq!(s.len(), m);
        for c in 0..cycles {
            let slots = c * l_tx..(c + 1) * l_tx;
            for g in &s {
                // Every antenna once per cycle.
                let mut seen: Vec<usize> = slots.clone().map(|q| g.antenna_at(q)).collect();
                seen.sort();
                prop_assert_eq!(seen, (0..l_tx).collect::<Vec<_>>());
            }
            // No antenna serves two groups in the same slot.
            for q in slots {
                let mut used: Vec<usize> = s.iter().map(|g| g.antenna_at(q)).collect();
                used.sort();
                used.dedup();
                prop_assert_eq!(used.len(), m);
            }
        }
        for g in &s {
            for l in 0..l_tx {
                let col = g.column(l);
                prop_assert_eq!(col.len(), cycles);
                prop_assert!(col.windows(2).all(|w| w[0] < w[1]));
                for (i, &q) in col.iter().enumerate() {
                    prop_assert_eq!(g.antenna_at(q), l);
                    prop_assert_eq!(g.stream_index(q), i);
                }
            }
        }
    }

    #[test]
    fn schedules_are_deterministic(seed in any::<u64>()) {
        let a = generate(24, 3, 3, ScheduleMode::PseudoRandom, seed).unwrap();
        let b = generate(24, 3, 3, ScheduleMode::PseudoRandom, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn different_seeds_give_different_orders() {
    let a = generate(120, 3, 3, ScheduleMode::PseudoRandom, 1).unwrap();
    let b = generate(120, 3, 3, ScheduleMode::PseudoRandom, 2).unwrap();
    assert_ne!(a[0].antennas(), b[0].antennas());
}
