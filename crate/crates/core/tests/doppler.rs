//! Doppler recovery: OMP against the DFT under full sampling, and velocity
//! de-aliasing by pseudo-random transmit order.

use isac_core::receiver::omp::{decimated_dft, doppler_atom, DopplerOmp, OmpParams};
use isac_core::scheduler::schedule::generate;
use isac_core::scheduler::ScheduleMode;
use isac_core::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

#[test]
fn omp_support_equals_top_dft_bins_under_full_sampling() {
    let p = 32;
    let slots: Vec<usize> = (0..p).collect();
    let omp = DopplerOmp::new(p);
    let fft = FftPlanner::new().plan_fft_forward(p);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let k = rng.gen_range(1..=5);
        let bins = sample(&mut rng, p, k).into_vec();
        let mut y = vec![Complex64::new(0.0, 0.0); p];
        for &f in &bins {
            let a = Complex64::from_polar(rng.gen_range(0.2..2.0), rng.gen_range(0.0..std::f64::consts::TAU));
            for (yi, t) in y.iter_mut().zip(doppler_atom(&slots, p, f as f64)) {
                *yi += a * t;
            }
        }
        // Oracle: the K largest bins of the P-point DFT.
        let mut spec = y.clone();
        fft.process(&mut spec);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| spec[b].norm().total_cmp(&spec[a].norm()));
        let mut top = order[..k].to_vec();
        top.sort();
        let r = omp.run(&y, &slots, &OmpParams { k_max: k, eps: 1e-9 });
        let mut got: Vec<usize> = r.atoms.iter().map(|a| a.0).collect();
        got.sort();
        assert_eq!(got, top);
        assert!(r.converged);
    }
}

#[test]
fn pseudo_random_order_removes_velocity_aliasing() {
    let (p, l_tx) = (24usize, 3usize);
    let q = p / l_tx;
    let omp = DopplerOmp::new(p);
    let params = OmpParams { k_max: 1, eps: 1e-9 };
    let (mut cases, mut omp_hits, mut alias_hits) = (0, 0, 0);
    for seed in 0..100u64 {
        let random = generate(p, 1, l_tx, ScheduleMode::PseudoRandom, seed).unwrap();
        let uniform = generate(p, 1, l_tx, ScheduleMode::Conventional, seed).unwrap();
        for l in 0..l_tx {
            // Bins strictly between the decimated and the full Nyquist limits.
            for f in p / (2 * l_tx) + 1..p / 2 {
                cases += 1;
                let slots = random[0].column(l);
                let r = omp.run(&doppler_atom(slots, p, f as f64), slots, &params);
                omp_hits += usize::from(r.atoms.first().map(|a| a.0) == Some(f));

                let slots = uniform[0].column(l);
                let spec = decimated_dft(&doppler_atom(slots, p, f as f64), slots, p);
                let peak = spec.iter().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
                let j = f % q;
                let alias = if j >= q.div_ceil(2) { j as i64 - q as i64 } else { j as i64 };
                alias_hits += usize::from(peak == alias.rem_euclid(p as i64) as usize && peak != f);
            }
        }
    }
    assert!(omp_hits as f64 >= 0.99 * cases as f64, "{omp_hits}/{cases}");
    assert_eq!(alias_hits, cases);
}
