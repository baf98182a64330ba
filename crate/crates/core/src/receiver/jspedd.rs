//! Passive-terminal data demodulation: delay symbols from the joint position
//! of all predicted targets, DPSK increments from adjacent-symbol ratios of
//! the line-of-sight target, and removal of both from the range maps.

use super::range::{interp_linear, RangeMaps};
use crate::modem::{dpsk_decide, dpsk_point};
use crate::scheduler::LatinSchedule;
use ndarray::s;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Predicted target position in the passive terminal's bins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub range_bin: f64,
    /// Doppler bin; present only for targets whose velocity is tracked.
    pub doppler_bin: Option<f64>,
    /// Expected relative amplitude; weights the target in the delay search.
    pub weight: f64,
}

/// Shift `c` maximizing the weighted sum of accumulated magnitudes at every
/// predicted bin shifted by `c`, over `0..N/2`.
pub fn joint_delay_search(a: &[f64], predicted: &[f64], weights: &[f64]) -> usize {
    let half = a.len() / 2;
    (0..half)
        .map(|c| (c, predicted.iter().zip(weights).map(|(&f, &w)| w * interp_linear(a, f + c as f64)).sum::<f64>()))
        .fold((0, f64::NEG_INFINITY), |best, (c, v)| if v > best.1 { (c, v) } else { best })
        .0
}

/// Delay symbol of every slot of group `m` from its accumulated magnitudes
/// `acc[p][k]`: the shift that best lines the weighted prediction pattern up
/// with the spectrum. Matching the pattern as a whole, rather than rounding
/// each target's offset, tolerates prediction errors up to half a bin even
/// where a target sits near a bin boundary.
pub fn demod_delay_data(acc: &[Vec<f64>], preds: &[Prediction]) -> Vec<u32> {
    if preds.is_empty() {
        return vec![0; acc.len()];
    }
    let weights: Vec<f64> = preds.iter().map(|p| p.weight.max(f64::MIN_POSITIVE)).collect();
    let predicted: Vec<f64> = preds.iter().map(|p| p.range_bin).collect();
    acc.iter().map(|a| joint_delay_search(a, &predicted, &weights) as u32).collect()
}

/// Moves every chirp's spectrum down by its delay symbol (circular shift).
pub fn remove_delay_data(maps: &RangeMaps, f_bar: &[Vec<u32>]) -> RangeMaps {
    let mut out = maps.clone();
    let n = maps.n();
    for m in 0..maps.m() {
        for r in 0..maps.l_rx() {
            for p in 0..maps.p() {
                let shift = f_bar[m][p] as usize % n;
                if shift == 0 {
                    continue;
                }
                let src = maps.row(m, r, p);
                let mut dst = out.data.slice_mut(s![m, r, p, ..]);
                for k in 0..n {
                    dst[k] = src[(k + shift) % n];
                }
            }
        }
    }
    out
}

/// Divides every chirp by its unit-modulus amplitude symbol.
pub fn remove_amplitude_data(maps: &RangeMaps, beta: &[Vec<Complex64>]) -> RangeMaps {
    let mut out = maps.clone();
    for m in 0..maps.m() {
        for p in 0..maps.p() {
            let inv = beta[m][p].inv();
            out.data.slice_mut(s![m, .., p, ..]).mapv_inplace(|z| z * inv);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct DpskDecision {
    /// Decided increment per `[m][l_tx][p' - 1]`; `None` is an erasure.
    pub increments: Vec<Vec<Vec<Option<u32>>>>,
    /// Reconstructed amplitude per `[m][p]` (erasures treated as zero phase).
    pub beta: Vec<Vec<Complex64>>,
}

/// Row with the largest energy among `centre - 1 ..= centre + 1` for group `m`.
fn snap_row(maps: &RangeMaps, m: usize, centre: f64) -> usize {
    let n = maps.n() as i64;
    let c = centre.round() as i64;
    let energy = |k: i64| {
        let k = k.rem_euclid(n) as usize;
        maps.data.slice(s![m, .., .., k]).iter().map(|z| z.norm_sqr()).sum::<f64>()
    };
    (c - 1..=c + 1).max_by(|&a, &b| energy(a).total_cmp(&energy(b)).then(b.cmp(&a))).unwrap().rem_euclid(n) as usize
}

/// Decides DPSK increments on delay-compensated maps. Each used target's row
/// is pre-compensated with its predicted Doppler; ratios of adjacent symbols
/// of one transmit stream are summed over targets and receive antennas,
/// skipping denominators below `floor`.
pub fn demod_dpsk(maps: &RangeMaps, targets: &[Prediction], schedules: &[LatinSchedule], d: usize, floor: f64) -> DpskDecision {
    let p_n = maps.p();
    let mut increments = Vec::with_capacity(maps.m());
    let mut beta = Vec::with_capacity(maps.m());
    for (m, sched) in schedules.iter().enumerate() {
        let rows: Vec<(usize, f64)> = targets.iter().map(|t| (snap_row(maps, m, t.range_bin), t.doppler_bin.unwrap_or(0.0))).collect();
        let mut inc_m = Vec::with_capacity(sched.l_tx());
        let mut row_beta = vec![Complex64::new(1.0, 0.0); p_n];
        for col in sched.columns() {
            let mut inc_l = Vec::with_capacity(col.len().saturating_sub(1));
            let mut b = Complex64::new(1.0, 0.0);
            row_beta[col[0]] = b;
            for w in col.windows(2) {
                let (p0, p1) = (w[0], w[1]);
                let mut sum = Complex64::new(0.0, 0.0);
                let mut used = 0;
                for &(k, fv) in &rows {
                    let c0 = Complex64::from_polar(1.0, -2.0 * PI * p0 as f64 * fv / p_n as f64);
                    let c1 = Complex64::from_polar(1.0, -2.0 * PI * p1 as f64 * fv / p_n as f64);
                    for r in 0..maps.l_rx() {
                        let den = maps.data[[m, r, p0, k]] * c0;
                        if den.norm() < floor || den.norm() == 0.0 {
                            continue;
                        }
                        sum += maps.data[[m, r, p1, k]] * c1 / den;
                        used += 1;
                    }
                }
                let decided = (used > 0).then(|| dpsk_decide(sum, d));
                b *= dpsk_point(decided.unwrap_or(0), d);
                row_beta[p1] = b;
                inc_l.push(decided);
            }
            inc_m.push(inc_l);
        }
        increments.push(inc_m);
        beta.push(row_beta);
    }
    DpskDecision { increments, beta }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Magnitude spectrum of a unit rectangular-window tone at bin `x`.
    fn tone(n: usize, x: f64) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let d = k as f64 - x;
                if d == 0.0 { 1.0 } else { ((PI * d).sin() / (PI * d)).abs() }
            })
            .collect()
    }

    fn preds(bins: &[f64]) -> Vec<Prediction> {
        bins.iter().map(|&f| Prediction { range_bin: f, doppler_bin: None, weight: 1.0 }).collect()
    }

    #[test]
    fn single_target_offset() {
        assert_eq!(demod_delay_data(&[tone(1024, 228.0)], &preds(&[100.0])), vec![128]);
    }

    #[test]
    fn two_target_offsets_agree() {
        let a: Vec<f64> = tone(1024, 137.2).iter().zip(tone(1024, 336.9)).map(|(x, y)| x + y).collect();
        assert_eq!(demod_delay_data(&[a], &preds(&[100.0, 300.0])), vec![37]);
    }

    #[test]
    fn tolerates_error_near_bin_boundary() {
        // True position 89.74 predicted at 89.47: rounding each offset would
        // give 1, the pattern match gives 0.
        let a: Vec<f64> = tone(256, 22.63).iter().zip(tone(256, 89.74)).map(|(x, y)| x + y).collect();
        assert_eq!(demod_delay_data(&[a], &preds(&[22.63, 89.47])), vec![0]);
    }

    #[test]
    fn zero_payload_and_no_predictions() {
        assert_eq!(demod_delay_data(&[tone(64, 10.0)], &preds(&[10.0])), vec![0]);
        assert_eq!(demod_delay_data(&[tone(64, 10.0), tone(64, 12.0)], &[]), vec![0, 0]);
    }

    #[test]
    fn search_finds_shift() {
        let mut a = vec![0.0; 64];
        a[10 + 17] = 1.0;
        a[20 + 17] = 0.8;
        assert_eq!(joint_delay_search(&a, &[10.0, 20.0], &[1.0, 1.0]), 17);
        assert_eq!(demod_delay_data(&[a], &preds(&[10.0, 20.0])), vec![17]);
    }
}
