//! Fast-time DFT, antenna accumulation, tone estimation and the small
//! interpolation helpers shared by both receivers.

use crate::channel::IfCube;
use ndarray::{s, Array4, ArrayView1};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Range spectra with axes `(m, l_rx, p, k)`; `k` is the range bin.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeMaps {
    pub data: Array4<Complex64>,
    /// Spectra were taken with a tapered window.
    pub windowed: bool,
}

impl RangeMaps {
    pub fn m(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn l_rx(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn p(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn n(&self) -> usize {
        self.data.shape()[3]
    }

    pub fn row(&self, m: usize, r: usize, p: usize) -> ArrayView1<'_, Complex64> {
        self.data.slice(s![m, r, p, ..])
    }

    /// Sets every sample of the listed range bins to zero.
    pub fn zero_bins(&mut self, bins: &[usize]) {
        for &k in bins {
            self.data.slice_mut(s![.., .., .., k]).fill(Complex64::new(0.0, 0.0));
        }
    }
}

/// Fast-time DFT of every chirp with an optional window, normalized by `1/N`.
pub fn windowed_range_dft(cube: &IfCube, window: Option<&[f64]>) -> RangeMaps {
    let n = cube.n();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut data = cube.data.as_standard_layout().to_owned();
    let scale = 1.0 / n as f64;
    data.as_slice_mut().expect("standard layout").par_chunks_mut(n).for_each_init(
        || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
        |scratch, row| {
            if let Some(w) = window {
                row.iter_mut().zip(w).for_each(|(z, &g)| *z *= g);
            }
            fft.process_with_scratch(row, scratch);
            row.iter_mut().for_each(|z| *z *= scale);
        },
    );
    RangeMaps { data, windowed: window.is_some() }
}

pub fn range_dft(cube: &IfCube) -> RangeMaps {
    windowed_range_dft(cube, None)
}

/// Mean magnitude over receive antennas for group `m`, indexed `[p][k]`.
pub fn accumulate(maps: &RangeMaps, m: usize) -> Vec<Vec<f64>> {
    let l = maps.l_rx() as f64;
    (0..maps.p())
        .map(|p| {
            let mut acc = vec![0.0; maps.n()];
            for r in 0..maps.l_rx() {
                for (a, z) in acc.iter_mut().zip(maps.row(m, r, p)) {
                    *a += z.norm();
                }
            }
            acc.iter_mut().for_each(|a| *a /= l);
            acc
        })
        .collect()
}

/// Mean power per range bin over all groups, antennas and slots.
pub fn power_profile(maps: &RangeMaps) -> Vec<f64> {
    let mut prof = vec![0.0; maps.n()];
    for row in maps.data.rows() {
        for (a, z) in prof.iter_mut().zip(row) {
            *a += z.norm_sqr();
        }
    }
    let count = (maps.m() * maps.l_rx() * maps.p()) as f64;
    prof.iter_mut().for_each(|a| *a /= count);
    prof
}

/// Blackman-Harris coefficients `a0 - a1 cos + a2 cos2 - a3 cos3`.
pub const BLACKMAN_HARRIS: [f64; 4] = [0.35875, 0.48829, 0.14128, 0.01168];

/// Power profile of the Blackman-Harris windowed range spectra. The periodic
/// window is a sum of cosines, so each windowed bin is a seven-tap
/// combination of rectangular bins.
pub fn windowed_power_profile(maps: &RangeMaps) -> Vec<f64> {
    let n = maps.n() as i64;
    let a = BLACKMAN_HARRIS;
    let taps = [(0, a[0]), (1, -a[1] / 2.0), (2, a[2] / 2.0), (3, -a[3] / 2.0)];
    let mut prof = vec![0.0; maps.n()];
    for row in maps.data.rows() {
        for (k, acc) in prof.iter_mut().enumerate() {
            let k = k as i64;
            let mut z = row[k as usize] * taps[0].1;
            for &(j, c) in &taps[1..] {
                z += (row[(k - j).rem_euclid(n) as usize] + row[(k + j).rem_euclid(n) as usize]) * c;
            }
            *acc += z.norm_sqr();
        }
    }
    let count = (maps.m() * maps.l_rx() * maps.p()) as f64;
    prof.iter_mut().for_each(|v| *v /= count);
    prof
}

/// Vertex offset of a parabola through three equally spaced samples, in
/// `[-0.5, 0.5]`; zero when the middle sample is not a maximum.
pub fn parabolic_offset(left: f64, mid: f64, right: f64) -> f64 {
    let den = left - 2.0 * mid + right;
    if den >= 0.0 || !den.is_finite() {
        return 0.0;
    }
    (0.5 * (left - right) / den).clamp(-0.5, 0.5)
}

/// Fractional offset of a tone peak at the middle of three magnitude
/// samples: the two-bin magnitude ratio, exact for a rectangular window, or
/// log-parabolic interpolation for tapered windows.
pub fn peak_offset(left: f64, mid: f64, right: f64, windowed: bool) -> f64 {
    if !(mid > 0.0) || left > mid || right > mid {
        return 0.0;
    }
    let d = if windowed {
        if left <= 0.0 || right <= 0.0 {
            return 0.0;
        }
        let (l, m, r) = (left.ln(), mid.ln(), right.ln());
        let den = l - 2.0 * m + r;
        if den >= 0.0 {
            return 0.0;
        }
        0.5 * (l - r) / den
    } else if right >= left {
        right / (mid + right)
    } else {
        -left / (mid + left)
    };
    d.clamp(-0.5, 0.5)
}

/// Linear interpolation of `a` at fractional cyclic index `x`.
pub fn interp_linear(a: &[f64], x: f64) -> f64 {
    let n = a.len() as i64;
    let i0 = x.floor();
    let f = x - i0;
    let i0 = (i0 as i64).rem_euclid(n) as usize;
    let i1 = (i0 + 1) % a.len();
    a[i0] * (1.0 - f) + a[i1] * f
}

/// Frequency of the dominant tone of `x` in signed bins `[-N/2, N/2)`, from
/// the DFT peak and a bias-corrected three-point interpolation.
pub fn estimate_tone(x: &[Complex64]) -> f64 {
    let n = x.len();
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (k, _) = buf.iter().enumerate().fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
    let prev = buf[(k + n - 1) % n];
    let next = buf[(k + 1) % n];
    let den = buf[k] * 2.0 - prev - next;
    let mut delta = if den.norm() > 0.0 { ((prev - next) / den).re } else { 0.0 };
    let r = PI / n as f64;
    delta *= r.tan() / r;
    let mut f = k as f64 + delta.clamp(-0.5, 0.5);
    if f >= n as f64 / 2.0 {
        f -= n as f64;
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize, f: f64) -> Vec<Complex64> {
        (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / n as f64)).collect()
    }

    #[test]
    fn tone_estimates_are_signed() {
        for f in [3.0, 12.3, -40.45, 200.7, -0.2] {
            let est = estimate_tone(&tone(512, f));
            assert!((est - f).abs() < 0.02, "{f} -> {est}");
        }
    }

    #[test]
    fn parabola_vertex() {
        let y = |x: f64| -(x - 0.3) * (x - 0.3);
        assert!((parabolic_offset(y(-1.0), y(0.0), y(1.0)) - 0.3).abs() < 1e-12);
        assert_eq!(parabolic_offset(1.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn interpolation_wraps() {
        let a = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(interp_linear(&a, 1.5), 1.5);
        assert_eq!(interp_linear(&a, 3.5), 1.5);
    }
}
