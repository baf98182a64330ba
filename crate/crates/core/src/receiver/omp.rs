//! Doppler recovery from the slow-time samples of one transmit stream.
//!
//! The dictionary is the P-point DFT restricted to the stream's slots.
//! Correlations with every atom come from one zero-filled P-point FFT.

use crate::linalg::least_squares;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmpParams {
    /// Maximum number of atoms.
    pub k_max: usize,
    /// Residual norm at which the search stops.
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmpResult {
    /// Selected Doppler bins and their least-squares amplitudes.
    pub atoms: Vec<(usize, Complex64)>,
    pub residual: f64,
    /// Residual reached `eps`.
    pub converged: bool,
    /// Stopped because an added atom failed to reduce the residual.
    pub aborted: bool,
}

/// Atom of Doppler bin `f` (possibly fractional) sampled at `slots`.
pub fn doppler_atom(slots: &[usize], p: usize, f: f64) -> Vec<Complex64> {
    slots.iter().map(|&s| Complex64::from_polar(1.0, 2.0 * PI * s as f64 * f / p as f64)).collect()
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Reusable OMP solver for a P-point Doppler grid.
#[derive(Clone)]
pub struct DopplerOmp {
    p: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl DopplerOmp {
    pub fn new(p: usize) -> Self {
        Self { p, fft: FftPlanner::new().plan_fft_forward(p) }
    }

    /// `|a_f^H r|` for every Doppler bin `f`.
    fn correlations(&self, r: &[Complex64], slots: &[usize]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.p];
        for (&s, &v) in slots.iter().zip(r) {
            buf[s] += v;
        }
        self.fft.process(&mut buf);
        buf.iter().map(|z| z.norm()).collect()
    }

    pub fn run(&self, y: &[Complex64], slots: &[usize], params: &OmpParams) -> OmpResult {
        let mut support: Vec<usize> = Vec::new();
        let mut coefs: Vec<Complex64> = Vec::new();
        let mut residual = y.to_vec();
        let mut res_norm = norm(y);
        let mut aborted = false;
        while support.len() < params.k_max && res_norm > params.eps {
            let corr = self.correlations(&residual, slots);
            let best = (0..self.p).filter(|f| !support.contains(f)).max_by(|&a, &b| corr[a].total_cmp(&corr[b]).then(b.cmp(&a)));
            let Some(best) = best else { break };
            let mut trial = support.clone();
            trial.push(best);
            let cols: Vec<Vec<Complex64>> = trial.iter().map(|&f| doppler_atom(slots, self.p, f as f64)).collect();
            let Some(x) = least_squares(&cols, y) else {
                aborted = true;
                break;
            };
            let new_res: Vec<Complex64> = (0..y.len()).map(|i| y[i] - cols.iter().zip(&x).map(|(c, a)| c[i] * a).sum::<Complex64>()).collect();
            let new_norm = norm(&new_res);
            if new_norm >= res_norm * (1.0 - 1e-12) {
                aborted = true;
                break;
            }
            support = trial;
            coefs = x;
            residual = new_res;
            res_norm = new_norm;
        }
        OmpResult {
            atoms: support.into_iter().zip(coefs).collect(),
            residual: res_norm,
            converged: res_norm <= params.eps,
            aborted,
        }
    }
}

/// Conventional processing of a uniformly decimated stream: a Q-point DFT
/// whose bins are placed on the P grid at their aliased (signed) positions.
pub fn decimated_dft(y: &[Complex64], slots: &[usize], p: usize) -> Vec<(usize, Complex64)> {
    let q = y.len();
    let mut buf = y.to_vec();
    FftPlanner::new().plan_fft_forward(q).process(&mut buf);
    let offset = slots.first().copied().unwrap_or(0) as f64;
    buf.iter()
        .enumerate()
        .map(|(j, &z)| {
            let signed = if j >= q.div_ceil(2) { j as i64 - q as i64 } else { j as i64 };
            let f = signed.rem_euclid(p as i64) as usize;
            // Undo the phase of the stream's first slot.
            let ph = Complex64::from_polar(1.0, -2.0 * PI * offset * f as f64 / p as f64);
            (f, z * ph / q as f64)
        })
        .collect()
}
