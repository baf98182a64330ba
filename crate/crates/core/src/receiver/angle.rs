//! Angle estimation on a redundant DFT grid. A vector over positions
//! `0..L` (in units of its element spacing) is correlated with
//! `e^{j pi a s}` for `s` on `mu * L` uniform points of `[-1, 1)`, powers are
//! summed over all vectors, and the peak is refined by a parabola. The
//! direction sine is `s / (2 d_a spacing)`.

use crate::channel::Direction;
use crate::config::{ArrayGeometry, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleParams {
    /// Grid redundancy factor.
    pub mu: usize,
}

impl Default for AngleParams {
    fn default() -> Self {
        Self { mu: 16 }
    }
}

/// Complex amplitude of one target per `[m][l_tx][l_rx]`.
pub type SpatialCoefs = Vec<Vec<Vec<Complex64>>>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPeak {
    /// Normalized phase slope `s` in `[-1, 1)`.
    pub s: f64,
    /// Peak fell on the first or last grid point.
    pub edge: bool,
}

/// Redundant-DFT power spectrum summed over `vectors`.
pub fn redundant_spectrum(vectors: &[Vec<Complex64>], mu: usize) -> Vec<f64> {
    let len = vectors.first().map_or(0, |v| v.len());
    let g = mu * len;
    (0..g)
        .map(|chi| {
            let s = -1.0 + 2.0 * chi as f64 / g as f64;
            let steer: Vec<Complex64> = (0..len).map(|a| Complex64::from_polar(1.0, -PI * a as f64 * s)).collect();
            vectors.iter().map(|v| v.iter().zip(&steer).map(|(x, w)| x * w).sum::<Complex64>().norm_sqr()).sum()
        })
        .collect()
}

pub fn redundant_peak(vectors: &[Vec<Complex64>], mu: usize) -> GridPeak {
    let len = vectors.first().map_or(0, |v| v.len());
    if len <= 1 {
        return GridPeak { s: 0.0, edge: false };
    }
    let spec = redundant_spectrum(vectors, mu);
    let g = spec.len();
    let chi = (0..g).max_by(|&a, &b| spec[a].total_cmp(&spec[b]).then(b.cmp(&a))).unwrap();
    let delta = super::range::parabolic_offset(spec[(chi + g - 1) % g], spec[chi], spec[(chi + 1) % g]);
    let mut s = -1.0 + 2.0 * (chi as f64 + delta) / g as f64;
    if s >= 1.0 {
        s -= 2.0;
    }
    if s < -1.0 {
        s += 2.0;
    }
    GridPeak { s, edge: chi == 0 || chi == g - 1 }
}

fn axis_vectors<F: Fn(usize, usize) -> Complex64>(outer: usize, len: usize, f: F) -> Vec<Vec<Complex64>> {
    (0..outer).map(|o| (0..len).map(|a| f(o, a)).collect()).collect()
}

/// Departure and arrival directions of a passive-terminal path. Departure
/// sines are principal values: transmit elements are `L_rx` receive spacings
/// apart, so they wrap with period `1 / (d_a L_rx)`.
pub fn estimate_angles_pt(coefs: &SpatialCoefs, geom: &ArrayGeometry, params: &AngleParams) -> (Direction, Direction, bool) {
    let n_m = coefs.len();
    let (n_tx, n_rx) = (geom.n_tx(), geom.n_rx());
    let rx_axis = |axis: Axis| {
        let len = geom.rx_len(axis);
        let v = axis_vectors(n_m * n_tx, len, |o, a| coefs[o / n_tx][o % n_tx][geom.rx_global(axis, a)]);
        redundant_peak(&v, params.mu)
    };
    let tx_axis = |axis: Axis| {
        let len = geom.tx_len(axis);
        let v = axis_vectors(n_m * n_rx, len, |o, a| coefs[o / n_rx][geom.tx_global(axis, a)][o % n_rx]);
        redundant_peak(&v, params.mu)
    };
    let (ax, az) = (rx_axis(Axis::X), rx_axis(Axis::Z));
    let (tx, tz) = (tx_axis(Axis::X), tx_axis(Axis::Z));
    let two_d = 2.0 * geom.d_a;
    let arrival = Direction::new(ax.s / two_d, az.s / two_d);
    let departure = Direction::new(tx.s / (two_d * geom.rx_x as f64), tz.s / (two_d * geom.rx_z as f64));
    (departure, arrival, ax.edge || az.edge)
}

/// Direction of an active-terminal echo from the virtual array
/// `a_rx + L_rx a_tx` along each axis.
pub fn estimate_angles_at(coefs: &SpatialCoefs, geom: &ArrayGeometry, params: &AngleParams) -> (Direction, bool) {
    let virtual_axis = |axis: Axis| {
        let (lt, lr) = (geom.tx_len(axis), geom.rx_len(axis));
        let v = axis_vectors(coefs.len(), lt * lr, |m, a| coefs[m][geom.tx_global(axis, a / lr)][geom.rx_global(axis, a % lr)]);
        redundant_peak(&v, params.mu)
    };
    let (x, z) = (virtual_axis(Axis::X), virtual_axis(Axis::Z));
    let two_d = 2.0 * geom.d_a;
    (Direction::new(x.s / two_d, z.s / two_d), x.edge || z.edge)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steer(len: usize, s: f64) -> Vec<Complex64> {
        (0..len).map(|a| Complex64::from_polar(1.0, PI * a as f64 * s)).collect()
    }

    #[test]
    fn broadside_is_grid_centre() {
        let p = redundant_peak(&[steer(8, 0.0)], 16);
        assert!(p.s.abs() < 1e-12 && !p.edge);
    }

    #[test]
    fn off_grid_within_half_cell() {
        for s in [0.5, -0.31, 0.77] {
            let p = redundant_peak(&[steer(8, s)], 16);
            assert!((p.s - s).abs() <= 1.0 / (16.0 * 8.0), "{s} -> {}", p.s);
        }
    }
}
