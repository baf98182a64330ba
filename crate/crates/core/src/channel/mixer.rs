//! Literal mixer model used to check the closed-form synthesis and the
//! resource-block isolation.
//!
//! The IF sample is the product of the reference chirp and the conjugated
//! received chirp, `e^{j(s(t) - s(t - tau))}` with `s(t) = 2pi(fc t + alpha t^2/2)`,
//! evaluated in closed form for the exact time-varying delay of each path.
//! Nothing is dropped: the quadratic delay term, the fast-time Doppler drift
//! and the slope acting on element delays are all kept.

use super::{ChannelError, IfCube, Scene};
use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::modem::FramePayload;
use crate::scheduler::LatinSchedule;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// IF cube from the exact mixer product. The carrier `cfg.fc` should make the
/// data delays whole carrier cycles for a phase-exact comparison.
pub fn physical_if(scene: &Scene, payload: &FramePayload, schedules: &[LatinSchedule], cfg: &SystemConfig) -> Result<IfCube, ChannelError> {
    super::synth::validate_scene(scene, cfg)?;
    let (m_n, l_rx, p_n, n) = (cfg.m, cfg.l_rx(), cfg.p, cfg.n);
    let alpha = cfg.alpha();
    let fc = cfg.fc;
    let ts = cfg.ts();
    let lead = cfg.seconds(cfg.t_chirp - cfg.t);
    let slot = cfg.slot_seconds();
    let bin_delay = 1.0 / (n as f64 * ts * alpha);
    let pf = scene.terminal.path_factor();
    let geom = &cfg.geometry;
    let mut cube = IfCube::zeros(m_n, l_rx, n, p_n);
    for m in 0..m_n {
        let rb = cfg.seconds(cfg.rb_offset(m));
        for r in 0..l_rx {
            let (rx_x, rx_z) = geom.rx_position(r);
            for p in 0..p_n {
                let tx = schedules[m].antenna_at(p);
                let (tx_x, tx_z) = geom.tx_position(tx);
                let tau_data = payload.f_d[m][p] as f64 * bin_delay;
                let beta = payload.beta[m][p];
                for i in 0..n {
                    let t_local = lead + i as f64 * ts;
                    let t_abs = p as f64 * slot + rb + t_local;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for path in &scene.paths {
                        let spatial = tx_x * path.departure.az + tx_z * path.departure.el + rx_x * path.arrival.az + rx_z * path.arrival.el;
                        let tau = pf * (path.distance + path.velocity * t_abs) / SPEED_OF_LIGHT + tau_data + geom.d_a * spatial / fc;
                        let cycles = fc * tau + alpha * t_local * tau - 0.5 * alpha * tau * tau;
                        acc += path.amplitude * Complex64::from_polar(1.0, 2.0 * PI * cycles.rem_euclid(1.0));
                    }
                    cube.data[[m, r, p, i]] = beta * acc;
                }
            }
        }
    }
    Ok(cube)
}

/// Relative RMS misfit of `observed` after a least-squares fit of one complex
/// amplitude per model cube.
pub fn relative_fit_error(observed: &IfCube, models: &[IfCube]) -> f64 {
    let y: Vec<Complex64> = observed.data.iter().copied().collect();
    let cols: Vec<Vec<Complex64>> = models.iter().map(|c| c.data.iter().copied().collect()).collect();
    let Some(x) = crate::linalg::least_squares(&cols, &y) else {
        return f64::INFINITY;
    };
    let mut err = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let fit: Complex64 = cols.iter().zip(&x).map(|(c, a)| c[i] * a).sum();
        err += (yi - fit).norm_sqr();
    }
    let power: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    (err / power).sqrt()
}

/// Blackman-windowed sinc low-pass with unit DC gain; `cutoff` in cycles per
/// sample.
pub fn lowpass_taps(taps: usize, cutoff: f64) -> Vec<f64> {
    let mid = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|k| {
            let x = k as f64 - mid;
            let sinc = if x == 0.0 { 2.0 * cutoff } else { (2.0 * PI * cutoff * x).sin() / (PI * x) };
            let w = 0.42 - 0.5 * (2.0 * PI * k as f64 / (taps - 1) as f64).cos() + 0.08 * (4.0 * PI * k as f64 / (taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Settings of the resource-block isolation measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsolationSetup {
    pub oversample: usize,
    pub taps: usize,
}

impl Default for IsolationSetup {
    fn default() -> Self {
        Self { oversample: 16, taps: 129 }
    }
}

/// Oversampled, band-limited IF seen by the receiver of one block when a
/// chirp starting `start` seconds after its own reference arrives with delay
/// `tau`. Returns the fast-time window decimated to the sample rate.
fn received_if(cfg: &SystemConfig, setup: &IsolationSetup, start: f64, tau: f64, h: &[f64]) -> Vec<Complex64> {
    let fs = cfg.fs as f64;
    let os = setup.oversample;
    let dt = 1.0 / (fs * os as f64);
    let alpha = cfg.alpha();
    let chirp = cfg.seconds(cfg.t_chirp);
    let lead = cfg.seconds(cfg.t_chirp - cfg.t);
    let half = setup.taps / 2;
    let total = cfg.n * os + 2 * half;
    let t0 = lead - half as f64 * dt;
    // Mixer output shifted down by fs/2 so the band of interest [0, fs) is
    // centred on zero for the real low-pass.
    let mixed: Vec<Complex64> = (0..total)
        .map(|i| {
            let t = t0 + i as f64 * dt;
            let u = t - start - tau;
            if t < 0.0 || t > chirp || u < 0.0 || u > chirp {
                return Complex64::new(0.0, 0.0);
            }
            let phase = PI * alpha * (t * t - u * u) - PI * fs * t;
            Complex64::from_polar(1.0, phase.rem_euclid(2.0 * PI))
        })
        .collect();
    (0..cfg.n)
        .map(|k| {
            let centre = half + k * os;
            let acc: Complex64 = h.iter().enumerate().map(|(j, &w)| mixed[centre + half - j] * w).sum();
            let t = lead + k as f64 / fs;
            acc * Complex64::from_polar(1.0, (PI * fs * t).rem_euclid(2.0 * PI))
        })
        .collect()
}

fn peak_magnitude(x: &[Complex64]) -> f64 {
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Isolation [dB] between the in-block tone (delay `tau`) and the residue of a
/// chirp from the block `offset` positions away (delay `tau_other`), both
/// measured as range-spectrum peaks after the receive band-pass.
pub fn rb_isolation_db(cfg: &SystemConfig, setup: &IsolationSetup, offset: i64, tau: f64, tau_other: f64) -> f64 {
    let h = lowpass_taps(setup.taps, 0.7 / setup.oversample as f64);
    let td = cfg.seconds(cfg.td);
    let own = peak_magnitude(&received_if(cfg, setup, 0.0, tau, &h));
    let other = peak_magnitude(&received_if(cfg, setup, 2.0 * offset as f64 * td, tau_other, &h));
    20.0 * (own / other.max(1e-300)).log10()
}
