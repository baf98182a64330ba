//! Extended Kalman tracking of `(distance, velocity)` per path, with greedy
//! nearest-neighbour association and exponentially smoothed angles.
//!
//! Full tracks follow radial motion between two constant-velocity bodies:
//! the state is `(d, v, g)` with `d'' = g / d^3`, where `g` is the squared
//! transverse relative speed times `d^2` and stays constant. Range-only
//! tracks (paths whose Doppler is not followed) are constant-velocity in
//! `(d, v)`, update on distance alone and keep `g` at zero, decoupled.
//! Velocity innovations wrap to the unambiguous interval.

use crate::channel::Direction;
use crate::config::{SystemConfig, Terminal};
use crate::receiver::{Prediction, TargetEstimate};
use serde::Serialize;
use std::io::Write;

pub type Mat3 = [[f64; 3]; 3];

/// Integration step of the radial dynamics [s].
const STEP: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackConfig {
    /// White-acceleration spectral density of full tracks [m^2/s^3].
    pub process_noise: f64,
    /// White-acceleration spectral density of range-only tracks [m^2/s^3].
    pub range_only_noise: f64,
    /// Random-walk spectral density of `g` [m^8/s^5].
    pub momentum_noise: f64,
    pub range_var: f64,
    pub velocity_var: f64,
    /// Association gate in range and Doppler bins.
    pub gate_bins: (f64, f64),
    pub range_bin_m: f64,
    pub velocity_bin_mps: f64,
    /// Width of the unambiguous velocity interval [m/s].
    pub velocity_span: f64,
    /// Frames without an update before a track is dropped.
    pub timeout: usize,
    /// Smoothing weight of a new angle or amplitude measurement.
    pub angle_weight: f64,
}

impl TrackConfig {
    /// Quantization-noise variances from the terminal's resolution cells.
    pub fn for_terminal(cfg: &SystemConfig, term: Terminal) -> Self {
        let rb = cfg.range_bin_m(term);
        let vb = cfg.velocity_bin_mps(term);
        Self {
            process_noise: 1e-3,
            range_only_noise: 1.0,
            momentum_noise: 1.0,
            range_var: rb * rb / 12.0,
            velocity_var: vb * vb / 12.0,
            gate_bins: (4.0, 4.0),
            range_bin_m: rb,
            velocity_bin_mps: vb,
            velocity_span: 2.0 * cfg.velocity_limit(term),
            timeout: 5,
            angle_weight: 0.3,
        }
    }
}

/// A measurement handed to the tracker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub distance: f64,
    pub velocity: f64,
    pub departure: Direction,
    pub arrival: Direction,
    /// Magnitude of the detection.
    pub amplitude: f64,
}

impl From<&TargetEstimate> for Measurement {
    fn from(e: &TargetEstimate) -> Self {
        Self { distance: e.distance, velocity: e.velocity, departure: e.departure, arrival: e.arrival, amplitude: e.score.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: usize,
    /// `(d, v, g)`.
    pub x: [f64; 3],
    pub p: Mat3,
    pub departure: Direction,
    pub arrival: Direction,
    /// Smoothed detection magnitude.
    pub amplitude: f64,
    pub last_update: usize,
    pub updates: usize,
    /// Whether velocity measurements and the radial dynamics are used.
    pub full: bool,
}

fn wrap(x: f64, span: f64) -> f64 {
    x - span * (x / span).round()
}

fn smooth(a: Direction, b: Direction, w: f64) -> Direction {
    Direction::new(a.az + w * (b.az - a.az), a.el + w * (b.el - a.el))
}

fn rate(x: [f64; 3], floor: f64) -> [f64; 3] {
    [x[1], x[2] / x[0].max(floor).powi(3), 0.0]
}

/// Classical Runge-Kutta integration of the radial dynamics over `dt`.
fn propagate(x: [f64; 3], dt: f64, floor: f64) -> [f64; 3] {
    let steps = (dt / STEP).ceil().max(1.0) as usize;
    let h = dt / steps as f64;
    let axpy = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let mut x = x;
    for _ in 0..steps {
        let k1 = rate(x, floor);
        let k2 = rate(axpy(x, k1, h / 2.0), floor);
        let k3 = rate(axpy(x, k2, h / 2.0), floor);
        let k4 = rate(axpy(x, k3, h), floor);
        for i in 0..3 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn transpose(a: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[j][i];
        }
    }
    c
}

fn symmetrize(p: &mut Mat3) {
    for i in 0..3 {
        for j in 0..i {
            let m = 0.5 * (p[i][j] + p[j][i]);
            p[i][j] = m;
            p[j][i] = m;
        }
    }
}

impl Track {
    pub fn new(id: usize, z: &Measurement, full: bool, frame: usize, cfg: &TrackConfig) -> Self {
        // Unknown quantities start with covariances spanning their physical
        // range: the unambiguous velocity interval and a transverse speed up
        // to its half width.
        let half = cfg.velocity_span / 2.0;
        let g_std = (half * z.distance).powi(2);
        Self {
            id,
            x: [z.distance, if full { z.velocity } else { 0.0 }, 0.0],
            p: [
                [cfg.range_var, 0.0, 0.0],
                [0.0, if full { cfg.velocity_var.max(half * half / 100.0) } else { half * half }, 0.0],
                // Placeholder for range-only tracks; it never couples.
                [0.0, 0.0, if full { g_std * g_std } else { 1.0 }],
            ],
            departure: z.departure,
            arrival: z.arrival,
            amplitude: z.amplitude,
            last_update: frame,
            updates: 1,
            full,
        }
    }

    /// EKF prediction over `dt` seconds.
    pub fn predict(&mut self, dt: f64, cfg: &TrackConfig) {
        assert!(dt > 0.0, "prediction interval must be positive");
        let floor = cfg.range_bin_m;
        let x0 = self.x;
        let mut f = [[0.0; 3]; 3];
        if self.full {
            // Jacobian by central differences.
            for j in 0..3 {
                let eps = 1e-6 * x0[j].abs().max(1.0);
                let (mut hi, mut lo) = (x0, x0);
                hi[j] += eps;
                lo[j] -= eps;
                let (a, b) = (propagate(hi, dt, floor), propagate(lo, dt, floor));
                for i in 0..3 {
                    f[i][j] = (a[i] - b[i]) / (2.0 * eps);
                }
            }
            self.x = propagate(x0, dt, floor);
        } else {
            f = [[1.0, dt, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            self.x = [x0[0] + x0[1] * dt, x0[1], 0.0];
        }
        let mut p = mul(&mul(&f, &self.p), &transpose(&f));
        let q = if self.full { cfg.process_noise } else { cfg.range_only_noise };
        p[0][0] += q * dt.powi(3) / 3.0;
        p[0][1] += q * dt * dt / 2.0;
        p[1][0] += q * dt * dt / 2.0;
        p[1][1] += q * dt;
        if self.full {
            p[2][2] += cfg.momentum_noise * dt;
        }
        symmetrize(&mut p);
        self.p = p;
    }

    /// Kalman update in Joseph form, which keeps the covariance symmetric
    /// positive definite.
    pub fn update(&mut self, z: &Measurement, frame: usize, cfg: &TrackConfig) {
        let p = self.p;
        // Rows of the measurement matrix are unit vectors: distance, then
        // velocity for full tracks.
        let (rows, innov, r): (usize, [f64; 2], [f64; 2]) = if self.full {
            (2, [z.distance - self.x[0], wrap(z.velocity - self.x[1], cfg.velocity_span)], [cfg.range_var, cfg.velocity_var])
        } else {
            (1, [z.distance - self.x[0], 0.0], [cfg.range_var, 0.0])
        };
        let mut s = [[0.0; 2]; 2];
        for a in 0..rows {
            for b in 0..rows {
                s[a][b] = p[a][b] + if a == b { r[a] } else { 0.0 };
            }
        }
        let si = if rows == 2 {
            let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]]
        } else {
            [[1.0 / s[0][0], 0.0], [0.0, 0.0]]
        };
        let mut k = [[0.0; 2]; 3];
        for i in 0..3 {
            for b in 0..rows {
                k[i][b] = (0..rows).map(|a| p[i][a] * si[a][b]).sum();
            }
        }
        for i in 0..3 {
            self.x[i] += (0..rows).map(|b| k[i][b] * innov[b]).sum::<f64>();
        }
        let mut ikh = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ikh[i][j] = f64::from(u8::from(i == j)) - if j < rows { k[i][j] } else { 0.0 };
            }
        }
        let mut pn = mul(&mul(&ikh, &p), &transpose(&ikh));
        for i in 0..3 {
            for j in 0..3 {
                pn[i][j] += (0..rows).map(|b| k[i][b] * r[b] * k[j][b]).sum::<f64>();
            }
        }
        symmetrize(&mut pn);
        self.p = pn;
        self.departure = smooth(self.departure, z.departure, cfg.angle_weight);
        self.arrival = smooth(self.arrival, z.arrival, cfg.angle_weight);
        self.amplitude += cfg.angle_weight * (z.amplitude - self.amplitude);
        self.last_update = frame;
        self.updates += 1;
    }

    /// Predicted bins for the passive demodulator.
    pub fn prediction(&self, cfg: &TrackConfig) -> Prediction {
        Prediction {
            range_bin: self.x[0] / cfg.range_bin_m,
            doppler_bin: self.full.then(|| self.x[1] / cfg.velocity_bin_mps),
            weight: self.amplitude,
        }
    }
}

/// Whether `p` is symmetric positive definite (Sylvester's criterion).
pub fn is_spd(p: &Mat3) -> bool {
    let scale = p.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let sym = (0..3).all(|i| (0..i).all(|j| (p[i][j] - p[j][i]).abs() <= 1e-9 * scale));
    let m1 = p[0][0];
    let m2 = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let m3 = p[0][0] * (p[1][1] * p[2][2] - p[1][2] * p[2][1]) - p[0][1] * (p[1][0] * p[2][2] - p[1][2] * p[2][0]) + p[0][2] * (p[1][0] * p[2][1] - p[1][1] * p[2][0]);
    sym && m1 > 0.0 && m2 > 0.0 && m3 > 0.0
}

/// Gate-normalized distance between a track and a measurement.
fn gate_distance(t: &Track, z: &Measurement, cfg: &TrackConfig) -> f64 {
    let dr = (z.distance - t.x[0]).abs() / (cfg.gate_bins.0 * cfg.range_bin_m);
    if !t.full {
        return dr;
    }
    let dv = wrap(z.velocity - t.x[1], cfg.velocity_span).abs() / (cfg.gate_bins.1 * cfg.velocity_bin_mps);
    dr.max(dv)
}

/// Greedy nearest-neighbour matching inside the gate. Returns
/// `(track index, measurement index)` pairs; ties go to the lower track id.
pub fn associate(tracks: &[Track], meas: &[Measurement], cfg: &TrackConfig) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        for (mi, z) in meas.iter().enumerate() {
            let d = gate_distance(t, z, cfg);
            if d <= 1.0 {
                pairs.push((d, t.id, ti, mi));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.3.cmp(&b.3)));
    let mut used_t = vec![false; tracks.len()];
    let mut used_m = vec![false; meas.len()];
    let mut out = Vec::new();
    for (_, _, ti, mi) in pairs {
        if !used_t[ti] && !used_m[mi] {
            used_t[ti] = true;
            used_m[mi] = true;
            out.push((ti, mi));
        }
    }
    out
}

/// All tracks of one observing terminal.
#[derive(Clone, Debug)]
pub struct Tracker {
    pub cfg: TrackConfig,
    pub tracks: Vec<Track>,
    next_id: usize,
}

/// Outcome of one tracker step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// `(track id, measurement index)` of updated tracks.
    pub matched: Vec<(usize, usize)>,
    /// Ids of tracks created this step.
    pub created: Vec<usize>,
    pub dropped: Vec<usize>,
}

impl Tracker {
    pub fn new(cfg: TrackConfig) -> Self {
        Self { cfg, tracks: Vec::new(), next_id: 0 }
    }

    pub fn predict(&mut self, dt: f64) {
        for t in &mut self.tracks {
            t.predict(dt, &self.cfg);
        }
    }

    /// Updates matched tracks, spawns tracks for the rest (`full` decides
    /// whether a new track follows velocity), and drops stale tracks.
    pub fn update<F: Fn(&Measurement) -> bool>(&mut self, meas: &[Measurement], frame: usize, full: F) -> StepReport {
        let pairs = associate(&self.tracks, meas, &self.cfg);
        let mut report = StepReport::default();
        let mut used = vec![false; meas.len()];
        for &(ti, mi) in &pairs {
            self.tracks[ti].update(&meas[mi], frame, &self.cfg);
            used[mi] = true;
            report.matched.push((self.tracks[ti].id, mi));
        }
        for (mi, z) in meas.iter().enumerate() {
            if !used[mi] {
                let id = self.next_id;
                self.next_id += 1;
                self.tracks.push(Track::new(id, z, full(z), frame, &self.cfg));
                report.created.push(id);
            }
        }
        let timeout = self.cfg.timeout;
        report.dropped = self.tracks.iter().filter(|t| frame.saturating_sub(t.last_update) > timeout).map(|t| t.id).collect();
        self.tracks.retain(|t| frame.saturating_sub(t.last_update) <= timeout);
        report
    }

    pub fn get(&self, id: usize) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }
}

/// One row of a track log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackLogRow {
    pub frame: usize,
    pub link: String,
    pub track_id: usize,
    pub raw_distance: f64,
    pub raw_velocity: f64,
    pub fused_distance: f64,
    pub fused_velocity: f64,
    pub true_distance: Option<f64>,
    pub true_velocity: Option<f64>,
}

pub fn write_track_csv<W: Write>(rows: &[TrackLogRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
