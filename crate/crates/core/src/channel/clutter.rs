//! Urban clutter: a contiguous footprint of strong static reflections in the
//! near range, one on-grid tone per bin with its own random direction.

use super::{Direction, IfCube};
use crate::config::{SystemConfig, Terminal};
use crate::scheduler::LatinSchedule;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::PI;

/// Footprint width range [bins].
pub const FOOTPRINT_BINS: (usize, usize) = (40, 50);
/// Range of the footprint center [m].
pub const FOOTPRINT_CENTER_M: (f64, f64) = (20.0, 30.0);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClutterFootprint {
    /// First range bin covered.
    pub start: usize,
    pub len: usize,
    pub center_m: f64,
    pub gains: Vec<Complex64>,
    pub departure: Vec<Direction>,
    pub arrival: Vec<Direction>,
}

impl ClutterFootprint {
    pub fn bins(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

fn random_direction(rng: &mut ChaCha8Rng, fov: f64) -> Direction {
    Direction::new(rng.gen_range(-fov..=fov), rng.gen_range(-fov..=fov))
}

/// Draws a footprint. Gain magnitudes are Rayleigh with mean `mean_gain`.
pub fn clutter_footprint(cfg: &SystemConfig, terminal: Terminal, mean_gain: f64, seed: u64) -> ClutterFootprint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let len = rng.gen_range(FOOTPRINT_BINS.0..=FOOTPRINT_BINS.1).min(cfg.n / 2);
    let center_m = rng.gen_range(FOOTPRINT_CENTER_M.0..=FOOTPRINT_CENTER_M.1);
    let center = cfg.range_to_bin(terminal, center_m);
    let start = (center - len as f64 / 2.0).round().clamp(0.0, (cfg.n / 2 - len) as f64) as usize;
    let scale = mean_gain / (PI / 2.0).sqrt();
    let fov = cfg.geometry.sin_fov();
    let mut gains = Vec::with_capacity(len);
    let mut departure = Vec::with_capacity(len);
    let mut arrival = Vec::with_capacity(len);
    for _ in 0..len {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        gains.push(Complex64::new(re, im) * scale);
        let dep = random_direction(&mut rng, fov);
        departure.push(dep);
        arrival.push(match terminal {
            Terminal::Active => dep,
            Terminal::Passive => random_direction(&mut rng, fov),
        });
    }
    ClutterFootprint { start, len, center_m, gains, departure, arrival }
}

/// Adds the footprint's static tones to `cube`.
pub fn add_clutter(cube: &mut IfCube, fp: &ClutterFootprint, cfg: &SystemConfig, schedules: &[LatinSchedule]) {
    let n = cube.n();
    let tones: Vec<Vec<Complex64>> = fp
        .bins()
        .map(|b| (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * (b * i % n) as f64 / n as f64)).collect())
        .collect();
    for m in 0..cube.m() {
        for r in 0..cube.l_rx() {
            for p in 0..cube.p() {
                let tx = schedules[m].antenna_at(p);
                let mut row = cube.data.slice_mut(ndarray::s![m, r, p, ..]);
                for (k, tone) in tones.iter().enumerate() {
                    let c = fp.gains[k] * super::synth::steering(&cfg.geometry, tx, r, fp.departure[k], fp.arrival[k]);
                    for (o, t) in row.iter_mut().zip(tone) {
                        *o += c * t;
                    }
                }
            }
        }
    }
}
