//! Additive noise. Each `(m, l_rx)` plane draws from its own ChaCha8 stream so
//! results do not depend on the worker count.

use super::clutter::{add_clutter, clutter_footprint, ClutterFootprint};
use super::IfCube;
use crate::config::{SystemConfig, Terminal};
use crate::scheduler::LatinSchedule;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    Gaussian,
    Urban,
}

impl std::str::FromStr for NoiseMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(NoiseMode::Gaussian),
            "urban" => Ok(NoiseMode::Urban),
            _ => Err(format!("unknown noise mode '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    /// Per-sample SNR of a unit-amplitude path [dB]; `None` adds no noise.
    pub snr_db: Option<f64>,
    /// Mean clutter gain magnitude (urban mode).
    pub clutter_mean: f64,
    pub seed: u64,
    /// Seed of the clutter footprint when it should stay fixed across frames
    /// with fresh noise; defaults to `seed`.
    pub clutter_seed: Option<u64>,
}

impl NoiseSpec {
    pub fn gaussian(snr_db: f64, seed: u64) -> Self {
        Self { mode: NoiseMode::Gaussian, snr_db: Some(snr_db), clutter_mean: DEFAULT_CLUTTER_MEAN, seed, clutter_seed: None }
    }

    pub fn urban(snr_db: f64, seed: u64) -> Self {
        Self { mode: NoiseMode::Urban, ..Self::gaussian(snr_db, seed) }
    }

    /// Complex noise variance per sample.
    pub fn variance(&self) -> f64 {
        self.snr_db.map_or(0.0, |s| 10f64.powf(-s / 10.0))
    }
}

/// Mean clutter magnitude, 10 dB above a unit path.
pub const DEFAULT_CLUTTER_MEAN: f64 = 3.162;

/// Adds circular complex Gaussian noise of variance `variance`.
pub fn add_awgn(cube: &mut IfCube, variance: f64, seed: u64) {
    if variance <= 0.0 {
        return;
    }
    let sigma = (variance / 2.0).sqrt();
    let plane = cube.p() * cube.n();
    let slice = cube.data.as_slice_mut().expect("standard layout");
    slice.par_chunks_mut(plane).enumerate().for_each(|(idx, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        for z in chunk {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(re, im) * sigma;
        }
    });
}

/// Applies the noise model in place; returns the clutter footprint in urban
/// mode.
pub fn inject_noise(cube: &mut IfCube, spec: &NoiseSpec, cfg: &SystemConfig, schedules: &[LatinSchedule], terminal: Terminal) -> Option<ClutterFootprint> {
    let fp = match spec.mode {
        NoiseMode::Gaussian => None,
        NoiseMode::Urban => {
            let fp = clutter_footprint(cfg, terminal, spec.clutter_mean, spec.clutter_seed.unwrap_or(spec.seed));
            add_clutter(cube, &fp, cfg, schedules);
            Some(fp)
        }
    };
    add_awgn(cube, spec.variance(), spec.seed);
    fp
}
