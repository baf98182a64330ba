//! Sampled IF cubes for active (round-trip) and passive (one-way) terminals,
//! plus noise, urban clutter, a literal time-domain mixer used as an oracle,
//! and the binary cube format.

pub mod clutter;
pub mod io;
pub mod mixer;
pub mod noise;
pub mod synth;

pub use clutter::{clutter_footprint, ClutterFootprint};
pub use noise::{inject_noise, NoiseMode, NoiseSpec};
pub use synth::{synth_if, synth_if_at, synth_if_pt};

use crate::config::Terminal;
use ndarray::Array4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("scene is for {scene:?} but {wanted:?} synthesis was requested")]
    WrongTerminal { scene: Terminal, wanted: Terminal },
    #[error("path {index}: range bin {bin:.2} outside [0, {limit})")]
    RangeOutOfBounds { index: usize, bin: f64, limit: usize },
    #[error("path {index}: direction sine {value:.3} outside the field of view")]
    AngleOutOfBounds { index: usize, value: f64 },
    #[error("payload or schedule shape does not match the configuration")]
    Shape,
}

/// Direction sines along the array x axis (azimuth) and z axis (elevation).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub az: f64,
    pub el: f64,
}

impl Direction {
    pub fn new(az: f64, el: f64) -> Self {
        Self { az, el }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    /// Round-trip echo seen by the active terminal.
    Echo,
    /// Direct path from the active to the passive terminal.
    LineOfSight,
    /// Active terminal to a reflecting target to the passive terminal.
    Reflected,
}

/// One propagation path. `distance` is the one-way target distance for
/// echoes and the total path length for passive-terminal paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub kind: PathKind,
    pub distance: f64,
    /// Rate of change of `distance` [m/s].
    pub velocity: f64,
    pub departure: Direction,
    pub arrival: Direction,
    pub amplitude: Complex64,
}

impl Path {
    /// Round-trip echo from a target in direction `dir`.
    pub fn echo(distance: f64, velocity: f64, dir: Direction, amplitude: Complex64) -> Self {
        Self { kind: PathKind::Echo, distance, velocity, departure: dir, arrival: dir, amplitude }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub terminal: Terminal,
    pub paths: Vec<Path>,
}

/// Complex IF samples with axes `(m, l_rx, p, n)`; fast time is contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct IfCube {
    pub data: Array4<Complex64>,
}

impl IfCube {
    pub fn zeros(m: usize, l_rx: usize, n: usize, p: usize) -> Self {
        Self { data: Array4::zeros((m, l_rx, p, n)) }
    }

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

    /// Sample `[m][l_rx][n][p]`.
    pub fn at(&self, m: usize, r: usize, n: usize, p: usize) -> Complex64 {
        self.data[[m, r, p, n]]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Add for &IfCube {
    type Output = IfCube;
    fn add(self, rhs: &IfCube) -> IfCube {
        IfCube { data: &self.data + &rhs.data }
    }
}

impl std::ops::Sub for &IfCube {
    type Output = IfCube;
    fn sub(self, rhs: &IfCube) -> IfCube {
        IfCube { data: &self.data - &rhs.data }
    }
}
