//! Closed-form IF synthesis. Each path contributes, per `(m, l_rx, p, n)`,
//!
//! `a * beta[m][p] * e^{j2pi p f_v/P} * e^{j spatial} * e^{j2pi n (f_d + f_D[m][p]) / N}`
//!
//! where the spatial phase is `2pi d_a (tx . departure + rx . arrival)` with
//! element positions in units of `d_a` and directions as sines.

use super::{ChannelError, Direction, IfCube, Path, Scene};
use crate::config::{ArrayGeometry, SystemConfig, Terminal};
use crate::modem::FramePayload;
use crate::scheduler::LatinSchedule;
use ndarray::Array4;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Spatial phase factor of transmit element `tx` and receive element `rx`.
pub fn steering(geom: &ArrayGeometry, tx: usize, rx: usize, departure: Direction, arrival: Direction) -> Complex64 {
    let (tx_x, tx_z) = geom.tx_position(tx);
    let (rx_x, rx_z) = geom.rx_position(rx);
    let phase = tx_x * departure.az + tx_z * departure.el + rx_x * arrival.az + rx_z * arrival.el;
    Complex64::from_polar(1.0, 2.0 * PI * geom.d_a * phase)
}

/// Checks range and field-of-view limits of every path.
pub fn validate_scene(scene: &Scene, cfg: &SystemConfig) -> Result<(), ChannelError> {
    let fov = cfg.geometry.sin_fov() + 1e-9;
    for (index, path) in scene.paths.iter().enumerate() {
        let bin = cfg.range_to_bin(scene.terminal, path.distance);
        if !(0.0..(cfg.n / 2) as f64).contains(&bin) {
            return Err(ChannelError::RangeOutOfBounds { index, bin, limit: cfg.n / 2 });
        }
        for value in [path.departure.az, path.departure.el, path.arrival.az, path.arrival.el] {
            if value.abs() > fov || !value.is_finite() {
                return Err(ChannelError::AngleOutOfBounds { index, value });
            }
        }
    }
    Ok(())
}

fn check_shape(payload: &FramePayload, schedules: &[LatinSchedule], cfg: &SystemConfig) -> Result<(), ChannelError> {
    let ok = schedules.len() == cfg.m
        && schedules.iter().all(|s| s.p() == cfg.p && s.l_tx() == cfg.l_tx())
        && payload.f_d.len() == cfg.m
        && payload.beta.len() == cfg.m
        && payload.f_d.iter().all(|r| r.len() == cfg.p)
        && payload.beta.iter().all(|r| r.len() == cfg.p)
        && payload.f_d.iter().flatten().all(|&f| (f as usize) < cfg.n);
    if ok {
        Ok(())
    } else {
        Err(ChannelError::Shape)
    }
}

/// Per-path, per-fast-time tone `e^{j2pi n f_d / N}`.
fn range_tones(paths: &[Path], term: Terminal, cfg: &SystemConfig) -> Vec<Vec<Complex64>> {
    let n = cfg.n;
    paths
        .iter()
        .map(|path| {
            let f = cfg.range_to_bin(term, path.distance);
            (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / n as f64)).collect()
        })
        .collect()
}

/// Synthesizes the noiseless IF cube of `scene`.
pub fn synth_if(scene: &Scene, payload: &FramePayload, schedules: &[LatinSchedule], cfg: &SystemConfig) -> Result<IfCube, ChannelError> {
    validate_scene(scene, cfg)?;
    check_shape(payload, schedules, cfg)?;
    let (m_n, l_rx, p_n, n) = (cfg.m, cfg.l_rx(), cfg.p, cfg.n);
    let term = scene.terminal;
    let tones = range_tones(&scene.paths, term, cfg);
    let unit: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64)).collect();
    let doppler: Vec<Vec<Complex64>> = scene
        .paths
        .iter()
        .map(|path| {
            let fv = cfg.velocity_to_bin(term, path.velocity);
            (0..p_n).map(|p| Complex64::from_polar(1.0, 2.0 * PI * p as f64 * fv / p_n as f64)).collect()
        })
        .collect();

    let mut data = vec![Complex64::new(0.0, 0.0); m_n * l_rx * p_n * n];
    data.par_chunks_mut(p_n * n).enumerate().for_each(|(plane, out)| {
        let (m, r) = (plane / l_rx, plane % l_rx);
        let sched = &schedules[m];
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for p in 0..p_n {
            let tx = sched.antenna_at(p);
            acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
            for (k, path) in scene.paths.iter().enumerate() {
                let c = path.amplitude * doppler[k][p] * steering(&cfg.geometry, tx, r, path.departure, path.arrival);
                for (a, t) in acc.iter_mut().zip(&tones[k]) {
                    *a += c * t;
                }
            }
            let beta = payload.beta[m][p];
            let f_d = payload.f_d[m][p] as usize;
            let row = &mut out[p * n..(p + 1) * n];
            for (i, (o, a)) in row.iter_mut().zip(&acc).enumerate() {
                *o = beta * a * unit[(f_d * i) % n];
            }
        }
    });
    let data = Array4::from_shape_vec((m_n, l_rx, p_n, n), data).expect("cube shape");
    Ok(IfCube { data })
}

fn synth_for(scene: &Scene, wanted: Terminal, payload: &FramePayload, schedules: &[LatinSchedule], cfg: &SystemConfig) -> Result<IfCube, ChannelError> {
    if scene.terminal != wanted {
        return Err(ChannelError::WrongTerminal { scene: scene.terminal, wanted });
    }
    synth_if(scene, payload, schedules, cfg)
}

/// Round-trip echoes at the active terminal.
pub fn synth_if_at(scene: &Scene, payload: &FramePayload, schedules: &[LatinSchedule], cfg: &SystemConfig) -> Result<IfCube, ChannelError> {
    synth_for(scene, Terminal::Active, payload, schedules, cfg)
}

/// One-way paths at the passive terminal.
pub fn synth_if_pt(scene: &Scene, payload: &FramePayload, schedules: &[LatinSchedule], cfg: &SystemConfig) -> Result<IfCube, ChannelError> {
    synth_for(scene, Terminal::Passive, payload, schedules, cfg)
}
