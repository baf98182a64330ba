//! Payload mapping onto the chirp delay grid and per-antenna DPSK streams.
//!
//! Bits are consumed least-significant first: all delay symbols (group-major,
//! then slot), then all DPSK increments (group, antenna, stream index). DPSK
//! increments are Gray-labelled D-th roots of unity; each antenna stream
//! starts from the reference symbol 1.

use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::scheduler::LatinSchedule;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModemError {
    #[error("payload has {got} bits, frame carries {expected}")]
    BitCount { got: usize, expected: usize },
    #[error("schedule set does not match the configuration")]
    ScheduleShape,
    #[error("bad hex payload: {0}")]
    Hex(String),
}

/// One frame of modulated data.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePayload {
    /// Delay-grid symbol per `[m][p]`, in `0..N/2`.
    pub f_d: Vec<Vec<u32>>,
    /// Unit-modulus amplitude per `[m][p]`.
    pub beta: Vec<Vec<Complex64>>,
    /// DPSK increment indices per `[m][l_tx][p' - 1]`, each in `0..D`.
    pub increments: Vec<Vec<Vec<u32>>>,
    pub raw_bits: Vec<bool>,
    pub d: usize,
}

impl FramePayload {
    /// Unmodulated frame: zero delay, unit amplitude.
    pub fn unmodulated(cfg: &SystemConfig) -> Self {
        let per_stream = cfg.p / cfg.l_tx();
        Self {
            f_d: vec![vec![0; cfg.p]; cfg.m],
            beta: vec![vec![Complex64::new(1.0, 0.0); cfg.p]; cfg.m],
            increments: vec![vec![vec![0; per_stream - 1]; cfg.l_tx()]; cfg.m],
            raw_bits: vec![false; cfg.n_bit()],
            d: cfg.d,
        }
    }
}

pub fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

pub fn gray_inverse(mut g: u32) -> u32 {
    let mut k = 0;
    while g != 0 {
        k ^= g;
        g >>= 1;
    }
    k
}

/// The `k`-th D-th root of unity.
pub fn dpsk_point(k: u32, d: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

/// Nearest constellation index to the phase of `z`.
pub fn dpsk_decide(z: Complex64, d: usize) -> u32 {
    let k = (z.arg() / (2.0 * PI) * d as f64).round() as i64;
    k.rem_euclid(d as i64) as u32
}

fn take(bits: &[bool], pos: &mut usize, width: usize) -> u32 {
    let mut v = 0;
    for i in 0..width {
        if bits[*pos + i] {
            v |= 1 << i;
        }
    }
    *pos += width;
    v
}

fn put(out: &mut Vec<bool>, v: u32, width: usize) {
    out.extend((0..width).map(|i| (v >> i) & 1 == 1));
}

/// Maps exactly `N_bit` bits onto the delay grid and DPSK streams.
pub fn encode_frame(bits: &[bool], cfg: &SystemConfig, schedules: &[LatinSchedule]) -> Result<FramePayload, ModemError> {
    if bits.len() != cfg.n_bit() {
        return Err(ModemError::BitCount { got: bits.len(), expected: cfg.n_bit() });
    }
    let l_tx = cfg.l_tx();
    if schedules.len() != cfg.m || schedules.iter().any(|s| s.p() != cfg.p || s.l_tx() != l_tx) {
        return Err(ModemError::ScheduleShape);
    }
    let wd = cfg.delay_bits();
    let wb = cfg.dpsk_bits();
    let mut pos = 0;
    let f_d: Vec<Vec<u32>> = (0..cfg.m).map(|_| (0..cfg.p).map(|_| take(bits, &mut pos, wd)).collect()).collect();
    let per_stream = cfg.p / l_tx;
    let increments: Vec<Vec<Vec<u32>>> = (0..cfg.m)
        .map(|_| {
            (0..l_tx)
                .map(|_| (1..per_stream).map(|_| gray_inverse(take(bits, &mut pos, wb))).collect())
                .collect()
        })
        .collect();
    let beta = stream_amplitudes(&increments, schedules, cfg.d);
    Ok(FramePayload { f_d, beta, increments, raw_bits: bits.to_vec(), d: cfg.d })
}

/// Differential recursion: each stream starts at 1 and multiplies by its
/// increments; values are placed at the stream's slots.
pub fn stream_amplitudes(increments: &[Vec<Vec<u32>>], schedules: &[LatinSchedule], d: usize) -> Vec<Vec<Complex64>> {
    increments
        .iter()
        .zip(schedules)
        .map(|(inc_m, sched)| {
            let mut row = vec![Complex64::new(1.0, 0.0); sched.p()];
            for (l, inc) in inc_m.iter().enumerate() {
                let col = sched.column(l);
                let mut b = Complex64::new(1.0, 0.0);
                row[col[0]] = b;
                for (i, &k) in inc.iter().enumerate() {
                    b *= dpsk_point(k, d);
                    row[col[i + 1]] = b;
                }
            }
            row
        })
        .collect()
}

/// Inverse of [`encode_frame`] given decided symbols.
pub fn decode_frame(f_d: &[Vec<u32>], increments: &[Vec<Vec<u32>>], cfg: &SystemConfig) -> Vec<bool> {
    let mut out = Vec::with_capacity(cfg.n_bit());
    for row in f_d {
        for &v in row {
            put(&mut out, v, cfg.delay_bits());
        }
    }
    for inc_m in increments {
        for inc in inc_m {
            for &k in inc {
                put(&mut out, gray(k), cfg.dpsk_bits());
            }
        }
    }
    out
}

/// Hex text of a bit sequence, eight bits per byte, least significant first.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i)))
        .collect();
    hex::encode(bytes)
}

/// Parses hex text into exactly `n_bits` bits.
pub fn bits_from_hex(text: &str, n_bits: usize) -> Result<Vec<bool>, ModemError> {
    let bytes = hex::decode(text.trim()).map_err(|e| ModemError::Hex(e.to_string()))?;
    if bytes.len() * 8 < n_bits {
        return Err(ModemError::BitCount { got: bytes.len() * 8, expected: n_bits });
    }
    Ok((0..n_bits).map(|i| (bytes[i / 8] >> (i % 8)) & 1 == 1).collect())
}

/// Transmitted chirp of one group in one slot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TxChirpDescriptor {
    pub m: usize,
    pub p: usize,
    pub antenna: usize,
    /// Delay-grid offset in fast-time bins (the data symbol itself).
    pub delay_bins: u32,
    /// Physical extra delay [s].
    pub delay_s: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    /// Start of the chirp inside the slot [s].
    pub rb_offset_s: f64,
    /// Instantaneous-frequency slope [Hz/s].
    pub slope: f64,
}

pub fn synthesize_tx(payload: &FramePayload, schedules: &[LatinSchedule], cfg: &SystemConfig) -> Vec<TxChirpDescriptor> {
    let bin_delay = 1.0 / (cfg.n as f64 * cfg.ts() * cfg.alpha());
    let mut out = Vec::with_capacity(cfg.m * cfg.p);
    for (m, sched) in schedules.iter().enumerate() {
        for p in 0..cfg.p {
            let b = payload.beta[m][p];
            out.push(TxChirpDescriptor {
                m,
                p,
                antenna: sched.antenna_at(p),
                delay_bins: payload.f_d[m][p],
                delay_s: payload.f_d[m][p] as f64 * bin_delay,
                beta_re: b.re,
                beta_im: b.im,
                rb_offset_s: cfg.seconds(cfg.rb_offset(m)),
                slope: cfg.alpha(),
            });
        }
    }
    out
}

pub fn write_descriptors_csv<W: Write>(desc: &[TxChirpDescriptor], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in desc {
        w.serialize(d)?;
    }
    w.flush()?;
    Ok(())
}

/// Margins of the two data-spacing constraints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GuardReport {
    /// Worst-case range drift over a frame, in delay bins.
    pub delay_drift_bins: f64,
    /// Grid spacing of the delay symbols (one bin).
    pub delay_spacing_bins: f64,
    pub delay_ok: bool,
    /// Velocity at which the drift reaches one bin [m/s].
    pub critical_velocity: f64,
    /// Half the DPSK phase spacing [rad].
    pub dpsk_half_spacing: f64,
    /// Worst phase drift between two uses of one antenna for a velocity
    /// error of half a resolution cell [rad].
    pub dpsk_drift: f64,
    pub dpsk_ok: bool,
}

/// Checks the delay-grid spacing against range drift over a frame and the
/// DPSK spacing against residual Doppler drift between uses of an antenna.
pub fn modulation_guard_check(cfg: &SystemConfig, v_max: f64) -> GuardReport {
    let per_velocity = cfg.alpha() * cfg.n as f64 * cfg.ts() * 2.0 * cfg.p as f64 * cfg.slot_seconds() / SPEED_OF_LIGHT;
    let drift = per_velocity * v_max.abs();
    let dv = cfg.velocity_bin_mps(crate::config::Terminal::Active) / 2.0;
    let p_bar = (2 * cfg.l_tx() - 1) as f64;
    let dpsk_drift = 4.0 * PI * p_bar * cfg.slot_seconds() * cfg.fc * dv / SPEED_OF_LIGHT;
    let half = PI / cfg.d as f64;
    GuardReport {
        delay_drift_bins: drift,
        delay_spacing_bins: 1.0,
        delay_ok: drift < 1.0,
        critical_velocity: 1.0 / per_velocity,
        dpsk_half_spacing: half,
        dpsk_drift,
        dpsk_ok: dpsk_drift < half,
    }
}
