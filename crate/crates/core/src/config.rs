//! System parameters, L-shaped array geometry and the sensing bounds that
//! follow from them.
//!
//! Timing is stored as exact rationals in units of the sample period `1/fs`.
//! The default parameter set is the 77 GHz, 640 MHz, 20 MHz configuration with
//! `T = 51.2 us`, a chirp of `64/60 T`, a slot of `76/60 T`, `P = 120`, three
//! resource blocks and a 3 x 15 L-shaped array.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub type Rational = Ratio<i64>;

/// Speed of light used everywhere [m/s].
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("sampling rate {fs} Hz exceeds sweep bandwidth {bandwidth} Hz")]
    SampleRateAboveBandwidth { fs: u64, bandwidth: u64 },
    #[error("fast-time sample count fs*T = {0} is not an integer")]
    FractionalSampleCount(f64),
    #[error("P = {p} is not divisible by L_tx = {l_tx}")]
    Divisibility { p: usize, l_tx: usize },
    #[error("guard interval holds {fit} resource blocks but M = {m}")]
    RbFit { fit: usize, m: usize },
    #[error("chirp duration must not be shorter than the sampling interval T")]
    ChirpTooShort,
    #[error("slot duration is shorter than the chirp")]
    SlotTooShort,
    #[error("DPSK order {0} is not a power of two >= 2")]
    DpskOrder(usize),
    #[error("cannot parse time expression `{0}`")]
    TimeExpr(String),
    #[error("config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which end of a link is processing: the active terminal senses its own
/// round-trip echoes, the passive terminal sees one-way paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminal {
    Active,
    Passive,
}

impl Terminal {
    /// Path-length factor: 2 for round trip, 1 for one way.
    pub fn path_factor(self) -> f64 {
        match self {
            Terminal::Active => 2.0,
            Terminal::Passive => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
}

/// L-shaped transmit and receive ULAs in the x-z plane sharing a corner
/// element. Element positions are in units of `d_a` wavelengths.
///
/// Global index order per array: x-axis elements from the farthest to the
/// corner, then z-axis elements moving away from the corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub tx_x: usize,
    pub tx_z: usize,
    pub rx_x: usize,
    pub rx_z: usize,
    /// Element spacing [wavelengths].
    pub d_a: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self { tx_x: 2, tx_z: 2, rx_x: 8, rx_z: 8, d_a: 0.5774 }
    }
}

fn axis_index(len_x: usize, len_z: usize, l: usize, axis: Axis) -> Option<usize> {
    let corner = len_x - 1;
    match axis {
        Axis::X if l <= corner => Some(corner - l),
        Axis::Z if l >= corner && l < len_x + len_z - 1 => Some(l - corner),
        _ => None,
    }
}

fn global_index(len_x: usize, axis: Axis, a: usize) -> usize {
    match axis {
        Axis::X => len_x - 1 - a,
        Axis::Z => len_x - 1 + a,
    }
}

impl ArrayGeometry {
    pub fn n_tx(&self) -> usize {
        self.tx_x + self.tx_z - 1
    }

    pub fn n_rx(&self) -> usize {
        self.rx_x + self.rx_z - 1
    }

    pub fn n_virtual(&self) -> usize {
        self.n_tx() * self.n_rx()
    }

    pub fn tx_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.tx_x,
            Axis::Z => self.tx_z,
        }
    }

    pub fn rx_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.rx_x,
            Axis::Z => self.rx_z,
        }
    }

    /// Per-axis index of transmit element `l`, `None` if it is not on `axis`.
    pub fn tx_axis_index(&self, l: usize, axis: Axis) -> Option<usize> {
        axis_index(self.tx_x, self.tx_z, l, axis)
    }

    pub fn rx_axis_index(&self, l: usize, axis: Axis) -> Option<usize> {
        axis_index(self.rx_x, self.rx_z, l, axis)
    }

    pub fn tx_global(&self, axis: Axis, a: usize) -> usize {
        global_index(self.tx_x, axis, a)
    }

    pub fn rx_global(&self, axis: Axis, a: usize) -> usize {
        global_index(self.rx_x, axis, a)
    }

    /// Transmit element position `(x, z)` in units of `d_a`. Adjacent transmit
    /// elements are `L_rx` receive spacings apart on each axis.
    pub fn tx_position(&self, l: usize) -> (f64, f64) {
        match self.tx_axis_index(l, Axis::X) {
            Some(a) => ((a * self.rx_x) as f64, 0.0),
            None => (0.0, (self.tx_axis_index(l, Axis::Z).unwrap() * self.rx_z) as f64),
        }
    }

    pub fn rx_position(&self, l: usize) -> (f64, f64) {
        match self.rx_axis_index(l, Axis::X) {
            Some(a) => (a as f64, 0.0),
            None => (0.0, self.rx_axis_index(l, Axis::Z).unwrap() as f64),
        }
    }

    /// Largest direction sine the array can resolve without grating lobes.
    pub fn sin_fov(&self) -> f64 {
        (0.5 / self.d_a).min(1.0)
    }
}

/// Time given either as a number of microseconds or as a product/quotient of
/// decimals such as `"64/60*51.2"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Micros(f64),
    Expr(String),
}

impl TimeSpec {
    pub fn expr(s: &str) -> Self {
        TimeSpec::Expr(s.to_string())
    }

    /// Exact value in microseconds.
    pub fn micros(&self) -> Result<Rational, ConfigError> {
        match self {
            TimeSpec::Micros(v) => parse_time_expr(&format!("{v}")),
            TimeSpec::Expr(s) => parse_time_expr(s),
        }
    }
}

fn parse_decimal(tok: &str) -> Option<Rational> {
    let tok = tok.trim();
    if tok.is_empty() {
        return None;
    }
    let (int, frac) = match tok.split_once('.') {
        Some((i, f)) => (i, f),
        None => (tok, ""),
    };
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 12 {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: i64 = digits.parse().ok()?;
    Some(Rational::new(num, 10i64.pow(frac.len() as u32)))
}

/// Parses `a*b/c...` left to right into an exact rational.
pub fn parse_time_expr(s: &str) -> Result<Rational, ConfigError> {
    let err = || ConfigError::TimeExpr(s.to_string());
    let mut acc: Option<Rational> = None;
    let mut op = '*';
    let mut start = 0;
    let bytes: Vec<char> = s.chars().collect();
    for i in 0..=bytes.len() {
        if i == bytes.len() || bytes[i] == '*' || bytes[i] == '/' {
            let tok: String = bytes[start..i].iter().collect();
            let v = parse_decimal(&tok).ok_or_else(err)?;
            acc = Some(match (acc, op) {
                (None, _) => v,
                (Some(a), '*') => a * v,
                (Some(a), _) => {
                    if v.is_zero() {
                        return Err(err());
                    }
                    a / v
                }
            });
            if i < bytes.len() {
                op = bytes[i];
            }
            start = i + 1;
        }
    }
    acc.ok_or_else(err)
}

/// User-facing parameters. Every field is optional and defaults to the
/// reference configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub fc_hz: Option<f64>,
    pub bandwidth_hz: Option<u64>,
    pub fs_hz: Option<u64>,
    /// Effective sampling interval T.
    pub t_us: Option<TimeSpec>,
    /// Chirp duration.
    pub t_chirp_us: Option<TimeSpec>,
    /// Slot duration; ignored when `t_gi_us` is given.
    pub t_slot_us: Option<TimeSpec>,
    /// Guard interval; the slot becomes chirp + guard.
    pub t_gi_us: Option<TimeSpec>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub dpsk_order: Option<usize>,
    pub geometry: Option<ArrayGeometry>,
}

impl RawConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json(&s)
    }
}

/// Validated system configuration. Times are exact multiples of `1/fs`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub fc: f64,
    pub bandwidth: u64,
    pub fs: u64,
    /// Fast-time samples per slot, `fs*T`.
    pub n: usize,
    /// Chirps per frame.
    pub p: usize,
    /// Chirp groups (resource blocks in use).
    pub m: usize,
    /// DPSK order.
    pub d: usize,
    pub t: Rational,
    pub t_chirp: Rational,
    pub t_gi: Rational,
    pub t_slot: Rational,
    /// Maximum unambiguous delay.
    pub td: Rational,
    pub geometry: ArrayGeometry,
}

impl Default for SystemConfig {
    fn default() -> Self {
        derive_config(&RawConfig::default()).expect("reference configuration is valid")
    }
}

fn to_samples(us: Rational, fs: u64) -> Rational {
    us * Rational::new(fs as i64, 1_000_000)
}

/// Validates raw parameters and fills in all derived quantities.
pub fn derive_config(raw: &RawConfig) -> Result<SystemConfig, ConfigError> {
    let fc = raw.fc_hz.unwrap_or(77e9);
    let bandwidth = raw.bandwidth_hz.unwrap_or(640_000_000);
    let fs = raw.fs_hz.unwrap_or(20_000_000);
    let p = raw.p.unwrap_or(120);
    let m = raw.m.unwrap_or(3);
    let d = raw.dpsk_order.unwrap_or(8);
    let geometry = raw.geometry.clone().unwrap_or_default();

    if !(fc > 0.0) {
        return Err(ConfigError::NonPositive("fc_hz"));
    }
    if bandwidth == 0 {
        return Err(ConfigError::NonPositive("bandwidth_hz"));
    }
    if fs == 0 {
        return Err(ConfigError::NonPositive("fs_hz"));
    }
    if p == 0 {
        return Err(ConfigError::NonPositive("p"));
    }
    if m == 0 {
        return Err(ConfigError::NonPositive("m"));
    }
    if geometry.tx_x == 0 || geometry.tx_z == 0 || geometry.rx_x == 0 || geometry.rx_z == 0 {
        return Err(ConfigError::NonPositive("geometry"));
    }
    if !(geometry.d_a > 0.0) {
        return Err(ConfigError::NonPositive("d_a"));
    }
    if d < 2 || !d.is_power_of_two() {
        return Err(ConfigError::DpskOrder(d));
    }
    if fs > bandwidth {
        return Err(ConfigError::SampleRateAboveBandwidth { fs, bandwidth });
    }

    let t_us = raw.t_us.clone().unwrap_or(TimeSpec::expr("51.2")).micros()?;
    let t_chirp_us = raw.t_chirp_us.clone().unwrap_or(TimeSpec::expr("64/60*51.2")).micros()?;
    let t = to_samples(t_us, fs);
    let t_chirp = to_samples(t_chirp_us, fs);
    if t <= Rational::zero() {
        return Err(ConfigError::NonPositive("t_us"));
    }
    if !t.is_integer() {
        return Err(ConfigError::FractionalSampleCount(t.to_f64().unwrap_or(f64::NAN)));
    }
    if t_chirp < t {
        return Err(ConfigError::ChirpTooShort);
    }
    let t_slot = match (&raw.t_gi_us, &raw.t_slot_us) {
        (Some(gi), _) => t_chirp + to_samples(gi.micros()?, fs),
        (None, Some(slot)) => to_samples(slot.micros()?, fs),
        (None, None) => to_samples(TimeSpec::expr("76/60*51.2").micros()?, fs),
    };
    if t_slot < t_chirp {
        return Err(ConfigError::SlotTooShort);
    }
    let t_gi = t_slot - t_chirp;
    // Td = fs / alpha = fs * T_chirp / B, here in sample units.
    let td = t_chirp * Rational::new(fs as i64, bandwidth as i64);

    let l_tx = geometry.n_tx();
    if !p.is_multiple_of(l_tx) {
        return Err(ConfigError::Divisibility { p, l_tx });
    }
    let fit = (t_gi / (td * 2)).floor().to_integer() as usize;
    if fit < m {
        return Err(ConfigError::RbFit { fit, m });
    }

    Ok(SystemConfig {
        fc,
        bandwidth,
        fs,
        n: t.to_integer() as usize,
        p,
        m,
        d,
        t,
        t_chirp,
        t_gi,
        t_slot,
        td,
        geometry,
    })
}

impl SystemConfig {
    pub fn ts(&self) -> f64 {
        1.0 / self.fs as f64
    }

    /// Converts a sample-unit time to seconds.
    pub fn seconds(&self, r: Rational) -> f64 {
        r.to_f64().unwrap() / self.fs as f64
    }

    /// Chirp rate B / T_chirp [Hz/s].
    pub fn alpha(&self) -> f64 {
        self.bandwidth as f64 / self.seconds(self.t_chirp)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc
    }

    pub fn slot_seconds(&self) -> f64 {
        self.seconds(self.t_slot)
    }

    /// Frame duration P * T_slot [s].
    pub fn frame_seconds(&self) -> f64 {
        self.p as f64 * self.slot_seconds()
    }

    pub fn l_tx(&self) -> usize {
        self.geometry.n_tx()
    }

    pub fn l_rx(&self) -> usize {
        self.geometry.n_rx()
    }

    /// Resource blocks a slot can hold, floor(T_slot / (2 Td)).
    pub fn n_rb(&self) -> usize {
        (self.t_slot / (self.td * 2)).floor().to_integer() as usize
    }

    /// Time offset of resource block `m` inside the slot, in samples.
    pub fn rb_offset(&self, m: usize) -> Rational {
        self.td * 2 * m as i64
    }

    pub fn delay_bits(&self) -> usize {
        floor_log2(self.n / 2)
    }

    pub fn dpsk_bits(&self) -> usize {
        floor_log2(self.d)
    }

    /// Delay-domain symbols per frame.
    pub fn n_delay_symbols(&self) -> usize {
        self.m * self.p
    }

    /// DPSK increments per frame (the first chirp of each antenna stream is
    /// the phase reference).
    pub fn n_dpsk_symbols(&self) -> usize {
        self.m * (self.p - self.l_tx())
    }

    /// Payload bits per frame.
    pub fn n_bit(&self) -> usize {
        self.n_delay_symbols() * self.delay_bits() + self.n_dpsk_symbols() * self.dpsk_bits()
    }

    /// Bit rate N_bit / (P T_slot) [bit/s].
    pub fn bit_rate(&self) -> f64 {
        self.n_bit() as f64 / self.frame_seconds()
    }

    /// Metres per range bin.
    pub fn range_bin_m(&self, term: Terminal) -> f64 {
        SPEED_OF_LIGHT / (term.path_factor() * self.n as f64 * self.ts() * self.alpha())
    }

    /// Metres per second per Doppler bin.
    pub fn velocity_bin_mps(&self, term: Terminal) -> f64 {
        SPEED_OF_LIGHT / (term.path_factor() * self.p as f64 * self.slot_seconds() * self.fc)
    }

    /// Normalized distance frequency of a path of length `d` [m].
    pub fn range_to_bin(&self, term: Terminal, d: f64) -> f64 {
        d / self.range_bin_m(term)
    }

    pub fn bin_to_range(&self, term: Terminal, bin: f64) -> f64 {
        bin * self.range_bin_m(term)
    }

    /// Normalized Doppler frequency (signed, not wrapped) of velocity `v`.
    pub fn velocity_to_bin(&self, term: Terminal, v: f64) -> f64 {
        v / self.velocity_bin_mps(term)
    }

    /// Velocity of a Doppler bin on the `P`-point grid, mapped to the signed
    /// interval `[-P/2, P/2)`.
    pub fn bin_to_velocity(&self, term: Terminal, bin: f64) -> f64 {
        let p = self.p as f64;
        let mut b = bin.rem_euclid(p);
        if b >= p / 2.0 {
            b -= p;
        }
        b * self.velocity_bin_mps(term)
    }

    /// Half-width of the unambiguous velocity interval.
    pub fn velocity_limit(&self, term: Terminal) -> f64 {
        self.velocity_bin_mps(term) * self.p as f64 / 2.0
    }
}

fn floor_log2(x: usize) -> usize {
    if x == 0 {
        0
    } else {
        (usize::BITS - 1 - x.leading_zeros()) as usize
    }
}

/// Resolution and unambiguous interval of one parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub resolution: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TerminalBounds {
    /// Distance [m].
    pub distance: Bound,
    /// Radial velocity [m/s].
    pub velocity: Bound,
    /// Elevation direction sine.
    pub elevation: Bound,
    /// Azimuth direction sine.
    pub azimuth: Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SensingBounds {
    pub active: TerminalBounds,
    pub passive: TerminalBounds,
}

impl SensingBounds {
    pub fn for_terminal(&self, term: Terminal) -> &TerminalBounds {
        match term {
            Terminal::Active => &self.active,
            Terminal::Passive => &self.passive,
        }
    }
}

/// Closed-form resolution and range table for both terminal types. Angle
/// entries are in direction-sine units at broadside.
pub fn sensing_bounds(cfg: &SystemConfig) -> SensingBounds {
    let c = SPEED_OF_LIGHT;
    let b = cfg.bandwidth as f64;
    let fs = cfg.fs as f64;
    let t = cfg.seconds(cfg.t);
    let t_chirp = cfg.seconds(cfg.t_chirp);
    let t_slot = cfg.slot_seconds();
    let geo = &cfg.geometry;
    let sin_max = geo.sin_fov();

    let d_res_at = c * t_chirp / (2.0 * b * t);
    let d_max_at = c * t * fs / (2.0 * (b - fs));
    let v_res_at = c / (2.0 * cfg.p as f64 * t_slot * cfg.fc);
    let v_max_at = c / (4.0 * t_slot * cfg.fc);
    let angle = |l: usize| Bound { resolution: 1.0 / (l as f64 * geo.d_a), min: -sin_max, max: sin_max };

    let active = TerminalBounds {
        distance: Bound { resolution: d_res_at, min: 0.0, max: d_max_at },
        velocity: Bound { resolution: v_res_at, min: -v_max_at, max: v_max_at },
        elevation: angle(geo.tx_z * geo.rx_z),
        azimuth: angle(geo.tx_x * geo.rx_x),
    };
    let passive = TerminalBounds {
        distance: Bound { resolution: 2.0 * d_res_at, min: 0.0, max: 2.0 * d_max_at },
        velocity: Bound { resolution: 2.0 * v_res_at, min: -2.0 * v_max_at, max: 2.0 * v_max_at },
        elevation: angle(geo.rx_z),
        azimuth: angle(geo.rx_x),
    };
    SensingBounds { active, passive }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_expressions_are_exact() {
        assert_eq!(parse_time_expr("51.2").unwrap(), Rational::new(256, 5));
        assert_eq!(parse_time_expr("64/60*51.2").unwrap(), Rational::new(4096, 75));
        assert!(parse_time_expr("1/0").is_err());
        assert!(parse_time_expr("a").is_err());
        assert!(parse_time_expr("").is_err());
    }

    #[test]
    fn reference_config_derives() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.n, 1024);
        assert_eq!(cfg.td, Rational::new(512, 15));
        assert_eq!(cfg.td, cfg.t * Rational::new(2, 60));
        assert_eq!(cfg.n_rb(), 19);
        assert_eq!(cfg.t_gi, cfg.td * 6);
    }

    #[test]
    fn td_times_alpha_is_fs() {
        let cfg = SystemConfig::default();
        let td_s = cfg.seconds(cfg.td);
        assert!((td_s * cfg.alpha() / cfg.fs as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_divisibility() {
        let raw = RawConfig { p: Some(121), ..Default::default() };
        assert!(matches!(derive_config(&raw), Err(ConfigError::Divisibility { .. })));
    }

    #[test]
    fn rejects_rb_overflow() {
        let raw = RawConfig { m: Some(4), ..Default::default() };
        assert!(matches!(derive_config(&raw), Err(ConfigError::RbFit { .. })));
    }

    #[test]
    fn rejects_fractional_n() {
        let raw = RawConfig { t_us: Some(TimeSpec::expr("51.23")), ..Default::default() };
        assert!(matches!(derive_config(&raw), Err(ConfigError::FractionalSampleCount(_))));
    }

    #[test]
    fn fs_equal_bandwidth_gives_td_equal_chirp() {
        let raw = RawConfig {
            bandwidth_hz: Some(20_000_000),
            t_chirp_us: Some(TimeSpec::expr("51.2")),
            t_slot_us: Some(TimeSpec::expr("51.2*4")),
            m: Some(1),
            ..Default::default()
        };
        let cfg = derive_config(&raw).unwrap();
        assert_eq!(cfg.td, cfg.t);
        assert_eq!(cfg.n as f64, cfg.bandwidth as f64 * cfg.seconds(cfg.t));
    }

    #[test]
    fn geometry_index_maps_are_bijective() {
        let g = ArrayGeometry { tx_x: 3, tx_z: 2, rx_x: 5, rx_z: 4, d_a: 0.5 };
        assert_eq!(g.n_tx(), 4);
        assert_eq!(g.n_rx(), 8);
        for axis in [Axis::X, Axis::Z] {
            for a in 0..g.rx_len(axis) {
                let l = g.rx_global(axis, a);
                assert_eq!(g.rx_axis_index(l, axis), Some(a));
            }
            for a in 0..g.tx_len(axis) {
                let l = g.tx_global(axis, a);
                assert_eq!(g.tx_axis_index(l, axis), Some(a));
            }
        }
        let corner = g.rx_x - 1;
        assert_eq!(g.rx_position(corner), (0.0, 0.0));
        assert_eq!(g.tx_position(0), (10.0, 0.0));
        assert_eq!(g.tx_position(3), (0.0, 4.0));
    }

    #[test]
    fn json_defaults_and_overrides() {
        let raw = RawConfig::from_json(r#"{"p": 24, "t_us": "12.8", "dpsk_order": 4}"#).unwrap();
        let cfg = derive_config(&raw).unwrap();
        assert_eq!(cfg.p, 24);
        assert_eq!(cfg.n, 256);
        assert_eq!(cfg.d, 4);
        assert!(RawConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }
}
