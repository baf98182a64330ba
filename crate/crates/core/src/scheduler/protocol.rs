//! Four-stage link set-up: resource-block identification, sensing and
//! synchronization, link acknowledgment and steady state.
//!
//! Terminals advance in lockstep. Energies are measured per resource block or
//! per slot and carry exponential noise, so occupancy and OOK decisions are
//! real threshold tests. The two-round delay estimate is taken from a sampled
//! IF tone, not from the injected offset.

use crate::config::{SystemConfig, Terminal};
use crate::receiver::range::estimate_tone;
use crate::scheduler::ook::{bits_word, ook_detect, ook_encode, word_bits};
use crate::scheduler::rb::{detect_occupancy, first_fit};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Stage {
    RbIdentification,
    SensingSync,
    LinkAck,
    SteadyState,
}

impl Stage {
    fn next(self) -> Option<Stage> {
        match self {
            Stage::RbIdentification => Some(Stage::SensingSync),
            Stage::SensingSync => Some(Stage::LinkAck),
            Stage::LinkAck => Some(Stage::SteadyState),
            Stage::SteadyState => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("need {needed} consecutive free resource blocks, none available")]
    NoFreeRb { needed: usize },
    #[error("terminal {terminal} did not acknowledge within {rounds} rounds")]
    AckTimeout { terminal: usize, rounds: usize },
    #[error("illegal stage transition {from:?} -> {to:?}")]
    StageOrder { from: Stage, to: Stage },
    #[error("a world needs at least one passive terminal")]
    NoPassiveTerminal,
    #[error("terminal {terminal} decoded resource block {decoded}, expected {expected}")]
    RbAnnouncement { terminal: usize, decoded: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolState {
    pub terminal: usize,
    pub role: Terminal,
    pub stage: Stage,
    /// Resource blocks carrying the active terminal's chirp groups.
    pub rb_set: Vec<usize>,
    /// Resource block this terminal transmits in (own set for the active
    /// terminal, a single block for passive ones).
    pub own_rbs: Vec<usize>,
    /// Estimated synchronization delay [samples].
    pub sync_delay: Option<f64>,
    acked: bool,
}

impl ProtocolState {
    pub fn new(terminal: usize, role: Terminal) -> Self {
        Self {
            terminal,
            role,
            stage: Stage::RbIdentification,
            rb_set: Vec::new(),
            own_rbs: Vec::new(),
            sync_delay: None,
            acked: false,
        }
    }

    /// Moves to `to`, which must be the immediate successor. Steady state also
    /// requires a completed acknowledgment.
    pub fn advance(&mut self, to: Stage) -> Result<(), ProtocolError> {
        let ok = self.stage.next() == Some(to) && (to != Stage::SteadyState || self.acked);
        if !ok {
            return Err(ProtocolError::StageOrder { from: self.stage, to });
        }
        self.stage = to;
        Ok(())
    }

    pub fn acknowledge(&mut self) {
        self.acked = true;
    }

    pub fn is_acked(&self) -> bool {
        self.acked
    }
}

/// Passive terminal as seen by the protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct PassiveLink {
    /// Active-to-passive distance [m].
    pub distance: f64,
    /// Clock offset of this terminal [samples]; zero under perfect sync.
    pub sync_offset: f64,
    /// Whether the terminal answers the acknowledgment stage.
    pub responsive: bool,
}

#[derive(Clone, Debug)]
pub struct World {
    pub cfg: SystemConfig,
    /// Blocks already used by other systems.
    pub occupied: Vec<usize>,
    pub passive: Vec<PassiveLink>,
    /// Mean noise energy per block or slot, relative to a unit transmission.
    pub noise_energy: f64,
    /// Energy threshold for occupancy and OOK decisions.
    pub threshold: f64,
    pub ack_rounds: usize,
    pub seed: u64,
}

impl World {
    pub fn new(cfg: SystemConfig, passive: Vec<PassiveLink>) -> Self {
        Self { cfg, occupied: Vec::new(), passive, noise_energy: 0.01, threshold: 0.5, ack_rounds: 3, seed: 0 }
    }
}

const ACK_WORD: u64 = 0xa5;
const WORD_BITS: usize = 8;

fn measure(rng: &mut ChaCha8Rng, on: &[bool], noise: f64) -> Vec<f64> {
    on.iter()
        .map(|&o| {
            let e: f64 = Exp1.sample(rng);
            (if o { 1.0 } else { 0.0 }) + noise * e
        })
        .collect()
}

/// One IF chirp column carrying a tone at `bin` plus light noise.
fn tone_column(rng: &mut ChaCha8Rng, n: usize, bin: f64, noise: f64) -> Vec<Complex64> {
    let phase0 = rng.gen::<f64>() * 2.0 * PI;
    let sigma = (noise / 2.0).sqrt();
    (0..n)
        .map(|i| {
            let s = Complex64::from_polar(1.0, phase0 + 2.0 * PI * bin * i as f64 / n as f64);
            let w = Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
            s + w * sigma
        })
        .collect()
}

/// Runs all four stages for one active terminal (index 0) and the passive
/// terminals of `world` (indices 1..).
pub fn run_protocol(world: &World) -> Result<Vec<ProtocolState>, ProtocolError> {
    if world.passive.is_empty() {
        return Err(ProtocolError::NoPassiveTerminal);
    }
    let cfg = &world.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(world.seed);
    let n_rb = cfg.n_rb();
    let mut states = vec![ProtocolState::new(0, Terminal::Active)];
    states.extend((0..world.passive.len()).map(|i| ProtocolState::new(i + 1, Terminal::Passive)));

    // Stage 1: the active terminal listens to every block, then announces the
    // chosen start block with an OOK word.
    let busy: Vec<bool> = (0..n_rb).map(|b| world.occupied.contains(&b)).collect();
    let energy = measure(&mut rng, &busy, world.noise_energy);
    let mut sensed = detect_occupancy(&energy, world.threshold);
    let rb_set = first_fit(&sensed, cfg.m).ok_or(ProtocolError::NoFreeRb { needed: cfg.m })?;
    for &b in &rb_set {
        sensed[b] = true;
    }
    states[0].rb_set = rb_set.clone();
    states[0].own_rbs = rb_set.clone();
    let announce = ook_encode(&word_bits(rb_set[0] as u64, WORD_BITS));
    for (i, st) in states.iter_mut().enumerate().skip(1) {
        let heard = ook_detect(&measure(&mut rng, &announce, world.noise_energy), world.threshold);
        let start = bits_word(&heard) as usize;
        if start != rb_set[0] {
            return Err(ProtocolError::RbAnnouncement { terminal: i, decoded: start, expected: rb_set[0] });
        }
        st.rb_set = (start..start + cfg.m).collect();
        let own = first_fit(&sensed, 1).ok_or(ProtocolError::NoFreeRb { needed: 1 })?;
        sensed[own[0]] = true;
        st.own_rbs = own;
    }
    for st in states.iter_mut() {
        st.advance(Stage::SensingSync)?;
    }

    // Stage 2: two ranging rounds. The offset adds to the delay seen by the
    // passive terminal and subtracts from the one seen by the active terminal.
    let bins_per_sample = cfg.n as f64 * cfg.alpha() / (cfg.fs as f64 * cfg.fs as f64);
    states[0].sync_delay = Some(0.0);
    for (i, link) in world.passive.iter().enumerate() {
        let d_bin = cfg.range_to_bin(Terminal::Passive, link.distance);
        let r1 = estimate_tone(&tone_column(&mut rng, cfg.n, d_bin + link.sync_offset * bins_per_sample, world.noise_energy));
        let r2 = estimate_tone(&tone_column(&mut rng, cfg.n, d_bin - link.sync_offset * bins_per_sample, world.noise_energy));
        states[i + 1].sync_delay = Some((r1 - r2) / 2.0 / bins_per_sample);
    }
    for st in states.iter_mut() {
        st.advance(Stage::LinkAck)?;
    }

    // Stage 3: each passive terminal sends an OOK acknowledgment in its block.
    let ack = ook_encode(&word_bits(ACK_WORD, WORD_BITS));
    for (i, link) in world.passive.iter().enumerate() {
        let sent: Vec<bool> = if link.responsive { ack.clone() } else { vec![false; WORD_BITS] };
        let mut got = false;
        for _ in 0..world.ack_rounds.max(1) {
            let heard = ook_detect(&measure(&mut rng, &sent, world.noise_energy), world.threshold);
            if bits_word(&heard) == ACK_WORD {
                got = true;
                break;
            }
        }
        if !got {
            return Err(ProtocolError::AckTimeout { terminal: i + 1, rounds: world.ack_rounds.max(1) });
        }
        states[i + 1].acknowledge();
    }
    states[0].acknowledge();
    for st in states.iter_mut() {
        st.advance(Stage::SteadyState)?;
    }
    Ok(states)
}
