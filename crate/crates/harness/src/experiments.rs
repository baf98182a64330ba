//! Monte-Carlo experiments: joint demodulation and sensing trials, SER and
//! hit-rate sweeps, the rate table and the dynamic tracking run.

use crate::scenario::{Swarm, Truth};
use crate::stats::SymbolCounts;
use isac_core::channel::{inject_noise, synth_if, IfCube, NoiseMode, NoiseSpec, PathKind};
use isac_core::config::{sensing_bounds, ArrayGeometry, RawConfig, SystemConfig, Terminal, TimeSpec};
use isac_core::modem::{encode_frame, FramePayload};
use isac_core::receiver::{pipeline_at, pipeline_known, pipeline_pt, DopplerMethod, Prediction, ReceiverParams, TargetEstimate};
use isac_core::scheduler::{generate_schedule, LatinSchedule, ScheduleMode};
use isac_core::tracking::{Measurement, TrackConfig, TrackLogRow, Tracker};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("channel: {0}")]
    Channel(#[from] isac_core::channel::ChannelError),
    #[error("receiver: {0}")]
    Receiver(#[from] isac_core::receiver::ReceiverError),
    #[error("schedule: {0}")]
    Schedule(#[from] isac_core::scheduler::ScheduleError),
    #[error("modem: {0}")]
    Modem(#[from] isac_core::modem::ModemError),
    #[error("config: {0}")]
    Config(#[from] isac_core::config::ConfigError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Independent 64-bit seed for `(master, a, b)`.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b);
    rng.gen()
}

/// Settings shared by the trials of one sweep point.
#[derive(Clone, Debug)]
pub struct TrialSetup {
    pub cfg: SystemConfig,
    pub schedule: ScheduleMode,
    pub noise: NoiseMode,
    /// Per-sample SNR [dB]; `None` is noiseless.
    pub snr_db: Option<f64>,
    pub params: ReceiverParams,
    /// Also run the payload-free FMCW baseline.
    pub baseline: bool,
}

impl TrialSetup {
    pub fn new(cfg: SystemConfig) -> Self {
        Self { cfg, schedule: ScheduleMode::PseudoRandom, noise: NoiseMode::Gaussian, snr_db: None, params: ReceiverParams::default(), baseline: false }
    }

    /// Noise of one frame; the clutter footprint follows `clutter_seed` so it
    /// stays put from frame to frame.
    fn noise_spec(&self, seed: u64, clutter_seed: u64) -> NoiseSpec {
        let mut spec = match self.noise {
            NoiseMode::Gaussian => NoiseSpec::gaussian(0.0, seed),
            NoiseMode::Urban => NoiseSpec::urban(0.0, seed),
        };
        spec.snr_db = self.snr_db;
        spec.clutter_seed = Some(clutter_seed);
        spec
    }

    /// Receiver settings for this noise mode: urban runs enable the clutter
    /// filter.
    fn receiver(&self) -> ReceiverParams {
        let mut p = self.params;
        if self.noise == NoiseMode::Urban && p.clutter.is_none() {
            p.clutter = Some(Default::default());
        }
        p
    }
}

/// Outcome of one joint trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub delay: SymbolCounts,
    pub dpsk: SymbolCounts,
    /// Line-of-sight target recovered within resolution on the data frame.
    pub hit: bool,
    pub baseline_hit: Option<bool>,
    /// Largest grid-cell error of any true path on the data frame
    /// (range bins, Doppler bins); infinite when a path is missed.
    pub worst_cell_error: (f64, f64),
}

fn noisy_cube(scene: &isac_core::channel::Scene, payload: &FramePayload, schedules: &[LatinSchedule], setup: &TrialSetup, seeds: (u64, u64), term: Terminal) -> Result<IfCube, ExperimentError> {
    let mut cube = synth_if(scene, payload, schedules, &setup.cfg)?;
    inject_noise(&mut cube, &setup.noise_spec(seeds.0, seeds.1), &setup.cfg, schedules, term);
    Ok(cube)
}

/// Predictions for the next frame from passive estimates: the nearest
/// target is taken as the line of sight and carries its Doppler; the others
/// are range-only.
pub fn predictions_from(estimates: &[TargetEstimate]) -> Vec<Prediction> {
    let los = nearest(estimates);
    estimates
        .iter()
        .enumerate()
        .map(|(i, e)| Prediction { range_bin: e.range_bin, doppler_bin: (Some(i) == los).then_some(e.doppler_bin), weight: e.score.sqrt() })
        .collect()
}

fn nearest(estimates: &[TargetEstimate]) -> Option<usize> {
    estimates.iter().enumerate().min_by(|a, b| a.1.distance.total_cmp(&b.1.distance)).map(|(i, _)| i)
}

/// Signed velocity difference wrapped to the unambiguous span.
fn velocity_error(cfg: &SystemConfig, term: Terminal, a: f64, b: f64) -> f64 {
    let span = 2.0 * cfg.velocity_limit(term);
    let d = (a - b).rem_euclid(span);
    d.min(span - d)
}

/// Some estimate errs by less than the resolution in distance, velocity and
/// both arrival sines at once.
pub fn is_hit(estimates: &[TargetEstimate], truth: &Truth, cfg: &SystemConfig, term: Terminal) -> bool {
    let b = sensing_bounds(cfg);
    let b = b.for_terminal(term);
    estimates.iter().any(|e| {
        (e.distance - truth.distance).abs() < b.distance.resolution
            && velocity_error(cfg, term, e.velocity, truth.velocity) < b.velocity.resolution
            && (e.arrival.az - truth.arrival.az).abs() < b.azimuth.resolution
            && (e.arrival.el - truth.arrival.el).abs() < b.elevation.resolution
    })
}

/// Largest (range, Doppler) grid-cell distance from each true path to its
/// closest estimate.
pub fn worst_cell_error(estimates: &[TargetEstimate], truths: &[Truth], cfg: &SystemConfig, term: Terminal) -> (f64, f64) {
    let p = cfg.p as f64;
    let mut worst = (0.0f64, 0.0f64);
    for t in truths {
        let tr = cfg.range_to_bin(term, t.distance);
        let tv = cfg.velocity_to_bin(term, t.velocity);
        let best = estimates
            .iter()
            .map(|e| {
                let dv = (e.doppler_bin - tv).rem_euclid(p);
                ((e.range_bin - tr).abs(), dv.min(p - dv))
            })
            .min_by(|a, b| a.0.max(a.1).total_cmp(&b.0.max(b.1)))
            .unwrap_or((f64::INFINITY, f64::INFINITY));
        worst = (worst.0.max(best.0), worst.1.max(best.1));
    }
    worst
}

fn count_delay(sent: &[Vec<u32>], got: Option<&[Vec<u32>]>) -> SymbolCounts {
    let mut c = SymbolCounts::default();
    for (m, row) in sent.iter().enumerate() {
        for (p, &s) in row.iter().enumerate() {
            c.sent += 1;
            match got.map(|g| g[m][p]) {
                Some(v) if v == s => c.correct += 1,
                Some(_) => c.errored += 1,
                None => c.erased += 1,
            }
        }
    }
    c
}

fn count_dpsk(sent: &[Vec<Vec<u32>>], got: Option<&[Vec<Vec<Option<u32>>>]>) -> SymbolCounts {
    let mut c = SymbolCounts::default();
    for (m, group) in sent.iter().enumerate() {
        for (l, stream) in group.iter().enumerate() {
            for (k, &s) in stream.iter().enumerate() {
                c.sent += 1;
                match got.and_then(|g| g[m][l][k]) {
                    Some(v) if v == s => c.correct += 1,
                    Some(_) => c.errored += 1,
                    None => c.erased += 1,
                }
            }
        }
    }
    c
}

/// One joint trial on the hovering reference swarm from the first passive
/// UAV: an unmodulated acquisition frame, then a random-payload frame
/// demodulated and sensed from the acquisition estimates.
pub fn joint_trial(setup: &TrialSetup, seed: u64) -> Result<TrialOutcome, ExperimentError> {
    let cfg = &setup.cfg;
    let params = setup.receiver();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedules = generate_schedule(cfg, setup.schedule, seed)?;
    let swarm = Swarm::reference().stationary();
    let (scene, truths) = swarm.passive_scene(1, 0.0, cfg);
    let los = truths.iter().find(|t| t.kind == PathKind::LineOfSight).cloned().ok_or_else(|| ExperimentError::Invariant("no line of sight".into()))?;

    let acq = noisy_cube(&scene, &FramePayload::unmodulated(cfg), &schedules, setup, (derive_seed(seed, 1, 0), seed), Terminal::Passive)?;
    let first = pipeline_pt(&acq, None, &schedules, cfg, &params)?;
    drop(acq);
    let preds = predictions_from(&first.estimates);

    let bits: Vec<bool> = (0..cfg.n_bit()).map(|_| rng.gen()).collect();
    let payload = encode_frame(&bits, cfg, &schedules)?;
    let data_seed = derive_seed(seed, 2, 0);
    let cube = noisy_cube(&scene, &payload, &schedules, setup, (data_seed, seed), Terminal::Passive)?;
    let out = pipeline_pt(&cube, Some(&preds), &schedules, cfg, &params)?;
    drop(cube);

    let demod = out.demod.as_ref();
    let delay = count_delay(&payload.f_d, demod.map(|d| d.f_d.as_slice()));
    let dpsk = count_dpsk(&payload.increments, demod.map(|d| d.increments.as_slice()));
    if !delay.is_conserved() || !dpsk.is_conserved() {
        return Err(ExperimentError::Invariant(format!("symbol counts not conserved in trial {seed}")));
    }
    let hit = is_hit(&out.estimates, &los, cfg, Terminal::Passive);
    let worst = worst_cell_error(&out.estimates, &truths, cfg, Terminal::Passive);

    let baseline_hit = if setup.baseline {
        let conv = generate_schedule(cfg, ScheduleMode::Conventional, seed)?;
        let plain = FramePayload::unmodulated(cfg);
        let cube = noisy_cube(&scene, &plain, &conv, setup, (data_seed, seed), Terminal::Passive)?;
        let bp = ReceiverParams { doppler: DopplerMethod::DecimatedDft, ..params };
        let res = pipeline_known(&cube, &plain, &conv, cfg, &bp, Terminal::Passive)?;
        Some(is_hit(&res.estimates, &los, cfg, Terminal::Passive))
    } else {
        None
    };
    Ok(TrialOutcome { seed, delay, dpsk, hit, baseline_hit, worst_cell_error: worst })
}

/// Aggregate of one sweep point.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepPoint {
    pub snr_db: Option<f64>,
    pub trials: u64,
    pub delay: SymbolCounts,
    pub dpsk: SymbolCounts,
    pub hits: u64,
    pub baseline_hits: u64,
    pub seeds: Vec<u64>,
}

impl SweepPoint {
    pub fn hit_rate(&self) -> f64 {
        self.hits as f64 / self.trials.max(1) as f64
    }

    pub fn baseline_hit_rate(&self) -> f64 {
        self.baseline_hits as f64 / self.trials.max(1) as f64
    }
}

/// Runs `trials` joint trials per SNR. Trial seeds derive from
/// `(master, trial)` only, so SNR points are paired.
pub fn run_sweep(setup: &TrialSetup, snrs: &[Option<f64>], trials: usize, master: u64) -> Result<Vec<SweepPoint>, ExperimentError> {
    snrs.iter()
        .map(|&snr| {
            let s = TrialSetup { snr_db: snr, ..setup.clone() };
            let mut outcomes: Vec<TrialOutcome> = (0..trials as u64).into_par_iter().map(|t| joint_trial(&s, derive_seed(master, t, 0))).collect::<Result<_, _>>()?;
            outcomes.sort_by_key(|o| o.seed);
            let mut point = SweepPoint { snr_db: snr, ..Default::default() };
            for o in outcomes {
                point.trials += 1;
                point.delay += o.delay;
                point.dpsk += o.dpsk;
                point.hits += o.hit as u64;
                point.baseline_hits += o.baseline_hit.unwrap_or(false) as u64;
                point.seeds.push(o.seed);
            }
            Ok(point)
        })
        .collect()
}

/// Chirp-length variants of the reference configuration.
pub fn config_variant(d: usize, t_us: Option<&str>) -> Result<SystemConfig, ExperimentError> {
    let raw = RawConfig { dpsk_order: Some(d), t_us: t_us.map(TimeSpec::expr), ..Default::default() };
    Ok(isac_core::config::derive_config(&raw)?)
}

/// One row of the rate table.
#[derive(Clone, Debug, Serialize)]
pub struct RateRow {
    pub l_tx: usize,
    pub m: usize,
    pub n_bit: usize,
    pub frame_s: f64,
    pub rate_bps: f64,
}

/// Bit rate against transmit-antenna count: `L_tx` chirps share a slot on
/// `M = L_tx` resource blocks, and the guard interval grows as `2 L_tx Td`.
/// Antenna counts that do not divide `P` are skipped.
pub fn run_rate_vs_antennas(base: &RawConfig, max_l_tx: usize) -> Result<Vec<RateRow>, ExperimentError> {
    let reference = isac_core::config::derive_config(base)?;
    (1..=max_l_tx)
        .filter(|l| reference.p % l == 0)
        .map(|l| {
            let (tx_x, tx_z) = (l / 2 + 1, l.div_ceil(2));
            let geometry = ArrayGeometry { tx_x, tx_z, ..reference.geometry.clone() };
            let raw = RawConfig {
                m: Some(l),
                geometry: Some(geometry),
                t_gi_us: Some(TimeSpec::Expr(format!("{}*1000000/{}", 2 * l as i64 * reference.td.numer(), reference.td.denom() * reference.fs as i64))),
                t_slot_us: None,
                ..base.clone()
            };
            let cfg = isac_core::config::derive_config(&raw)?;
            Ok(RateRow { l_tx: cfg.l_tx(), m: cfg.m, n_bit: cfg.n_bit(), frame_s: cfg.frame_seconds(), rate_bps: cfg.bit_rate() })
        })
        .collect()
}

/// Settings of the dynamic run.
#[derive(Clone, Debug)]
pub struct DynamicSetup {
    pub cfg: SystemConfig,
    pub frames: usize,
    pub snr_db: Option<f64>,
    pub noise: NoiseMode,
    pub schedule: ScheduleMode,
    /// The active terminal senses every `at_interval` frames.
    pub at_interval: usize,
    /// Leading unmodulated frames at the passive terminal.
    pub acquisition_frames: usize,
    pub params: ReceiverParams,
    pub seed: u64,
}

impl DynamicSetup {
    /// The reference run. Raw estimates stay on the range-Doppler grid, as
    /// the tracker's quantization noise model assumes.
    pub fn reference(cfg: SystemConfig, seed: u64) -> Self {
        Self {
            cfg,
            frames: 500,
            snr_db: Some(10.0),
            noise: NoiseMode::Gaussian,
            schedule: ScheduleMode::PseudoRandom,
            at_interval: 20,
            acquisition_frames: 2,
            params: ReceiverParams { refine: false, ..ReceiverParams::default() },
            seed,
        }
    }
}

/// Per-frame logs of the dynamic run.
#[derive(Clone, Debug, Default)]
pub struct DynamicResult {
    pub at_log: Vec<TrackLogRow>,
    pub pt_log: Vec<TrackLogRow>,
    /// Frames where each true path was present, keyed `observer:target`.
    pub visibility: Vec<(usize, String)>,
    pub pt_symbols: (SymbolCounts, SymbolCounts),
}

fn truth_for(truths: &[Truth], m: &Measurement, term: Terminal, cfg: &SystemConfig) -> Option<Truth> {
    let res = sensing_bounds(cfg).for_terminal(term).distance.resolution;
    truths.iter().filter(|t| (t.distance - m.distance).abs() < 4.0 * res).min_by(|a, b| (a.distance - m.distance).abs().total_cmp(&(b.distance - m.distance).abs())).cloned()
}

/// Log rows for every track updated in this frame.
fn log_updates(tracker: &Tracker, matched: &[(usize, usize)], meas: &[Measurement], truths: &[Truth], frame: usize, observer: &str, term: Terminal, cfg: &SystemConfig, out: &mut Vec<TrackLogRow>) {
    for &(id, mi) in matched {
        let Some(track) = tracker.get(id) else { continue };
        let z = &meas[mi];
        let truth = truth_for(truths, z, term, cfg);
        out.push(TrackLogRow {
            frame,
            link: format!("{observer}->{}", truth.as_ref().map_or("?", |t| t.target.as_str())),
            track_id: id,
            raw_distance: z.distance,
            raw_velocity: z.velocity,
            fused_distance: track.x[0],
            fused_velocity: track.x[1],
            true_distance: truth.as_ref().map(|t| t.distance),
            true_velocity: truth.as_ref().map(|t| t.velocity),
        });
    }
}

/// The reference run: the active terminal senses its echoes every
/// `at_interval` frames, the first passive UAV demodulates and senses every
/// frame and tracks the line of sight in full and other paths in range only.
pub fn run_dynamic(setup: &DynamicSetup) -> Result<DynamicResult, ExperimentError> {
    let cfg = &setup.cfg;
    let swarm = Swarm::reference();
    let frame_s = cfg.frame_seconds();
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let trial = TrialSetup { cfg: cfg.clone(), schedule: setup.schedule, noise: setup.noise, snr_db: setup.snr_db, params: setup.params, baseline: false };
    let params = trial.receiver();
    // Track timeouts count frames; the active terminal only updates every
    // `at_interval` frames.
    let mut at_cfg = TrackConfig::for_terminal(cfg, Terminal::Active);
    at_cfg.timeout *= setup.at_interval;
    let mut at_tracker = Tracker::new(at_cfg);
    let mut pt_tracker = Tracker::new(TrackConfig::for_terminal(cfg, Terminal::Passive));
    let mut result = DynamicResult::default();
    let mut last_at_frame: Option<usize> = None;

    for frame in 0..setup.frames {
        let t = frame as f64 * frame_s;
        let frame_seed = derive_seed(setup.seed, frame as u64, 0);
        let schedules = generate_schedule(cfg, setup.schedule, frame_seed)?;
        let modulated = frame >= setup.acquisition_frames;
        let payload = if modulated {
            let bits: Vec<bool> = (0..cfg.n_bit()).map(|_| rng.gen()).collect();
            encode_frame(&bits, cfg, &schedules)?
        } else {
            FramePayload::unmodulated(cfg)
        };

        if frame % setup.at_interval == 0 {
            let (scene, truths) = swarm.active_scene(t, cfg);
            for tr in &truths {
                result.visibility.push((frame, format!("AT:{}", tr.target)));
            }
            let cube = noisy_cube(&scene, &payload, &schedules, &trial, (derive_seed(frame_seed, 1, 0), setup.seed), Terminal::Active)?;
            let out = pipeline_at(&cube, &payload, &schedules, cfg, &params)?;
            drop(cube);
            if let Some(prev) = last_at_frame {
                at_tracker.predict((frame - prev) as f64 * frame_s);
            }
            last_at_frame = Some(frame);
            let meas: Vec<Measurement> = out.estimates.iter().map(Measurement::from).collect();
            let report = at_tracker.update(&meas, frame, |_| true);
            log_updates(&at_tracker, &report.matched, &meas, &truths, frame, "AT", Terminal::Active, cfg, &mut result.at_log);
        }

        let (scene, truths) = swarm.passive_scene(1, t, cfg);
        for tr in &truths {
            result.visibility.push((frame, format!("PT1:{}", tr.target)));
        }
        if frame > 0 {
            pt_tracker.predict(frame_s);
        }
        let predictions: Vec<Prediction> = if modulated { pt_tracker.tracks.iter().map(|tr| tr.prediction(&pt_tracker.cfg)).collect() } else { Vec::new() };
        let cube = noisy_cube(&scene, &payload, &schedules, &trial, (derive_seed(frame_seed, 2, 0), setup.seed), Terminal::Passive)?;
        let out = pipeline_pt(&cube, Some(&predictions), &schedules, cfg, &params)?;
        drop(cube);
        if modulated {
            let demod = out.demod.as_ref();
            result.pt_symbols.0 += count_delay(&payload.f_d, demod.map(|d| d.f_d.as_slice()));
            result.pt_symbols.1 += count_dpsk(&payload.increments, demod.map(|d| d.increments.as_slice()));
        }
        let meas: Vec<Measurement> = out.estimates.iter().map(Measurement::from).collect();
        let los = nearest(&out.estimates).map(|i| meas[i]);
        let report = pt_tracker.update(&meas, frame, |m| los.is_some_and(|l| l.distance == m.distance));
        log_updates(&pt_tracker, &report.matched, &meas, &truths, frame, "PT1", Terminal::Passive, cfg, &mut result.pt_log);
    }
    Ok(result)
}

/// Absolute raw and fused errors of the logged rows of `link`.
pub fn link_errors(rows: &[TrackLogRow], link: &str, span: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let wrap = |d: f64| {
        let x = d.rem_euclid(span);
        x.min(span - x)
    };
    let mut out = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in rows.iter().filter(|r| r.link == link) {
        if let (Some(td), Some(tv)) = (r.true_distance, r.true_velocity) {
            out.0.push((r.raw_distance - td).abs());
            out.1.push((r.fused_distance - td).abs());
            out.2.push(wrap(r.raw_velocity - tv));
            out.3.push(wrap(r.fused_velocity - tv));
        }
    }
    out
}
