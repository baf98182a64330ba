//! Command-line front end: argument types, the subcommands and their CSV and
//! JSON outputs.
//!
//! Every run writes a `run.json` echoing the raw and derived configuration,
//! the arguments and the trial seeds next to its CSV tables. Outputs carry no
//! timestamps, so a fixed configuration and master seed reproduce them byte
//! for byte.

use crate::experiments::{link_errors, run_dynamic, run_rate_vs_antennas, run_sweep, DynamicSetup, ExperimentError, SweepPoint, TrialSetup};
use crate::scenario::Swarm;
use crate::stats::{deciles, wilson, Z95};
use clap::{Args, Parser, Subcommand};
use isac_core::channel::NoiseMode;
use isac_core::config::{derive_config, RawConfig, SystemConfig, Terminal};
use isac_core::scheduler::{run_protocol, PassiveLink, ScheduleMode, World};
use isac_core::tracking::write_track_csv;
use serde::Serialize;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "isac-sim", about = "Pseudo-random TDM-MIMO FMCW ISAC simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// JSON configuration file; missing fields take reference values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// SNR sweep `lo:hi:step` or a single value [dB]; `none` is noiseless.
    #[arg(long, global = true, default_value = "-30:-10:5", allow_hyphen_values = true)]
    pub snr: String,
    /// Monte-Carlo trials per sweep point.
    #[arg(long, global = true, default_value_t = 20)]
    pub trials: usize,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// `gaussian` or `urban`.
    #[arg(long, global = true, default_value = "gaussian")]
    pub noise: NoiseMode,
    /// `conventional` or `pseudo-random`.
    #[arg(long, global = true, default_value = "pseudo-random")]
    pub schedule: ScheduleMode,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum Command {
    /// Delay-domain and DPSK symbol error rates against SNR.
    Ser,
    /// Hit rate of the proposed scheme and the payload-free baseline.
    Hitrate,
    /// Bit rate against the number of transmit antennas.
    Rate {
        #[arg(long, default_value_t = 8)]
        max_l_tx: usize,
    },
    /// The reference tracking run.
    Dynamic {
        #[arg(long, default_value_t = 500)]
        frames: usize,
    },
    /// The four-stage link set-up on the reference swarm.
    Protocol,
}

/// Parses `lo:hi:step`, a single value or `none`.
pub fn parse_snr(s: &str) -> Result<Vec<Option<f64>>, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(vec![None]);
    }
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad SNR `{p}`: {e}"))).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![Some(*v)]),
        [lo, hi, step] if *step > 0.0 && lo <= hi => {
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| Some(lo + i as f64 * step)).collect())
        }
        _ => Err(format!("SNR must be `lo:hi:step` with lo <= hi and step > 0, got `{s}`")),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("config: {0}")]
    Config(#[from] isac_core::config::ConfigError),
    #[error("protocol: {0}")]
    Protocol(#[from] isac_core::scheduler::ProtocolError),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for a violated invariant, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Experiment(ExperimentError::Invariant(_)) => 2,
            _ => 1,
        }
    }
}

/// Derived quantities echoed with every run.
#[derive(Debug, Serialize)]
struct Derived {
    n: usize,
    p: usize,
    m: usize,
    d: usize,
    l_tx: usize,
    l_rx: usize,
    n_bit: usize,
    frame_s: f64,
    rate_bps: f64,
}

impl Derived {
    fn of(cfg: &SystemConfig) -> Self {
        Self { n: cfg.n, p: cfg.p, m: cfg.m, d: cfg.d, l_tx: cfg.l_tx(), l_rx: cfg.l_rx(), n_bit: cfg.n_bit(), frame_s: cfg.frame_seconds(), rate_bps: cfg.bit_rate() }
    }
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    command: &'a Command,
    args: &'a Common,
    config: &'a RawConfig,
    derived: Derived,
    result: T,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

#[derive(Serialize)]
struct SerRow {
    snr_db: Option<f64>,
    trials: u64,
    delay_sent: u64,
    delay_errored: u64,
    delay_erased: u64,
    delay_ser: f64,
    delay_ci_lo: f64,
    delay_ci_hi: f64,
    dpsk_sent: u64,
    dpsk_errored: u64,
    dpsk_erased: u64,
    dpsk_ser: f64,
    dpsk_ci_lo: f64,
    dpsk_ci_hi: f64,
}

impl SerRow {
    fn of(p: &SweepPoint) -> Self {
        let (dl, dh) = p.delay.ci();
        let (pl, ph) = p.dpsk.ci();
        Self {
            snr_db: p.snr_db,
            trials: p.trials,
            delay_sent: p.delay.sent,
            delay_errored: p.delay.errored,
            delay_erased: p.delay.erased,
            delay_ser: p.delay.ser(),
            delay_ci_lo: dl,
            delay_ci_hi: dh,
            dpsk_sent: p.dpsk.sent,
            dpsk_errored: p.dpsk.errored,
            dpsk_erased: p.dpsk.erased,
            dpsk_ser: p.dpsk.ser(),
            dpsk_ci_lo: pl,
            dpsk_ci_hi: ph,
        }
    }
}

#[derive(Serialize)]
struct HitRow {
    snr_db: Option<f64>,
    trials: u64,
    hits: u64,
    hit_rate: f64,
    hit_ci_lo: f64,
    hit_ci_hi: f64,
    baseline_hits: u64,
    baseline_hit_rate: f64,
    baseline_ci_lo: f64,
    baseline_ci_hi: f64,
}

impl HitRow {
    fn of(p: &SweepPoint) -> Self {
        let (hl, hh) = wilson(p.hits, p.trials, Z95);
        let (bl, bh) = wilson(p.baseline_hits, p.trials, Z95);
        Self {
            snr_db: p.snr_db,
            trials: p.trials,
            hits: p.hits,
            hit_rate: p.hit_rate(),
            hit_ci_lo: hl,
            hit_ci_hi: hh,
            baseline_hits: p.baseline_hits,
            baseline_hit_rate: p.baseline_hit_rate(),
            baseline_ci_lo: bl,
            baseline_ci_hi: bh,
        }
    }
}

#[derive(Serialize)]
struct SweepSeeds {
    snr_db: Option<f64>,
    seeds: Vec<u64>,
}

#[derive(Serialize)]
struct DecileRow {
    link: String,
    quantity: &'static str,
    kind: &'static str,
    samples: usize,
    d1: f64,
    d2: f64,
    d3: f64,
    d4: f64,
    d5: f64,
    d6: f64,
    d7: f64,
    d8: f64,
    d9: f64,
}

impl DecileRow {
    fn new(link: &str, quantity: &'static str, kind: &'static str, values: &[f64]) -> Self {
        let q = deciles(values);
        Self { link: link.to_string(), quantity, kind, samples: values.len(), d1: q[0], d2: q[1], d3: q[2], d4: q[3], d5: q[4], d6: q[5], d7: q[6], d8: q[7], d9: q[8] }
    }
}

#[derive(Serialize)]
struct DynamicSummary {
    frames: usize,
    snr_db: Option<f64>,
    delay: crate::stats::SymbolCounts,
    dpsk: crate::stats::SymbolCounts,
    at_rows: usize,
    pt_rows: usize,
}

/// Executes one parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let common = &cli.common;
    let raw = match &common.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    let cfg = derive_config(&raw)?;
    fs::create_dir_all(&common.out)?;
    let out = &common.out;
    let record = |result: serde_json::Value| -> Result<(), CliError> {
        write_json(&out.join("run.json"), &RunRecord { command: &cli.command, args: common, config: &raw, derived: Derived::of(&cfg), result })
    };

    match &cli.command {
        Command::Ser | Command::Hitrate => {
            let snrs = parse_snr(&common.snr).map_err(CliError::Usage)?;
            let hit = matches!(cli.command, Command::Hitrate);
            let setup = TrialSetup { schedule: common.schedule, noise: common.noise, baseline: hit, ..TrialSetup::new(cfg.clone()) };
            let points = run_sweep(&setup, &snrs, common.trials, common.seed)?;
            let name = if hit { "hitrate.csv" } else { "ser.csv" };
            let mut w = csv_writer(&out.join(name))?;
            for p in &points {
                if hit {
                    w.serialize(HitRow::of(p))?;
                } else {
                    w.serialize(SerRow::of(p))?;
                }
            }
            w.flush()?;
            let seeds: Vec<SweepSeeds> = points.iter().map(|p| SweepSeeds { snr_db: p.snr_db, seeds: p.seeds.clone() }).collect();
            record(serde_json::to_value(seeds)?)?;
        }
        Command::Rate { max_l_tx } => {
            let rows = run_rate_vs_antennas(&raw, *max_l_tx)?;
            let mut w = csv_writer(&out.join("rate.csv"))?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
            record(serde_json::Value::Null)?;
        }
        Command::Dynamic { frames } => {
            let snr = match parse_snr(&common.snr).map_err(CliError::Usage)?.as_slice() {
                [single] => *single,
                _ => return Err(CliError::Usage("dynamic takes a single SNR value".into())),
            };
            let mut setup = DynamicSetup::reference(cfg.clone(), common.seed);
            setup.frames = *frames;
            setup.snr_db = snr;
            setup.noise = common.noise;
            setup.schedule = common.schedule;
            let res = run_dynamic(&setup)?;
            if !res.pt_symbols.0.is_conserved() || !res.pt_symbols.1.is_conserved() {
                return Err(ExperimentError::Invariant("symbol counts not conserved in dynamic run".into()).into());
            }
            write_track_csv(&res.at_log, BufWriter::new(File::create(out.join("at_tracks.csv"))?))?;
            write_track_csv(&res.pt_log, BufWriter::new(File::create(out.join("pt_tracks.csv"))?))?;
            let mut w = csv_writer(&out.join("error_deciles.csv"))?;
            for (rows, term, link) in [(&res.at_log, Terminal::Active, "AT->PT1"), (&res.pt_log, Terminal::Passive, "PT1->AT")] {
                let (rd, fd, rv, fv) = link_errors(rows, link, 2.0 * cfg.velocity_limit(term));
                w.serialize(DecileRow::new(link, "distance", "raw", &rd))?;
                w.serialize(DecileRow::new(link, "distance", "fused", &fd))?;
                w.serialize(DecileRow::new(link, "velocity", "raw", &rv))?;
                w.serialize(DecileRow::new(link, "velocity", "fused", &fv))?;
            }
            w.flush()?;
            let summary = DynamicSummary { frames: *frames, snr_db: snr, delay: res.pt_symbols.0, dpsk: res.pt_symbols.1, at_rows: res.at_log.len(), pt_rows: res.pt_log.len() };
            record(serde_json::to_value(summary)?)?;
        }
        Command::Protocol => {
            let swarm = Swarm::reference();
            let at = swarm.uavs[0].position;
            let passive = swarm.uavs[1..]
                .iter()
                .map(|u| {
                    let d = ((u.position[0] - at[0]).powi(2) + (u.position[1] - at[1]).powi(2) + (u.position[2] - at[2]).powi(2)).sqrt();
                    PassiveLink { distance: d, sync_offset: 0.0, responsive: true }
                })
                .collect();
            let world = World { seed: common.seed, ..World::new(cfg.clone(), passive) };
            let states = run_protocol(&world)?;
            write_json(&out.join("protocol.json"), &states)?;
            record(serde_json::Value::Null)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr("-30:-20:5").unwrap(), vec![Some(-30.0), Some(-25.0), Some(-20.0)]);
        assert_eq!(parse_snr("7").unwrap(), vec![Some(7.0)]);
        assert_eq!(parse_snr("none").unwrap(), vec![None]);
        assert!(parse_snr("1:0:1").is_err());
        assert!(parse_snr("0:1:0").is_err());
    }
}
