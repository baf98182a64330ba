//! Complete receive chains for the active and passive terminals.

use super::angle::{estimate_angles_at, estimate_angles_pt, AngleParams, SpatialCoefs};
use super::cfar::{cfar_1d, cfar_2d, Cfar2dParams, CfarParams};
use super::clutter::{blackman_harris, detect_clutter_in, filter_clutter, ClutterParams, ClutterReport};
use super::cluster::{cluster, ClusterParams, Detection};
use super::jspedd::{demod_delay_data, demod_dpsk, remove_amplitude_data, remove_delay_data, Prediction};
use super::omp::{decimated_dft, doppler_atom, DopplerOmp, OmpParams};
use super::range::{accumulate, peak_offset, power_profile, range_dft, windowed_power_profile, windowed_range_dft, RangeMaps};
use super::{ReceiverError, TargetEstimate};
use crate::channel::IfCube;
use crate::config::{SystemConfig, Terminal};
use crate::linalg::least_squares;
use crate::modem::{decode_frame, FramePayload};
use crate::scheduler::LatinSchedule;
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How slow-time samples of one transmit stream become a Doppler spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DopplerMethod {
    /// Sparse recovery on the full P grid.
    Omp,
    /// Q-point DFT of a uniformly decimated stream (conventional TDM).
    DecimatedDft,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceiverParams {
    /// CFAR on the mean range power profile selecting candidate rows.
    pub row_cfar: CfarParams,
    pub map_cfar: Cfar2dParams,
    /// Cells weaker than this fraction of the map maximum are ignored.
    pub min_rel_power: f64,
    pub cluster: ClusterParams,
    pub k_max: usize,
    /// OMP stops once the residual energy is below `sigma^2 (Q + eps_margin sqrt(Q))`,
    /// i.e. this many standard deviations above the noise-only energy.
    pub eps_margin: f64,
    pub angle: AngleParams,
    /// DPSK ratio terms with a denominator below this many noise standard
    /// deviations are dropped.
    pub dpsk_floor: f64,
    pub doppler: DopplerMethod,
    /// Clutter excision; `None` skips it.
    pub clutter: Option<ClutterParams>,
    pub max_targets: usize,
    /// Interpolate estimates between grid cells; off reports the grid cell
    /// of each cluster representative.
    pub refine: bool,
}

impl Default for ReceiverParams {
    fn default() -> Self {
        Self {
            row_cfar: CfarParams::default(),
            map_cfar: Cfar2dParams::default(),
            min_rel_power: 1e-2,
            cluster: ClusterParams::default(),
            k_max: 4,
            eps_margin: 3.0,
            dpsk_floor: 1.0,
            angle: AngleParams::default(),
            doppler: DopplerMethod::Omp,
            clutter: None,
            max_targets: 8,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtOutput {
    pub estimates: Vec<TargetEstimate>,
    pub clutter: ClutterReport,
}

/// Demodulated data of one passive-terminal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PtDemod {
    pub f_d: Vec<Vec<u32>>,
    /// `None` marks an erased DPSK symbol.
    pub increments: Vec<Vec<Vec<Option<u32>>>>,
    pub beta: Vec<Vec<Complex64>>,
    /// Decoded payload, erasures decoded as the zero increment.
    pub bits: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PtOutput {
    /// `None` for an acquisition (unmodulated) frame.
    pub demod: Option<PtDemod>,
    pub estimates: Vec<TargetEstimate>,
    pub clutter: ClutterReport,
    /// Predictions whose range bin lies in excised clutter.
    pub masked: Vec<usize>,
}

fn check_cube(cube: &IfCube, cfg: &SystemConfig) -> Result<(), ReceiverError> {
    let expected = vec![cfg.m, cfg.l_rx(), cfg.p, cfg.n];
    if cube.data.shape() != expected.as_slice() {
        return Err(ReceiverError::Shape { got: cube.data.shape().to_vec(), expected });
    }
    Ok(())
}

fn check_schedules(schedules: &[LatinSchedule], cfg: &SystemConfig) -> Result<(), ReceiverError> {
    if schedules.len() != cfg.m || schedules.iter().any(|s| s.p() != cfg.p || s.l_tx() != cfg.l_tx()) {
        return Err(ReceiverError::Payload);
    }
    Ok(())
}

/// Complex noise standard deviation per range cell, from the median
/// magnitude of the non-zero cells (Rayleigh median = 0.8326 sigma).
pub fn noise_sigma(maps: &RangeMaps) -> f64 {
    let slice = maps.data.as_slice().expect("standard layout");
    let stride = (slice.len() / 200_000).max(1);
    let mut mags: Vec<f64> = slice.iter().step_by(stride).map(|z| z.norm()).filter(|&v| v > 0.0).collect();
    if mags.is_empty() {
        return 0.0;
    }
    let mid = mags.len() / 2;
    let (_, med, _) = mags.select_nth_unstable_by(mid, f64::total_cmp);
    *med / 0.8326
}

/// Range maps for the receiver. With clutter filtering enabled the maps are
/// Blackman-Harris windowed, so excising the clutter leaves no
/// rectangular-window skirt behind to pose as static targets.
fn range_and_clutter(cube: &IfCube, schedules: &[LatinSchedule], params: &ReceiverParams) -> (RangeMaps, ClutterReport) {
    match &params.clutter {
        Some(cp) => {
            let mut maps = windowed_range_dft(cube, Some(&blackman_harris(cube.n())));
            let report = detect_clutter_in(&maps, schedules, cp);
            filter_clutter(&mut maps, &report);
            (maps, report)
        }
        None => (range_dft(cube), ClutterReport::default()),
    }
}

/// Local maxima of the row CFAR and their neighbours, below `N/2`.
fn candidate_rows(profile: &[f64], params: &CfarParams) -> Vec<usize> {
    let half = profile.len();
    let flags = cfar_1d(profile, params, false);
    let mut rows = std::collections::BTreeSet::new();
    for k in 0..half {
        let left = if k > 0 { profile[k - 1] } else { 0.0 };
        let right = if k + 1 < half { profile[k + 1] } else { 0.0 };
        if flags[k] && profile[k] >= left && profile[k] >= right {
            for r in k.saturating_sub(1)..=(k + 1).min(half - 1) {
                if profile[r] > 0.0 {
                    rows.insert(r);
                }
            }
        }
    }
    rows.into_iter().collect()
}

fn stream_samples(maps: &RangeMaps, m: usize, r: usize, row: usize, slots: &[usize]) -> Vec<Complex64> {
    slots.iter().map(|&p| maps.data[[m, r, p, row]]).collect()
}

/// Signed cyclic difference `a - b` on a grid of `len`.
fn cyclic_diff(a: usize, b: usize, len: usize) -> f64 {
    let d = (a as i64 - b as i64).rem_euclid(len as i64);
    if d as usize > len / 2 {
        (d - len as i64) as f64
    } else {
        d as f64
    }
}

/// Sensing on data-free range maps.
pub fn sense(maps: &RangeMaps, cfg: &SystemConfig, schedules: &[LatinSchedule], term: Terminal, params: &ReceiverParams) -> Vec<TargetEstimate> {
    let half = cfg.n / 2;
    let p_n = cfg.p;
    let full_profile = power_profile(maps);
    // Excised bins stay zero so the row detector can skip them.
    let mut windowed = windowed_power_profile(maps);
    windowed.iter_mut().zip(&full_profile).filter(|(_, &f)| f == 0.0).for_each(|(w, _)| *w = 0.0);
    let row_cfar = CfarParams { looks: maps.m() * maps.l_rx() * maps.p(), ..params.row_cfar };
    let rows = candidate_rows(&windowed[..half], &row_cfar);
    if rows.is_empty() {
        return Vec::new();
    }
    let sigma = noise_sigma(maps);
    let omp = DopplerOmp::new(p_n);
    let l_tx = cfg.l_tx();
    let l_rx = cfg.l_rx();

    // Range-Doppler map over candidate rows, accumulated over every stream.
    let per_row: Vec<(usize, Vec<f64>)> = rows
        .par_iter()
        .map(|&row| {
            let mut acc = vec![0.0; p_n];
            for (m, sched) in schedules.iter().enumerate() {
                for l in 0..l_tx {
                    let slots = sched.column(l);
                    let q = slots.len() as f64;
                    let omp_params = OmpParams { k_max: params.k_max, eps: sigma * (q + params.eps_margin * q.sqrt()).sqrt() };
                    for r in 0..l_rx {
                        let y = stream_samples(maps, m, r, row, slots);
                        let bins = match params.doppler {
                            DopplerMethod::Omp => omp.run(&y, slots, &omp_params).atoms,
                            DopplerMethod::DecimatedDft => decimated_dft(&y, slots, p_n),
                        };
                        for (f, c) in bins {
                            acc[f] += c.norm_sqr();
                        }
                    }
                }
            }
            let count = (cfg.m * l_tx * l_rx) as f64;
            acc.iter_mut().for_each(|v| *v /= count);
            (row, acc)
        })
        .collect();
    let mut map = Array2::<f64>::zeros((half, p_n));
    for (row, acc) in &per_row {
        for (f, v) in acc.iter().enumerate() {
            map[[*row, f]] = *v;
        }
    }

    let mask = cfar_2d(&map, &params.map_cfar, true);
    let peak = map.iter().copied().fold(0.0, f64::max);
    let detections: Vec<Detection> = mask
        .indexed_iter()
        .filter(|(idx, &hit)| hit && map[*idx] >= params.min_rel_power * peak)
        .map(|((k, f), _)| (k, f, map[[k, f]]))
        .collect();
    let mut clusters = cluster(&detections, &params.cluster, Some(p_n));
    clusters.truncate(params.max_targets);

    // Refined position of every cluster.
    let refined: Vec<(usize, f64, f64)> = clusters
        .iter()
        .map(|c| {
            let (k, f, _) = c.rep;
            if !params.refine {
                return (k, k as f64, f as f64);
            }
            let mag = |i: usize| full_profile[i].sqrt();
            let dk = if k > 0 && k + 1 < half { peak_offset(mag(k - 1), mag(k), mag(k + 1), maps.windowed) } else { 0.0 };
            let (mut wsum, mut fsum) = (0.0, 0.0);
            for &(_, fm, s) in &c.members {
                wsum += s;
                fsum += s * cyclic_diff(fm, f, p_n);
            }
            (k, k as f64 + dk, f as f64 + fsum / wsum)
        })
        .collect();

    clusters
        .par_iter()
        .enumerate()
        .map(|(ci, c)| {
            let (row, range_bin, doppler_bin) = refined[ci];
            // Joint fit of every cluster sharing this range neighbourhood.
            let group: Vec<usize> = (0..refined.len()).filter(|&j| (refined[j].0 as i64 - row as i64).abs() <= 1).collect();
            let me = group.iter().position(|&j| j == ci).unwrap();
            let coefs: SpatialCoefs = schedules
                .iter()
                .enumerate()
                .map(|(m, sched)| {
                    (0..l_tx)
                        .map(|l| {
                            let slots = sched.column(l);
                            let cols: Vec<Vec<Complex64>> = group.iter().map(|&j| doppler_atom(slots, p_n, refined[j].2)).collect();
                            (0..l_rx)
                                .map(|r| {
                                    let y = stream_samples(maps, m, r, row, slots);
                                    match least_squares(&cols, &y) {
                                        Some(x) => x[me],
                                        None => {
                                            let a = &cols[me];
                                            a.iter().zip(&y).map(|(w, v)| w.conj() * v).sum::<Complex64>() / a.len() as f64
                                        }
                                    }
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let (departure, arrival, edge) = match term {
                Terminal::Active => {
                    let (d, e) = estimate_angles_at(&coefs, &cfg.geometry, &params.angle);
                    (d, d, e)
                }
                Terminal::Passive => estimate_angles_pt(&coefs, &cfg.geometry, &params.angle),
            };
            TargetEstimate {
                terminal: term,
                distance: cfg.bin_to_range(term, range_bin),
                velocity: cfg.bin_to_velocity(term, doppler_bin),
                departure,
                arrival,
                range_bin,
                doppler_bin: doppler_bin.rem_euclid(p_n as f64),
                score: c.rep.2,
                edge,
            }
        })
        .collect()
}

/// Sensing with a known payload: remove it, then estimate. The active
/// terminal uses this with its own payload; the payload-free baseline uses it
/// with an unmodulated frame.
pub fn pipeline_known(
    cube: &IfCube,
    payload: &FramePayload,
    schedules: &[LatinSchedule],
    cfg: &SystemConfig,
    params: &ReceiverParams,
    term: Terminal,
) -> Result<AtOutput, ReceiverError> {
    check_cube(cube, cfg)?;
    check_schedules(schedules, cfg)?;
    if payload.f_d.len() != cfg.m || payload.beta.len() != cfg.m {
        return Err(ReceiverError::Payload);
    }
    let (maps, clutter) = range_and_clutter(cube, schedules, params);
    let maps = remove_amplitude_data(&remove_delay_data(&maps, &payload.f_d), &payload.beta);
    Ok(AtOutput { estimates: sense(&maps, cfg, schedules, term, params), clutter })
}

/// Active-terminal chain: divide out the known data, then sense.
pub fn pipeline_at(cube: &IfCube, payload: &FramePayload, schedules: &[LatinSchedule], cfg: &SystemConfig, params: &ReceiverParams) -> Result<AtOutput, ReceiverError> {
    pipeline_known(cube, payload, schedules, cfg, params, Terminal::Active)
}

/// Passive-terminal chain. Without predictions the frame is treated as an
/// unmodulated acquisition frame.
pub fn pipeline_pt(
    cube: &IfCube,
    predictions: Option<&[Prediction]>,
    schedules: &[LatinSchedule],
    cfg: &SystemConfig,
    params: &ReceiverParams,
) -> Result<PtOutput, ReceiverError> {
    check_cube(cube, cfg)?;
    check_schedules(schedules, cfg)?;
    let (maps, clutter) = range_and_clutter(cube, schedules, params);
    let preds = match predictions {
        Some(p) if !p.is_empty() => p,
        _ => {
            let estimates = sense(&maps, cfg, schedules, Terminal::Passive, params);
            return Ok(PtOutput { demod: None, estimates, clutter, masked: Vec::new() });
        }
    };
    let masked: Vec<usize> = preds
        .iter()
        .enumerate()
        .filter(|(_, p)| clutter.contains(p.range_bin.round().max(0.0) as usize))
        .map(|(i, _)| i)
        .collect();
    let f_d: Vec<Vec<u32>> = (0..cfg.m).into_par_iter().map(|m| demod_delay_data(&accumulate(&maps, m), preds)).collect();
    let shifted = remove_delay_data(&maps, &f_d);

    let tracked: Vec<Prediction> = preds.iter().filter(|p| p.doppler_bin.is_some()).copied().collect();
    let dpsk_targets: Vec<Prediction> = if tracked.is_empty() { preds.to_vec() } else { tracked };
    let floor = params.dpsk_floor * noise_sigma(&shifted);
    let dec = demod_dpsk(&shifted, &dpsk_targets, schedules, cfg.d, floor);
    let clean = remove_amplitude_data(&shifted, &dec.beta);
    let estimates = sense(&clean, cfg, schedules, Terminal::Passive, params);

    let hard: Vec<Vec<Vec<u32>>> = dec.increments.iter().map(|m| m.iter().map(|l| l.iter().map(|k| k.unwrap_or(0)).collect()).collect()).collect();
    let bits = decode_frame(&f_d, &hard, cfg);
    Ok(PtOutput {
        demod: Some(PtDemod { f_d, increments: dec.increments, beta: dec.beta, bits }),
        estimates,
        clutter,
        masked,
    })
}
