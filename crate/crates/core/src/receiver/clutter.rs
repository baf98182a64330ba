//! Detection and excision of wide static clutter.
//!
//! Each transmit stream's slow-time samples are averaged coherently per range
//! bin; static returns survive the average, moving or data-bearing ones do
//! not. The profile is computed with a Blackman-Harris window so the range
//! skirt of a strong point target cannot masquerade as a wide run. The window
//! widens an on-grid run by up to `WINDOW_SPREAD` bins per side, and the
//! whole flagged run is excised: with Rayleigh gains the edge bins may be
//! weak enough to hide the spread, so trimming it back would leave clutter.

use super::range::{windowed_range_dft, RangeMaps};
use crate::channel::IfCube;
use crate::scheduler::LatinSchedule;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Range;

/// Bins an on-grid tone leaks into on each side under the detection window.
pub const WINDOW_SPREAD: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClutterParams {
    /// Threshold as a multiple of the profile median.
    pub threshold_factor: f64,
    /// Gaps up to this many bins are bridged.
    pub max_gap: usize,
    /// Shortest run treated as clutter [bins].
    pub min_run: usize,
}

impl Default for ClutterParams {
    fn default() -> Self {
        Self { threshold_factor: 4.0, max_gap: 3, min_run: 40 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClutterReport {
    /// Flagged runs including the window spread.
    pub intervals: Vec<Range<usize>>,
}

impl ClutterReport {
    pub fn bins(&self) -> Vec<usize> {
        self.intervals.iter().flat_map(|r| r.clone()).collect()
    }

    pub fn contains(&self, bin: usize) -> bool {
        self.intervals.iter().any(|r| r.contains(&bin))
    }
}

/// Four-term Blackman-Harris window.
pub fn blackman_harris(n: usize) -> Vec<f64> {
    let a = super::range::BLACKMAN_HARRIS;
    (0..n)
        .map(|i| {
            let x = 2.0 * PI * i as f64 / n as f64;
            a[0] - a[1] * x.cos() + a[2] * (2.0 * x).cos() - a[3] * (3.0 * x).cos()
        })
        .collect()
}

/// Mean over groups, antennas and transmit streams of the energy of the
/// coherent slow-time average, per range bin.
pub fn zero_doppler_profile(maps: &RangeMaps, schedules: &[LatinSchedule]) -> Vec<f64> {
    let n = maps.n();
    let mut prof = vec![0.0; n];
    let mut count = 0.0;
    for (m, sched) in schedules.iter().enumerate() {
        for r in 0..maps.l_rx() {
            for col in sched.columns() {
                let mut acc = vec![Complex64::new(0.0, 0.0); n];
                for &p in col {
                    for (a, z) in acc.iter_mut().zip(maps.row(m, r, p)) {
                        *a += z;
                    }
                }
                let q = col.len() as f64;
                for (pr, a) in prof.iter_mut().zip(&acc) {
                    *pr += (a / q).norm_sqr();
                }
                count += 1.0;
            }
        }
    }
    prof.iter_mut().for_each(|v| *v /= count);
    prof
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs of bins above `threshold_factor * median`, bridged across short gaps,
/// kept when their length net of window spread reaches `min_run`.
pub fn find_clutter_runs(profile: &[f64], params: &ClutterParams) -> Vec<Range<usize>> {
    let thr = params.threshold_factor * median(profile);
    let mut runs: Vec<Range<usize>> = Vec::new();
    let mut i = 0;
    while i < profile.len() {
        if profile[i] > thr {
            let start = i;
            while i < profile.len() && profile[i] > thr {
                i += 1;
            }
            match runs.last_mut() {
                Some(last) if start - last.end <= params.max_gap => last.end = i,
                _ => runs.push(start..i),
            }
        } else {
            i += 1;
        }
    }
    runs.retain(|r| r.len().saturating_sub(2 * WINDOW_SPREAD) >= params.min_run);
    runs
}

/// Clutter runs of Blackman-Harris windowed range maps.
pub fn detect_clutter_in(windowed: &RangeMaps, schedules: &[LatinSchedule], params: &ClutterParams) -> ClutterReport {
    ClutterReport { intervals: find_clutter_runs(&zero_doppler_profile(windowed, schedules), params) }
}

pub fn detect_clutter(cube: &IfCube, schedules: &[LatinSchedule], params: &ClutterParams) -> ClutterReport {
    detect_clutter_in(&windowed_range_dft(cube, Some(&blackman_harris(cube.n()))), schedules, params)
}

/// Zeroes the reported bins.
pub fn filter_clutter(maps: &mut RangeMaps, report: &ClutterReport) {
    maps.zero_bins(&report.bins());
}
