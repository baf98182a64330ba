//! Receive processing for both terminals.
//!
//! The active terminal knows its payload and divides it out before sensing.
//! The passive terminal first recovers the payload from the predicted target
//! positions, removes it, and then senses with the same back end: candidate
//! range rows, per-stream Doppler recovery, range-Doppler CFAR, clustering
//! and redundant-DFT angle estimation.

pub mod angle;
pub mod cfar;
pub mod clutter;
pub mod cluster;
pub mod jspedd;
pub mod omp;
pub mod pipeline;
pub mod range;

pub use jspedd::Prediction;
pub use pipeline::{pipeline_at, pipeline_known, pipeline_pt, AtOutput, DopplerMethod, PtDemod, PtOutput, ReceiverParams};

use crate::channel::Direction;
use crate::config::Terminal;
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReceiverError {
    #[error("cube shape {got:?} does not match the configuration {expected:?}")]
    Shape { got: Vec<usize>, expected: Vec<usize> },
    #[error("payload or schedule shape does not match the configuration")]
    Payload,
}

/// Sensing result for one target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetEstimate {
    pub terminal: Terminal,
    /// One-way distance (active) or path length (passive) [m].
    pub distance: f64,
    pub velocity: f64,
    pub departure: Direction,
    pub arrival: Direction,
    pub range_bin: f64,
    pub doppler_bin: f64,
    /// Accumulated range-Doppler power of the cluster representative.
    pub score: f64,
    /// An angle peak fell on the edge of its grid.
    pub edge: bool,
}

#[derive(Serialize)]
struct EstimateRow {
    frame: usize,
    terminal: &'static str,
    index: usize,
    distance_m: f64,
    velocity_mps: f64,
    az_tx: f64,
    el_tx: f64,
    az_rx: f64,
    el_rx: f64,
    range_bin: f64,
    doppler_bin: f64,
    score: f64,
    edge: bool,
}

/// One CSV row per target per frame.
pub fn write_estimates_csv<W: Write>(frames: &[(usize, Vec<TargetEstimate>)], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (frame, ests) in frames {
        for (index, e) in ests.iter().enumerate() {
            w.serialize(EstimateRow {
                frame: *frame,
                terminal: match e.terminal {
                    Terminal::Active => "active",
                    Terminal::Passive => "passive",
                },
                index,
                distance_m: e.distance,
                velocity_mps: e.velocity,
                az_tx: e.departure.az,
                el_tx: e.departure.el,
                az_rx: e.arrival.az,
                el_rx: e.arrival.el,
                range_bin: e.range_bin,
                doppler_bin: e.doppler_bin,
                score: e.score,
                edge: e.edge,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
