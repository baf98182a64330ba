//! Pseudo-random TDM-MIMO FMCW integrated sensing and communication.
//!
//! The crate covers the whole link: system configuration and array geometry,
//! antenna schedules and resource blocks, payload modulation onto the chirp
//! delay and complex amplitude, sampled IF synthesis for active and passive
//! terminals, both receive pipelines, and the tracking filter that feeds the
//! passive demodulator.

pub mod channel;
pub mod config;
pub mod linalg;
pub mod modem;
pub mod receiver;
pub mod scheduler;
pub mod tracking;

pub use num_complex::Complex64;
