//! Experiment harness for the ISAC simulator: swarm kinematics, Monte-Carlo
//! sweeps, the dynamic tracking run and their CSV outputs.

pub mod cli;
pub mod experiments;
pub mod scenario;
pub mod stats;
