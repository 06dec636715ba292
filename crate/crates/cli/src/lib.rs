//! Experiment runner for the joint scheduling, pairing and beamforming
//! study: parameter sweeps over all methods, the beampattern case, and
//! comparisons against exhaustive search.

pub mod check;
pub mod experiment;
pub mod tiny;
