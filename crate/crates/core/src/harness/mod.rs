//! Experiment configuration, persistence, sweeps and correctness harnesses
//! behind the command-line interface.

pub mod config;
pub mod io;
pub mod pipeline;
pub mod sweep;

pub use config::{ExperimentConfig, Profile, SweepAxis, SweepConfig};
pub use pipeline::{infer, reconstruct, report, simulate, InferenceReport};
