//! Lifted (non-reversible) jump sampler over model order and source
//! parameters, with slice-sampling update moves.

mod chain;
mod slice;

pub use chain::{
    birth_log_ratio, death_log_ratio, log_birth_proposal, nrjmcmc_step, run_chain, run_chain_freq, slice_update,
    ChainTrace, KernelVariant, MoveKind, SamplerConfig, StepRecord, TraceRecord,
};
pub use slice::{slice_sample, SliceOutcome, SliceSettings};
