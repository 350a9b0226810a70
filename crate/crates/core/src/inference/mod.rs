//! Decisions from a chain: model order, relabeled per-source estimates and
//! reconstructed source signals.

mod detect;
mod reconstruct;
mod relabel;
mod summary;

pub use detect::{
    choose_kappa, choose_kappa_from_pmf, detect_from_pmf, detect_order, order_pmf, DetectionResult, OrderLoss,
};
pub use reconstruct::{aggregate_reconstructions, posterior_location, reconstruct_sources, Reconstruction, SourceBand};
pub use relabel::{fit_mixture, relabel, relabel_with, MixtureComponent, MixtureLabeling, RelabelConfig};
pub use summary::{summarize, SourceSummary};
