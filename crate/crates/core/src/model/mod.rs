//! The hierarchical model: configuration, priors, collapsed likelihoods and
//! the joint log posterior over `(k, φ_{1:k}, γ_{1:k})`.

mod config;
mod likelihood;
mod prior;

pub use config::{Direction, ModelConfig, ModelState};
pub use likelihood::{
    assemble_system, collapsed_loglik_dense, collapsed_loglik_freq, dense_system_matrix, prepare_freq_data,
    prior_cov_stripe, steering_stripe, FreqData, PosteriorSystem,
};
pub use prior::{log_prior_local, log_prior_order, order_prior_pmf};

/// `log p(y | θ) + log p(k) + Σ_j log p(φ_j) p(γ_j)`; `-∞` outside the support.
pub fn log_posterior(data: &FreqData, state: &ModelState, cfg: &ModelConfig) -> f64 {
    let k = state.k();
    let mut lp = log_prior_order(k, cfg);
    for (&phi, &gamma) in state.phis.iter().zip(&state.gammas) {
        lp += log_prior_local(phi, gamma, cfg);
    }
    if lp == f64::NEG_INFINITY || lp.is_nan() {
        return f64::NEG_INFINITY;
    }
    let ll = collapsed_loglik_freq(data, state, cfg);
    if ll.is_finite() {
        lp + ll
    } else {
        f64::NEG_INFINITY
    }
}
