use std::f64::consts::{FRAC_PI_2, PI};

use statrs::function::gamma::ln_gamma;

use super::ModelConfig;

fn nb_log_weight(k: usize, r: f64, p: f64) -> f64 {
    ln_gamma(k as f64 + r) - ln_gamma(r) - ln_gamma(k as f64 + 1.0) + r * p.ln() + k as f64 * (-p).ln_1p()
}

/// Truncated negative-binomial pmf over `{0, …, k_max}` with
/// `r = α_λ`, `p = β_λ/(β_λ+1)`.
pub fn order_prior_pmf(cfg: &ModelConfig) -> Vec<f64> {
    let r = cfg.alpha_lambda;
    let p = cfg.beta_lambda / (cfg.beta_lambda + 1.0);
    let logs: Vec<f64> = (0..=cfg.k_max).map(|k| nb_log_weight(k, r, p)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    logs.iter().map(|l| (l - max).exp() / z).collect()
}

/// Log pmf of the truncated negative binomial order prior; `-∞` for
/// `k > k_max`.
pub fn log_prior_order(k: usize, cfg: &ModelConfig) -> f64 {
    if k > cfg.k_max {
        return f64::NEG_INFINITY;
    }
    let r = cfg.alpha_lambda;
    let p = cfg.beta_lambda / (cfg.beta_lambda + 1.0);
    let logs: Vec<f64> = (0..=cfg.k_max).map(|j| nb_log_weight(j, r, p)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logs[k] - log_z
}

/// `log Uniform(φ; [-π/2, π/2]) + log Inv-Gamma(γ; α_γ, β_γ)`.
pub fn log_prior_local(phi: f64, gamma: f64, cfg: &ModelConfig) -> f64 {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&phi) || !(gamma.is_finite() && gamma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let (a, b) = (cfg.alpha_gamma, cfg.beta_gamma);
    -PI.ln() + a * b.ln() - ln_gamma(a) - (a + 1.0) * gamma.ln() - b / gamma
}
