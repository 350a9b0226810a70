use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::ChainTrace;

/// Loss `l(k, j)` for reporting `j` when the truth is `k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderLoss {
    /// `|k - j|`; the minimizer is the posterior median.
    #[default]
    L1Median,
    /// `1{k ≠ j}`; the minimizer is the posterior mode.
    ZeroOneMode,
    /// `table[k][j]`.
    Custom(Vec<Vec<f64>>),
}

impl OrderLoss {
    fn loss(&self, k: usize, j: usize) -> f64 {
        match self {
            OrderLoss::L1Median => k.abs_diff(j) as f64,
            OrderLoss::ZeroOneMode => f64::from(u8::from(k != j)),
            OrderLoss::Custom(t) => t.get(k).and_then(|r| r.get(j)).copied().unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub k_hat: usize,
    pub posterior_pmf: Vec<f64>,
    pub loss: OrderLoss,
}

/// Empirical pmf of `orders` over `{0, …, k_max}`.
pub fn order_pmf(orders: &[usize], k_max: usize) -> Result<Vec<f64>> {
    if orders.is_empty() {
        return Err(Error::usage("empty trace"));
    }
    let mut counts = vec![0u64; k_max + 1];
    for &k in orders {
        if k > k_max {
            return Err(Error::usage(format!("order {k} exceeds k_max = {k_max}")));
        }
        counts[k] += 1;
    }
    let n = orders.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// `argmin_j Σ_k l(k, j)·pmf(k)`, ties to the smaller `j`.
pub fn detect_from_pmf(pmf: &[f64], loss: &OrderLoss) -> usize {
    let mut best = (0, f64::INFINITY);
    for j in 0..pmf.len() {
        let risk: f64 = pmf
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, &p)| loss.loss(k, j) * p)
            .sum();
        // tolerance keeps exact ties (up to rounding of the pmf) on the low side
        if risk < best.1 - 1e-12 {
            best = (j, risk);
        }
    }
    best.0
}

pub fn detect_order(trace: &ChainTrace, k_max: usize, loss: OrderLoss) -> Result<DetectionResult> {
    let posterior_pmf = order_pmf(&trace.orders(), k_max)?;
    let k_hat = detect_from_pmf(&posterior_pmf, &loss);
    Ok(DetectionResult {
        k_hat,
        posterior_pmf,
        loss,
    })
}

/// Smallest `κ` whose cumulative probability reaches 0.9.
pub fn choose_kappa_from_pmf(pmf: &[f64]) -> usize {
    let mut acc = 0.0;
    for (k, p) in pmf.iter().enumerate() {
        acc += p;
        if acc >= 0.9 - 1e-12 {
            return k;
        }
    }
    pmf.len().saturating_sub(1)
}

pub fn choose_kappa(trace: &ChainTrace, k_max: usize) -> Result<usize> {
    Ok(choose_kappa_from_pmf(&order_pmf(&trace.orders(), k_max)?))
}
