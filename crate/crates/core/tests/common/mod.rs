//! Independent dense oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use wbdoa::array::ArrayGeometry;
use wbdoa::model::ModelConfig;
use wbdoa::stripe::StripeMatrix;
use wbdoa::Complex64;

pub fn random_stripe<R: Rng>(rows: usize, cols: usize, len: usize, rng: &mut R) -> StripeMatrix {
    let data = (0..rows * cols * len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    StripeMatrix::from_raw(rows, cols, len, data).unwrap()
}

/// Hermitian positive definite stripe: `B†B + I`.
pub fn random_hpd_stripe<R: Rng>(n: usize, len: usize, rng: &mut R) -> StripeMatrix {
    let b = random_stripe(n + 1, n, len, rng);
    let mut g = b.adjoint().mul(&b).unwrap();
    g.add_block_diagonal(&vec![1.0; n]).unwrap();
    g
}

/// Dense expansion built entry by entry from the block diagonals.
pub fn dense(s: &StripeMatrix) -> DMatrix<Complex64> {
    let len = s.block_len();
    let mut d = DMatrix::from_element(s.block_rows() * len, s.block_cols() * len, Complex64::new(0.0, 0.0));
    for i in 0..s.block_rows() {
        for j in 0..s.block_cols() {
            for (m, v) in s.block(i, j).iter().enumerate() {
                d[(i * len + m, j * len + m)] = *v;
            }
        }
    }
    d
}

pub fn rel_err(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Real closed form of the period-`p` pure-phase delay taps (even `p`).
pub fn taps_oracle(delay: f64, p: usize) -> Vec<f64> {
    assert!(p.is_multiple_of(2));
    let pf = p as f64;
    (0..p)
        .map(|n| {
            let nf = n as f64;
            let mut s = 1.0;
            for m in 1..p / 2 {
                s += 2.0 * (2.0 * PI * m as f64 * (nf - delay) / pf).cos();
            }
            s += (PI * delay).cos() * (PI * nf).cos();
            s / pf
        })
        .collect()
}

/// Time-domain model matrix `A` from the closed-form taps.
pub fn model_matrix(phis: &[f64], geom: &ArrayGeometry, n: usize, p: usize) -> DMatrix<f64> {
    let m = geom.num_sensors;
    let mut a = DMatrix::zeros(m * n, phis.len() * p);
    for (j, &phi) in phis.iter().enumerate() {
        let tau = -geom.spacing_m * phi.sin() * geom.sample_rate_hz / geom.wave_speed_mps;
        for i in 0..m {
            let h = taps_oracle(i as f64 * tau, p);
            for t in 0..n {
                for l in 0..p {
                    a[(i * n + t, j * p + l)] = h[(t + p - l) % p];
                }
            }
        }
    }
    a
}

/// Collapsed log-likelihood straight from the marginal covariance
/// `C = I + A Γ Aᵀ` of the data, constants dropped.
pub fn loglik_oracle(y: &[Vec<f64>], phis: &[f64], gammas: &[f64], cfg: &ModelConfig) -> f64 {
    let (n, p) = (cfg.n_samples(), cfg.period());
    let yv = DVector::from_iterator(y.len() * n, y.iter().flatten().copied());
    let a = model_matrix(phis, &cfg.geometry, n, p);
    let g = DVector::from_iterator(phis.len() * p, gammas.iter().flat_map(|&g| std::iter::repeat_n(g, p)));
    let c = DMatrix::identity(yv.len(), yv.len()) + &a * DMatrix::from_diagonal(&g) * a.transpose();
    let chol = c.cholesky().expect("C is positive definite");
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let quad = yv.dot(&chol.solve(&yv));
    let shape = cfg.alpha + 0.5 * yv.len() as f64;
    -0.5 * log_det - shape * (cfg.beta + 0.5 * quad).ln()
}

pub fn random_channels<R: Rng>(m: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
