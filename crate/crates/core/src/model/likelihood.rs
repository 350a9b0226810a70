use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ModelConfig, ModelState};
use crate::array::{delay_taps, fractional_delay_spectrum, ArrayGeometry, FilterConfig};
use crate::dft::UnitaryDft;
use crate::error::{Error, Result};
use crate::stripe::{block_ldl, forward_substitute, LdlFactors, StripeMatrix};

/// Observed data in the frequency domain.
#[derive(Clone, Debug)]
pub struct FreqData {
    /// Blockwise unitary DFT of each zero-padded channel, length `M·N′`.
    pub y_f: Vec<Complex64>,
    /// `y†y` of the time-domain data.
    pub y_energy: f64,
    /// The `M × N` time-domain channels.
    pub raw: Vec<Vec<f64>>,
    /// Bins `0..=N′/2` of each channel of `y_f`.
    y_f_half: Vec<Complex64>,
    period: usize,
}

impl FreqData {
    pub fn num_sensors(&self) -> usize {
        self.raw.len()
    }

    pub fn n_samples(&self) -> usize {
        self.raw.first().map_or(0, Vec::len)
    }

    pub fn period(&self) -> usize {
        self.period
    }

    fn check(&self, cfg: &ModelConfig) -> Result<()> {
        if self.num_sensors() != cfg.num_sensors() || self.n_samples() != cfg.n_samples() || self.period != cfg.period()
        {
            return Err(Error::shape(format!(
                "data is {}x{} (period {}), model expects {}x{} (period {})",
                self.num_sensors(),
                self.n_samples(),
                self.period,
                cfg.num_sensors(),
                cfg.n_samples(),
                cfg.period()
            )));
        }
        Ok(())
    }
}

fn check_channels(y: &[Vec<f64>], m: usize, n: usize) -> Result<()> {
    if y.len() != m || y.iter().any(|c| c.len() != n) {
        return Err(Error::shape(format!(
            "expected {m} channels of {n} samples, got {} channels of lengths {:?}",
            y.len(),
            y.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(())
}

/// Zero-pad every channel to `N′` and apply the unitary DFT.
pub fn prepare_freq_data(y: &[Vec<f64>], cfg: &ModelConfig) -> Result<FreqData> {
    let (m, n, period) = (cfg.num_sensors(), cfg.n_samples(), cfg.period());
    check_channels(y, m, n)?;
    let dft = UnitaryDft::new(period);
    let mut y_f = Vec::with_capacity(m * period);
    for ch in y {
        y_f.extend(dft.forward_real_padded(ch));
    }
    let y_energy = y.iter().flatten().map(|v| v * v).sum();
    let y_f_half = y_f
        .chunks(period)
        .flat_map(|c| c[..=period / 2].iter().copied())
        .collect();
    Ok(FreqData {
        y_f,
        y_f_half,
        y_energy,
        raw: y.to_vec(),
        period,
    })
}

/// Bins `0..=N′/2` of the steering spectra; the rest follow by conjugate
/// symmetry.
fn steering_half(phis: &[f64], geom: &ArrayGeometry, filter: &FilterConfig) -> StripeMatrix {
    let (m, k, period) = (geom.num_sensors, phis.len(), filter.period());
    let half = period / 2;
    let mut s = StripeMatrix::zeros(m, k, half + 1);
    if filter.shaper().is_identity() {
        let mut w = vec![Complex64::new(0.0, 0.0); half];
        let mut cur = vec![Complex64::new(0.0, 0.0); half];
        for (j, &phi) in phis.iter().enumerate() {
            // sensor i sees (i-1) times the step delay, so its spectrum is the
            // (i-1)-th power of the step phasor below Nyquist
            let tau = geom.step_delay_samples(phi);
            for (b, wm) in w.iter_mut().enumerate() {
                *wm = Complex64::from_polar(1.0, -2.0 * PI * b as f64 * tau / period as f64);
            }
            cur.fill(Complex64::new(1.0, 0.0));
            for i in 0..m {
                let blk = s.block_mut(i, j);
                blk[..half].copy_from_slice(&cur);
                blk[half] = Complex64::new((PI * i as f64 * tau).cos(), 0.0);
                // refresh from the exact phase every 8 sensors to bound drift
                if (i + 1) % 8 == 0 {
                    let d = (i + 1) as f64 * tau;
                    for (b, c) in cur.iter_mut().enumerate() {
                        *c = Complex64::from_polar(1.0, -2.0 * PI * b as f64 * d / period as f64);
                    }
                } else {
                    cur.iter_mut().zip(&w).for_each(|(c, wm)| *c *= wm);
                }
            }
        }
    } else {
        for (j, &phi) in phis.iter().enumerate() {
            let tau = geom.step_delay_samples(phi);
            for i in 0..m {
                let spec = fractional_delay_spectrum(i as f64 * tau, filter);
                s.block_mut(i, j).copy_from_slice(&spec[..=half]);
            }
        }
    }
    s
}

/// Frequency-domain system matrix `S` (`M × k` blocks of length `N′`), block
/// `(i, j)` being the spectrum of the delay from source `j` to sensor `i`.
pub fn steering_stripe(phis: &[f64], geom: &ArrayGeometry, filter: &FilterConfig) -> StripeMatrix {
    let (m, k, period) = (geom.num_sensors, phis.len(), filter.period());
    let half = period / 2;
    let h = steering_half(phis, geom, filter);
    let mut s = StripeMatrix::zeros(m, k, period);
    for i in 0..m {
        for j in 0..k {
            let src = h.block(i, j);
            let blk = s.block_mut(i, j);
            blk[..=half].copy_from_slice(src);
            for b in 1..half {
                blk[period - b] = src[b].conj();
            }
        }
    }
    s
}

/// Block-diagonal `T = diag(γ_1 I, …, γ_k I)`.
pub fn prior_cov_stripe(gammas: &[f64], len: usize) -> Result<StripeMatrix> {
    if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::usage(format!("SNR parameters must be positive, got {g}")));
    }
    Ok(StripeMatrix::block_diagonal(gammas, len))
}

/// `R = T⁻¹ + S†S` in factored form together with `z = S†y_F`.
#[derive(Clone, Debug)]
pub struct PosteriorSystem {
    pub factors: LdlFactors,
    pub z: Vec<Complex64>,
}

pub fn assemble_system(data: &FreqData, state: &ModelState, cfg: &ModelConfig) -> Result<PosteriorSystem> {
    data.check(cfg)?;
    state.validate()?;
    let s = steering_stripe(&state.phis, &cfg.geometry, &cfg.filter);
    let mut r = s.gram();
    let inv: Vec<f64> = state.gammas.iter().map(|g| g.recip()).collect();
    r.add_block_diagonal(&inv)?;
    let factors = block_ldl(&r)?;
    let z = s.adjoint_apply(&data.y_f)?;
    Ok(PosteriorSystem { factors, z })
}

fn nig_marginal(log_det_prior_inv: f64, log_det_r: f64, residual: f64, cfg: &ModelConfig) -> f64 {
    let scale = cfg.beta + 0.5 * residual;
    if !(residual.is_finite() && scale > 0.0) {
        return f64::NEG_INFINITY;
    }
    let v = 0.5 * log_det_prior_inv - 0.5 * log_det_r - cfg.posterior_shape() * scale.ln();
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Approximate collapsed log-likelihood (constants dropped), evaluated with
/// the stripe LDLᵀ of `R = T⁻¹ + S†S`. Any numerical failure gives `-∞`.
///
/// Real data and conjugate-symmetric steering make bins `m` and `N′ − m`
/// contribute equally, so only bins `0..=N′/2` are factored.
pub fn collapsed_loglik_freq(data: &FreqData, state: &ModelState, cfg: &ModelConfig) -> f64 {
    if state.validate().is_err() || data.check(cfg).is_err() {
        return f64::NEG_INFINITY;
    }
    if state.k() == 0 {
        return nig_marginal(0.0, 0.0, data.y_energy, cfg);
    }
    let period = cfg.period();
    let half = period / 2;
    let s = steering_half(&state.phis, &cfg.geometry, &cfg.filter);
    let mut r = s.gram();
    let inv: Vec<f64> = state.gammas.iter().map(|g| g.recip()).collect();
    if r.add_block_diagonal(&inv).is_err() {
        return f64::NEG_INFINITY;
    }
    let Ok(factors) = block_ldl(&r) else {
        return f64::NEG_INFINITY;
    };
    let Ok(z) = s.adjoint_apply(&data.y_f_half) else {
        return f64::NEG_INFINITY;
    };
    let Ok(w) = forward_substitute(&factors.unit_lower, &z) else {
        return f64::NEG_INFINITY;
    };
    let mut quad = 0.0;
    let mut log_det_r = 0.0;
    for (idx, (v, d)) in w.iter().zip(&factors.diag).enumerate() {
        let b = idx % (half + 1);
        let weight = if b == 0 || b == half { 1.0 } else { 2.0 };
        quad += weight * v.norm_sqr() / d;
        log_det_r += weight * d.ln();
    }
    let log_det_prior_inv: f64 = -(period as f64) * state.gammas.iter().map(|g| g.ln()).sum::<f64>();
    nig_marginal(log_det_prior_inv, log_det_r, data.y_energy - quad, cfg)
}

/// Dense real `A = M_M·H`: `M·N × k·N′`, each block the first `N` rows of the
/// circulant built from the delay taps.
pub fn dense_system_matrix(phis: &[f64], cfg: &ModelConfig) -> DMatrix<f64> {
    let (m, n, period, k) = (cfg.num_sensors(), cfg.n_samples(), cfg.period(), phis.len());
    let mut a = DMatrix::zeros(m * n, k * period);
    for (j, &phi) in phis.iter().enumerate() {
        let tau = cfg.geometry.step_delay_samples(phi);
        for i in 0..m {
            let h = delay_taps(i as f64 * tau, &cfg.filter);
            for t in 0..n {
                for l in 0..period {
                    a[(i * n + t, j * period + l)] = h[(t + period - l) % period];
                }
            }
        }
    }
    a
}

/// Exact time-domain collapsed log-likelihood by dense Cholesky. Test oracle;
/// cost is cubic in `k·N′`.
pub fn collapsed_loglik_dense(y: &[Vec<f64>], state: &ModelState, cfg: &ModelConfig) -> f64 {
    if state.validate().is_err() || check_channels(y, cfg.num_sensors(), cfg.n_samples()).is_err() {
        return f64::NEG_INFINITY;
    }
    let yv = DVector::from_iterator(y.iter().map(Vec::len).sum(), y.iter().flatten().copied());
    let energy = yv.dot(&yv);
    if state.k() == 0 {
        return nig_marginal(0.0, 0.0, energy, cfg);
    }
    let period = cfg.period();
    let a = dense_system_matrix(&state.phis, cfg);
    let mut p = a.transpose() * &a;
    for (j, g) in state.gammas.iter().enumerate() {
        for l in 0..period {
            p[(j * period + l, j * period + l)] += g.recip();
        }
    }
    let chol = match p.cholesky() {
        Some(c) => c,
        None => return f64::NEG_INFINITY,
    };
    let log_det_p = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let aty = a.transpose() * &yv;
    let quad = aty.dot(&chol.solve(&aty));
    let log_det_prior_inv = -(period as f64) * state.gammas.iter().map(|g| g.ln()).sum::<f64>();
    nig_marginal(log_det_prior_inv, log_det_p, energy - quad, cfg)
}
