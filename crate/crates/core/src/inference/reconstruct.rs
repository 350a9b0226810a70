use num_complex::Complex64;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::MixtureLabeling;
use crate::dft::{symmetrize, UnitaryDft};
use crate::error::{Error, Result};
use crate::model::{assemble_system, FreqData, ModelConfig, ModelState, PosteriorSystem};
use crate::stats::quantile;
use crate::stripe::{backward_substitute_adjoint, solve};

/// Reconstructions aggregated per relabeled source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    /// Student-t degrees of freedom `2α̃`.
    pub dof: f64,
    pub sources: Vec<SourceBand>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceBand {
    /// 1-based mixture component this source was relabeled to.
    pub component: usize,
    /// Posterior mean over the retained samples, length `N′`.
    pub mean: Vec<f64>,
    /// Pointwise 2.5% and 97.5% quantiles of the draws.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub n_draws: usize,
}

fn to_time(spectra: &[Complex64], k: usize, period: usize, dft: &UnitaryDft) -> Vec<Vec<f64>> {
    (0..k)
        .map(|j| {
            let mut buf = spectra[j * period..(j + 1) * period].to_vec();
            symmetrize(&mut buf);
            dft.inverse(&mut buf);
            buf.into_iter().map(|v| v.re).collect()
        })
        .collect()
}

fn system(data: &FreqData, sample: &ModelState, cfg: &ModelConfig) -> Result<(PosteriorSystem, Vec<Complex64>)> {
    if sample.k() == 0 {
        return Err(Error::usage("reconstruction needs at least one source"));
    }
    let sys = assemble_system(data, sample, cfg)?;
    let mean = solve(&sys.factors, &sys.z)?;
    Ok((sys, mean))
}

/// Location `R⁻¹z` of the conditional posterior of the sources, as `k` real
/// signals of length `N′`.
pub fn posterior_location(data: &FreqData, sample: &ModelState, cfg: &ModelConfig) -> Result<Vec<Vec<f64>>> {
    let (_, mean) = system(data, sample, cfg)?;
    let period = cfg.period();
    Ok(to_time(&mean, sample.k(), period, &UnitaryDft::new(period)))
}

/// One joint Student-t draw of the `k` source signals given `sample`.
pub fn reconstruct_sources<R: Rng + ?Sized>(
    data: &FreqData,
    sample: &ModelState,
    cfg: &ModelConfig,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let (sys, mean) = system(data, sample, cfg)?;
    let period = cfg.period();
    let k = sample.k();
    let quad: f64 = sys.z.iter().zip(&mean).map(|(a, b)| (a.conj() * b).re).sum();
    let shape = cfg.posterior_shape();
    let scale = cfg.beta + 0.5 * (data.y_energy - quad);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Decomposition { pivot: 0, value: scale });
    }
    let dof = 2.0 * shape;
    let chi: f64 = ChiSquared::new(dof)
        .map_err(|e| Error::usage(e.to_string()))?
        .sample(rng);
    let mult = (scale / shape).sqrt() / (chi / dof).sqrt();

    // white real noise taken to the frequency domain keeps conjugate symmetry,
    // and L⁻†D^{-1/2} maps it to covariance R⁻¹
    let dft = UnitaryDft::new(period);
    let mut white = Vec::with_capacity(k * period);
    for _ in 0..k {
        let mut buf: Vec<Complex64> = (0..period)
            .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
            .collect();
        dft.forward(&mut buf);
        white.extend(buf);
    }
    white
        .iter_mut()
        .zip(&sys.factors.diag)
        .for_each(|(w, d)| *w /= d.sqrt());
    let colored = backward_substitute_adjoint(&sys.factors.unit_lower, &white)?;
    let draw: Vec<Complex64> = mean.iter().zip(&colored).map(|(m, e)| m + e * mult).collect();
    Ok(to_time(&draw, k, period, &dft))
}

/// Reconstruct every retained sample and pool the draws by mixture
/// component. Samples whose system fails to factor are skipped with a
/// warning. Outlier-labeled directions are dropped. `components` selects
/// the 1-based labels to report, in order.
pub fn aggregate_reconstructions<R: Rng + ?Sized>(
    data: &FreqData,
    samples: &[ModelState],
    labels: &[Vec<usize>],
    components: &[usize],
    cfg: &ModelConfig,
    rng: &mut R,
) -> Result<Reconstruction> {
    if samples.len() != labels.len() {
        return Err(Error::shape("one label vector per sample is required"));
    }
    let period = cfg.period();
    let mut means: Vec<Vec<f64>> = vec![vec![0.0; period]; components.len()];
    let mut draws: Vec<Vec<Vec<f64>>> = vec![Vec::new(); components.len()];
    for (sample, lab) in samples.iter().zip(labels) {
        if sample.k() == 0 || lab.iter().all(|l| !components.contains(l)) {
            continue;
        }
        let (loc, draw) = match posterior_location(data, sample, cfg)
            .and_then(|loc| reconstruct_sources(data, sample, cfg, rng).map(|d| (loc, d)))
        {
            Ok(v) => v,
            Err(e) if e.is_decomposition() => {
                log::warn!("skipping sample in reconstruction: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        for (i, l) in lab.iter().enumerate() {
            if let Some(slot) = components.iter().position(|c| c == l) {
                means[slot].iter_mut().zip(&loc[i]).for_each(|(a, b)| *a += b);
                draws[slot].push(draw[i].clone());
            }
        }
    }
    let sources = components
        .iter()
        .zip(means)
        .zip(draws)
        .map(|((&component, mut mean), d)| {
            let n = d.len();
            if n > 0 {
                mean.iter_mut().for_each(|v| *v /= n as f64);
            }
            let mut lower = vec![f64::NAN; period];
            let mut upper = vec![f64::NAN; period];
            let mut col = Vec::with_capacity(n);
            for t in 0..period {
                col.clear();
                col.extend(d.iter().map(|x| x[t]));
                col.sort_by(f64::total_cmp);
                lower[t] = quantile(&col, 0.025);
                upper[t] = quantile(&col, 0.975);
            }
            SourceBand {
                component,
                mean,
                lower,
                upper,
                n_draws: n,
            }
        })
        .collect();
    Ok(Reconstruction {
        dof: 2.0 * cfg.posterior_shape(),
        sources,
    })
}

impl MixtureLabeling {
    /// 1-based component labels ordered by decreasing weight.
    pub fn labels_by_weight(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.components.len()).collect();
        idx.sort_by(|&a, &b| self.components[b].weight.total_cmp(&self.components[a].weight));
        idx.into_iter().map(|i| i + 1).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ArrayGeometry, FilterConfig};
    use crate::model::{dense_system_matrix, prepare_freq_data};
    use crate::rng::stream_rng;
    use nalgebra::DVector;

    fn instance() -> (Vec<Vec<f64>>, ModelConfig, ModelState) {
        let cfg = ModelConfig::new(ArrayGeometry::underwater(3), FilterConfig::with_filter_len(8, 1));
        let mut rng = stream_rng(5, 0);
        let y = (0..3)
            .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        (y, cfg, ModelState::new(vec![0.4, -0.8], vec![2.0, 0.5]).unwrap())
    }

    #[test]
    fn location_matches_dense_oracle() {
        let (y, cfg, s) = instance();
        let data = prepare_freq_data(&y, &cfg).unwrap();
        let loc = posterior_location(&data, &s, &cfg).unwrap();
        let a = dense_system_matrix(&s.phis, &cfg);
        let mut p = a.transpose() * &a;
        let n = cfg.period();
        for (j, g) in s.gammas.iter().enumerate() {
            for l in 0..n {
                p[(j * n + l, j * n + l)] += 1.0 / g;
            }
        }
        let yv = DVector::from_iterator(24, y.iter().flatten().copied());
        let mu: DVector<f64> = p.cholesky().unwrap().solve(&(a.transpose() * yv));
        for j in 0..2 {
            for t in 0..n {
                assert!((loc[j][t] - mu[j * n + t]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn draws_are_real_and_centered() {
        let (y, cfg, s) = instance();
        let data = prepare_freq_data(&y, &cfg).unwrap();
        let loc = posterior_location(&data, &s, &cfg).unwrap();
        let mut rng = stream_rng(6, 0);
        let n = 4000;
        let mut avg = vec![vec![0.0; 8]; 2];
        for _ in 0..n {
            let d = reconstruct_sources(&data, &s, &cfg, &mut rng).unwrap();
            for j in 0..2 {
                for t in 0..8 {
                    avg[j][t] += d[j][t] / n as f64;
                }
            }
        }
        for j in 0..2 {
            for t in 0..8 {
                assert!((avg[j][t] - loc[j][t]).abs() < 0.1, "{} vs {}", avg[j][t], loc[j][t]);
            }
        }
        assert_eq!(2.0 * cfg.posterior_shape(), 24.0);
    }

    #[test]
    fn location_follows_permutation() {
        let (y, cfg, s) = instance();
        let data = prepare_freq_data(&y, &cfg).unwrap();
        let a = posterior_location(&data, &s, &cfg).unwrap();
        let swapped = ModelState::new(vec![s.phis[1], s.phis[0]], vec![s.gammas[1], s.gammas[0]]).unwrap();
        let b = posterior_location(&data, &swapped, &cfg).unwrap();
        for t in 0..8 {
            assert!((a[0][t] - b[1][t]).abs() < 1e-10);
            assert!((a[1][t] - b[0][t]).abs() < 1e-10);
        }
    }
}
