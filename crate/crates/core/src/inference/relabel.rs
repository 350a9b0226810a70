use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sampler::ChainTrace;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelabelConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Relative change in mixture log-likelihood that counts as converged.
    pub tol: f64,
    /// Lower bound on component standard deviations, in radians.
    pub sd_floor: f64,
    pub seed: u64,
}

impl Default for RelabelConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iter: 500,
            tol: 1e-8,
            sd_floor: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub mean: f64,
    pub sd: f64,
    pub weight: f64,
}

/// Gaussian-plus-uniform mixture over pooled directions and the per-sample
/// labels derived from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureLabeling {
    pub kappa: usize,
    /// Sorted by mean.
    pub components: Vec<MixtureComponent>,
    pub outlier_weight: f64,
    /// `assignments[t][i]` labels direction `i` of retained sample `t`:
    /// `0` for the outlier component, `c ≥ 1` for `components[c - 1]`.
    pub assignments: Vec<Vec<usize>>,
    pub log_likelihood: f64,
    /// Mixture log-likelihood after every EM iteration of the kept fit.
    pub history: Vec<f64>,
}

fn log_normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

struct Fit {
    comps: Vec<MixtureComponent>,
    outlier: f64,
    loglik: f64,
    history: Vec<f64>,
}

fn log_terms(x: f64, comps: &[MixtureComponent], outlier: f64, buf: &mut Vec<f64>) {
    buf.clear();
    buf.push(if outlier > 0.0 {
        outlier.ln() - PI.ln()
    } else {
        f64::NEG_INFINITY
    });
    for c in comps {
        buf.push(if c.weight > 0.0 {
            c.weight.ln() + log_normal_pdf(x, c.mean, c.sd)
        } else {
            f64::NEG_INFINITY
        });
    }
}

fn mixture_loglik(xs: &[f64], comps: &[MixtureComponent], outlier: f64) -> f64 {
    let mut buf = Vec::with_capacity(comps.len() + 1);
    xs.iter()
        .map(|&x| {
            log_terms(x, comps, outlier, &mut buf);
            log_sum_exp(&buf)
        })
        .sum()
}

fn kmeanspp<R: Rng>(xs: &[f64], kappa: usize, rng: &mut R) -> Vec<f64> {
    let mut centers = vec![xs[rng.random_range(0..xs.len())]];
    let mut d2: Vec<f64> = xs.iter().map(|x| (x - centers[0]).powi(2)).collect();
    while centers.len() < kappa {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = xs.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            xs[pick]
        } else {
            rng.random_range(-FRAC_PI_2..FRAC_PI_2)
        };
        centers.push(next);
        for (d, x) in d2.iter_mut().zip(xs) {
            *d = d.min((x - next).powi(2));
        }
    }
    centers
}

fn initial_fit(xs: &[f64], centers: &[f64], sd_floor: f64) -> (Vec<MixtureComponent>, f64) {
    let kappa = centers.len();
    let mut sums = vec![(0usize, 0.0, 0.0); kappa];
    for &x in xs {
        let c = (0..kappa)
            .min_by(|&a, &b| (x - centers[a]).abs().total_cmp(&(x - centers[b]).abs()))
            .expect("kappa >= 1");
        sums[c].0 += 1;
        sums[c].1 += (x - centers[c]).powi(2);
    }
    let n = xs.len() as f64;
    let outlier = 0.1;
    let comps = centers
        .iter()
        .zip(&sums)
        .map(|(&mean, &(cnt, ss, _))| MixtureComponent {
            mean,
            sd: if cnt > 1 {
                (ss / cnt as f64).sqrt().max(sd_floor)
            } else {
                0.1f64.max(sd_floor)
            },
            weight: (1.0 - outlier) * (cnt.max(1) as f64) / (n + kappa as f64),
        })
        .collect::<Vec<_>>();
    let wsum: f64 = comps.iter().map(|c| c.weight).sum();
    let comps = comps
        .into_iter()
        .map(|c| MixtureComponent {
            weight: c.weight * (1.0 - outlier) / wsum,
            ..c
        })
        .collect();
    (comps, outlier)
}

fn run_em(xs: &[f64], mut comps: Vec<MixtureComponent>, mut outlier: f64, cfg: &RelabelConfig) -> Fit {
    let kappa = comps.len();
    let n = xs.len() as f64;
    let mut buf = Vec::with_capacity(kappa + 1);
    let mut resp = vec![0.0; (kappa + 1) * xs.len()];
    let mut prev = mixture_loglik(xs, &comps, outlier);
    let mut history = vec![prev];
    for _ in 0..cfg.max_iter {
        for (t, &x) in xs.iter().enumerate() {
            log_terms(x, &comps, outlier, &mut buf);
            let lse = log_sum_exp(&buf);
            for (c, b) in buf.iter().enumerate() {
                resp[t * (kappa + 1) + c] = (b - lse).exp();
            }
        }
        let mut nk = vec![0.0; kappa + 1];
        let mut sx = vec![0.0; kappa + 1];
        for (t, &x) in xs.iter().enumerate() {
            for c in 0..=kappa {
                let r = resp[t * (kappa + 1) + c];
                nk[c] += r;
                sx[c] += r * x;
            }
        }
        outlier = nk[0] / n;
        for c in 0..kappa {
            let w = nk[c + 1];
            let comp = &mut comps[c];
            comp.weight = w / n;
            if w > 1e-12 {
                comp.mean = sx[c + 1] / w;
                let ss: f64 = xs
                    .iter()
                    .enumerate()
                    .map(|(t, &x)| resp[t * (kappa + 1) + c + 1] * (x - comp.mean).powi(2))
                    .sum();
                comp.sd = (ss / w).sqrt().max(cfg.sd_floor);
            }
        }
        let ll = mixture_loglik(xs, &comps, outlier);
        history.push(ll);
        let done = (ll - prev).abs() <= cfg.tol * prev.abs().max(1.0);
        prev = ll;
        if done {
            break;
        }
    }
    Fit {
        comps,
        outlier,
        loglik: prev,
        history,
    }
}

/// EM fit of `κ` Gaussians plus a uniform outlier on `[-π/2, π/2]` to `xs`.
/// Returns `(components sorted by mean, outlier weight, log-likelihood,
/// history)`.
pub fn fit_mixture(
    xs: &[f64],
    kappa: usize,
    cfg: &RelabelConfig,
) -> Result<(Vec<MixtureComponent>, f64, f64, Vec<f64>)> {
    if kappa == 0 {
        return Err(Error::usage("kappa must be at least 1"));
    }
    if xs.is_empty() {
        return Err(Error::usage("no directions to relabel"));
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let mut best: Option<Fit> = None;
    for _ in 0..cfg.restarts.max(1) {
        let centers = kmeanspp(xs, kappa, &mut rng);
        let (comps, outlier) = initial_fit(xs, &centers, cfg.sd_floor);
        let fit = run_em(xs, comps, outlier, cfg);
        if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
            best = Some(fit);
        }
    }
    let mut fit = best.expect("at least one restart");
    fit.comps.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    Ok((fit.comps, fit.outlier, fit.loglik, fit.history))
}

/// Unique per-sample assignment: pairs are taken greedily by score, each
/// component at most once per sample, and a direction only joins a component
/// it prefers over the outlier.
fn assign(phis: &[f64], comps: &[MixtureComponent], outlier: f64) -> Vec<usize> {
    let out_score = if outlier > 0.0 {
        outlier.ln() - PI.ln()
    } else {
        f64::NEG_INFINITY
    };
    let mut pairs = Vec::with_capacity(phis.len() * comps.len());
    for (i, &x) in phis.iter().enumerate() {
        for (c, comp) in comps.iter().enumerate() {
            if comp.weight > 0.0 {
                pairs.push((comp.weight.ln() + log_normal_pdf(x, comp.mean, comp.sd), i, c));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut labels = vec![0usize; phis.len()];
    let mut used = vec![false; comps.len()];
    for (score, i, c) in pairs {
        if labels[i] == 0 && !used[c] && score > out_score {
            labels[i] = c + 1;
            used[c] = true;
        }
    }
    labels
}

pub fn relabel_with(trace: &ChainTrace, kappa: usize, cfg: &RelabelConfig) -> Result<MixtureLabeling> {
    let pooled: Vec<f64> = trace.samples.iter().flat_map(|s| s.phis.iter().copied()).collect();
    let (components, outlier_weight, log_likelihood, history) = fit_mixture(&pooled, kappa, cfg)?;
    let assignments = trace
        .samples
        .iter()
        .map(|s| assign(&s.phis, &components, outlier_weight))
        .collect();
    Ok(MixtureLabeling {
        kappa,
        components,
        outlier_weight,
        assignments,
        log_likelihood,
        history,
    })
}

pub fn relabel(trace: &ChainTrace, kappa: usize) -> Result<MixtureLabeling> {
    relabel_with(trace, kappa, &RelabelConfig::default())
}
