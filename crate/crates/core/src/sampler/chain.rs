use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::slice::{slice_sample, SliceOutcome, SliceSettings};
use crate::error::{Error, Result};
use crate::model::{log_posterior, prepare_freq_data, Direction, FreqData, ModelConfig, ModelState};
use crate::rng::{stream_rng, StreamRng};

/// Which transition kernel to run. The broken variant exists only so the
/// joint-distribution harness can demonstrate that it detects errors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    #[default]
    Correct,
    /// Death acceptance ratio without the reverse proposal density.
    DeathWithoutProposal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Probability `ρ` of an update move.
    pub update_prob: f64,
    /// Slice sampler initial width `w`.
    pub slice_width: f64,
    pub n_burnin: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// RNG stream of the chain; replications use distinct streams.
    pub stream: u64,
    /// Scale of the log-normal birth proposal for `γ` (location 0).
    pub gamma_log_sd: f64,
    pub max_step_out: usize,
    pub max_shrink: usize,
    pub kernel: KernelVariant,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            update_prob: 0.1,
            slice_width: 2.0,
            n_burnin: 1 << 9,
            n_samples: 1 << 11,
            seed: 0,
            stream: 1,
            gamma_log_sd: 2.0,
            max_step_out: 10_000,
            max_shrink: 10_000,
            kernel: KernelVariant::Correct,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.update_prob > 0.0 && self.update_prob < 1.0) {
            return Err(Error::config(format!(
                "update_prob must lie in (0, 1), got {}",
                self.update_prob
            )));
        }
        if !(self.slice_width > 0.0 && self.slice_width.is_finite()) {
            return Err(Error::config(format!(
                "slice_width must be positive, got {}",
                self.slice_width
            )));
        }
        if !(self.gamma_log_sd > 0.0 && self.gamma_log_sd.is_finite()) {
            return Err(Error::config("gamma_log_sd must be positive"));
        }
        if self.max_step_out == 0 || self.max_shrink == 0 {
            return Err(Error::config("slice iteration limits must be positive"));
        }
        Ok(())
    }

    fn slice_settings(&self) -> SliceSettings {
        SliceSettings {
            width: self.slice_width,
            max_steps: self.max_step_out,
            max_shrink: self.max_shrink,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Birth,
    Death,
    Update,
}

/// Bookkeeping of one transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub kind: MoveKind,
    pub accepted: bool,
    /// Log posterior of the state after the step.
    pub logp: f64,
}

/// `log q(φ, γ)` of the birth proposal: uniform direction, log-normal SNR.
pub fn log_birth_proposal(phi: f64, gamma: f64, cfg: &SamplerConfig) -> f64 {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&phi) || !(gamma.is_finite() && gamma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let s = cfg.gamma_log_sd;
    let lg = gamma.ln();
    -PI.ln() - lg - (s * (2.0 * PI).sqrt()).ln() - lg * lg / (2.0 * s * s)
}

/// `log π(k+1, θ⊕) − log π(k, θ) − log q(φ′, γ′)` for inserting the newborn
/// before position `position`.
pub fn birth_log_ratio(
    state: &ModelState,
    position: usize,
    newborn: (f64, f64),
    data: &FreqData,
    model: &ModelConfig,
    sampler: &SamplerConfig,
) -> f64 {
    let lp = log_posterior(data, state, model);
    birth_ratio_cached(state, lp, position, newborn, data, model, sampler).0
}

/// `log π(k−1, θ₋ⱼ) − log π(k, θ) + log q(φ_j, γ_j)` for removing the source at
/// 0-based `index`.
pub fn death_log_ratio(
    state: &ModelState,
    index: usize,
    data: &FreqData,
    model: &ModelConfig,
    sampler: &SamplerConfig,
) -> f64 {
    let lp = log_posterior(data, state, model);
    death_ratio_cached(state, lp, index, data, model, sampler).0
}

fn birth_ratio_cached(
    state: &ModelState,
    lp: f64,
    position: usize,
    (phi, gamma): (f64, f64),
    data: &FreqData,
    model: &ModelConfig,
    sampler: &SamplerConfig,
) -> (f64, ModelState, f64) {
    let next = state.inserted(position, phi, gamma);
    let lp_next = log_posterior(data, &next, model);
    (lp_next - lp - log_birth_proposal(phi, gamma, sampler), next, lp_next)
}

fn death_ratio_cached(
    state: &ModelState,
    lp: f64,
    index: usize,
    data: &FreqData,
    model: &ModelConfig,
    sampler: &SamplerConfig,
) -> (f64, ModelState, f64) {
    let next = state.removed(index);
    let lp_next = log_posterior(data, &next, model);
    let q = match sampler.kernel {
        KernelVariant::Correct => log_birth_proposal(state.phis[index], state.gammas[index], sampler),
        KernelVariant::DeathWithoutProposal => 0.0,
    };
    (lp_next - lp + q, next, lp_next)
}

/// Coordinate-wise slice sampling of `(φ_j, log γ_j)` in a uniformly random
/// order. Returns the new state and its log posterior.
pub fn slice_update<R: Rng + ?Sized>(
    state: &ModelState,
    logp: f64,
    data: &FreqData,
    model: &ModelConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> (ModelState, f64) {
    let k = state.k();
    if k == 0 {
        return (state.clone(), logp);
    }
    let settings = sampler.slice_settings();
    let mut order: Vec<usize> = (0..2 * k).collect();
    order.shuffle(rng);
    let mut cur = state.clone();
    let mut lp = logp;
    for coord in order {
        let j = coord / 2;
        if coord % 2 == 0 {
            let x0 = cur.phis[j];
            let mut probe = cur.clone();
            let out = slice_sample(
                x0,
                lp,
                |x| {
                    probe.phis[j] = x;
                    log_posterior(data, &probe, model)
                },
                &settings,
                rng,
            );
            match out {
                SliceOutcome::Accepted { x, logf } => {
                    cur.phis[j] = x;
                    lp = logf;
                }
                SliceOutcome::Aborted => log::warn!("slice shrinkage limit hit on direction {j}; keeping old value"),
            }
        } else {
            // log γ coordinate, with the +log γ Jacobian
            let t0 = cur.gammas[j].ln();
            let mut probe = cur.clone();
            let out = slice_sample(
                t0,
                lp + t0,
                |t| {
                    probe.gammas[j] = t.exp();
                    if !(probe.gammas[j] > 0.0 && probe.gammas[j].is_finite()) {
                        return f64::NEG_INFINITY;
                    }
                    log_posterior(data, &probe, model) + t
                },
                &settings,
                rng,
            );
            match out {
                SliceOutcome::Accepted { x, logf } => {
                    cur.gammas[j] = x.exp();
                    lp = logf - x;
                }
                SliceOutcome::Aborted => log::warn!("slice shrinkage limit hit on SNR {j}; keeping old value"),
            }
        }
    }
    (cur, lp)
}

/// One lifted transition. `logp` must be the log posterior of `state`; the
/// returned state carries the (possibly flipped) direction.
pub fn nrjmcmc_step<R: Rng + ?Sized>(
    state: &ModelState,
    logp: f64,
    data: &FreqData,
    model: &ModelConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> (ModelState, StepRecord) {
    let u: f64 = rng.random();
    if u < sampler.update_prob {
        let (next, lp) = slice_update(state, logp, data, model, sampler, rng);
        return (
            next,
            StepRecord {
                kind: MoveKind::Update,
                accepted: true,
                logp: lp,
            },
        );
    }
    let k = state.k();
    let kind = match state.direction {
        Direction::Up => MoveKind::Birth,
        Direction::Down => MoveKind::Death,
    };
    let reject = |kind| {
        let mut s = state.clone();
        s.direction = s.direction.flip();
        (
            s,
            StepRecord {
                kind,
                accepted: false,
                logp,
            },
        )
    };
    let proposal = match kind {
        MoveKind::Birth if k < model.k_max => {
            let phi = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let gamma = LogNormal::new(0.0, sampler.gamma_log_sd)
                .expect("positive scale")
                .sample(rng);
            let position = rng.random_range(0..=k);
            Some(birth_ratio_cached(
                state,
                logp,
                position,
                (phi, gamma),
                data,
                model,
                sampler,
            ))
        }
        MoveKind::Death if k > 0 => {
            let index = rng.random_range(0..k);
            Some(death_ratio_cached(state, logp, index, data, model, sampler))
        }
        _ => None,
    };
    let Some((log_ratio, mut next, lp_next)) = proposal else {
        return reject(kind);
    };
    let accept = log_ratio.is_finite() && lp_next.is_finite() && {
        let a: f64 = rng.random();
        a.ln() < log_ratio
    };
    if accept {
        next.direction = state.direction;
        (
            next,
            StepRecord {
                kind,
                accepted: true,
                logp: lp_next,
            },
        )
    } else {
        reject(kind)
    }
}

/// One retained sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub k: usize,
    pub phis: Vec<f64>,
    pub gammas: Vec<f64>,
    pub logp: f64,
    #[serde(rename = "move")]
    pub kind: MoveKind,
    pub accepted: bool,
    pub v: Direction,
}

impl TraceRecord {
    pub fn state(&self) -> ModelState {
        ModelState {
            phis: self.phis.clone(),
            gammas: self.gammas.clone(),
            direction: self.v,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub samples: Vec<TraceRecord>,
    /// Direction before the first retained step.
    pub initial_direction: Direction,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.k).collect()
    }

    pub fn direction_flips(&self) -> usize {
        let mut prev = self.initial_direction;
        let mut flips = 0;
        for s in &self.samples {
            if s.v != prev {
                flips += 1;
            }
            prev = s.v;
        }
        flips
    }

    pub fn rejected_jumps(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.kind != MoveKind::Update && !s.accepted)
            .count()
    }

    /// JSONL, one record per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let samples = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<TraceRecord>, _>>()?;
        let initial_direction = samples.first().map(|s| s.v).unwrap_or_default();
        Ok(Self {
            samples,
            initial_direction,
        })
    }
}

/// Run `n_burnin + n_samples` transitions from `(k = 0, v = +1)`, keeping the
/// last `n_samples`.
pub fn run_chain_freq(data: &FreqData, model: &ModelConfig, sampler: &SamplerConfig) -> Result<ChainTrace> {
    model.validate()?;
    sampler.validate()?;
    if data.num_sensors() != model.num_sensors() || data.n_samples() != model.n_samples() {
        return Err(Error::shape(format!(
            "data is {}x{}, model expects {}x{}",
            data.num_sensors(),
            data.n_samples(),
            model.num_sensors(),
            model.n_samples()
        )));
    }
    let mut rng: StreamRng = stream_rng(sampler.seed, sampler.stream);
    let mut state = ModelState::empty();
    let mut logp = log_posterior(data, &state, model);
    if !logp.is_finite() {
        return Err(Error::usage(
            "log posterior of the empty model is not finite (all-zero data?)",
        ));
    }
    let mut trace = ChainTrace {
        samples: Vec::with_capacity(sampler.n_samples),
        initial_direction: Direction::Up,
    };
    for step in 0..sampler.n_burnin + sampler.n_samples {
        if step == sampler.n_burnin {
            trace.initial_direction = state.direction;
        }
        let (next, rec) = nrjmcmc_step(&state, logp, data, model, sampler, &mut rng);
        state = next;
        logp = rec.logp;
        if step >= sampler.n_burnin {
            trace.samples.push(TraceRecord {
                step,
                k: state.k(),
                phis: state.phis.clone(),
                gammas: state.gammas.clone(),
                logp,
                kind: rec.kind,
                accepted: rec.accepted,
                v: state.direction,
            });
        }
    }
    Ok(trace)
}

pub fn run_chain(y: &[Vec<f64>], model: &ModelConfig, sampler: &SamplerConfig) -> Result<ChainTrace> {
    let data = prepare_freq_data(y, model)?;
    run_chain_freq(&data, model, sampler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ArrayGeometry, FilterConfig};
    use crate::stats::chi_square_gof;

    fn setup() -> (FreqData, ModelConfig) {
        let mut model = ModelConfig::new(ArrayGeometry::underwater(2), FilterConfig::with_filter_len(4, 1));
        model.k_max = 2;
        let y = vec![vec![0.3, -1.0, 0.5, 0.2], vec![1.1, 0.4, -0.7, 0.0]];
        (prepare_freq_data(&y, &model).unwrap(), model)
    }

    #[test]
    fn boundary_jumps_flip_direction() {
        let (data, model) = setup();
        let sampler = SamplerConfig {
            update_prob: 1e-12,
            ..SamplerConfig::default()
        };
        let mut rng = stream_rng(1, 1);
        let mut s = ModelState::empty();
        s.direction = Direction::Down;
        let lp = log_posterior(&data, &s, &model);
        let (next, rec) = nrjmcmc_step(&s, lp, &data, &model, &sampler, &mut rng);
        assert!(!rec.accepted);
        assert_eq!(next.direction, Direction::Up);
        assert_eq!(next.k(), 0);

        let mut full = ModelState::new(vec![0.1, -0.4], vec![1.0, 2.0]).unwrap();
        full.direction = Direction::Up;
        let lp = log_posterior(&data, &full, &model);
        let (next, rec) = nrjmcmc_step(&full, lp, &data, &model, &sampler, &mut rng);
        assert!(!rec.accepted && rec.kind == MoveKind::Birth);
        assert_eq!(next.direction, Direction::Down);
        assert_eq!((next.phis, next.gammas), (full.phis, full.gammas));
    }

    #[test]
    fn birth_ratio_is_position_invariant() {
        let (data, mut model) = setup();
        model.k_max = 3;
        let sampler = SamplerConfig::default();
        let s = ModelState::new(vec![0.2, -0.9], vec![0.5, 3.0]).unwrap();
        let vals: Vec<f64> = (0..=2)
            .map(|j| birth_log_ratio(&s, j, (0.6, 1.7), &data, &model, &sampler))
            .collect();
        let spread = vals.iter().copied().fold(f64::MIN, f64::max) - vals.iter().copied().fold(f64::MAX, f64::min);
        assert!(spread < 1e-10, "{vals:?}");
    }

    #[test]
    fn birth_and_death_are_inverse() {
        let (data, model) = setup();
        let sampler = SamplerConfig::default();
        let s = ModelState::new(vec![0.2], vec![0.5]).unwrap();
        let b = birth_log_ratio(&s, 1, (-0.4, 2.5), &data, &model, &sampler);
        let grown = s.inserted(1, -0.4, 2.5);
        let d = death_log_ratio(&grown, 1, &data, &model, &sampler);
        assert!((b + d).abs() < 1e-10);
    }

    #[test]
    fn proposal_terms_cancel_algebraically() {
        let (data, model) = setup();
        let sampler = SamplerConfig::default();
        let s = ModelState::empty();
        let a = birth_log_ratio(&s, 0, (0.3, 1.0), &data, &model, &sampler);
        let b = birth_log_ratio(&s, 0, (0.3, 1.0), &data, &model, &sampler);
        assert_eq!(a, b);
        // only the proposal density differs between γ′ at the mode and in the tail,
        // once the posterior difference is removed
        let mode = (-(2.0f64 * 2.0)).exp();
        let tail = 50.0;
        let ra = birth_log_ratio(&s, 0, (0.3, mode), &data, &model, &sampler);
        let rb = birth_log_ratio(&s, 0, (0.3, tail), &data, &model, &sampler);
        let pa = log_posterior(&data, &s.inserted(0, 0.3, mode), &model);
        let pb = log_posterior(&data, &s.inserted(0, 0.3, tail), &model);
        let qa = log_birth_proposal(0.3, mode, &sampler);
        let qb = log_birth_proposal(0.3, tail, &sampler);
        assert!(((ra - rb) - ((pa - pb) - (qa - qb))).abs() < 1e-10);
    }

    #[test]
    fn update_with_empty_state_is_identity() {
        let (data, model) = setup();
        let mut rng = stream_rng(2, 1);
        let s = ModelState::empty();
        let lp = log_posterior(&data, &s, &model);
        let (next, lp2) = slice_update(&s, lp, &data, &model, &SamplerConfig::default(), &mut rng);
        assert_eq!(next, s);
        assert_eq!(lp, lp2);
    }

    #[test]
    fn permutation_scan_is_uniform() {
        let mut rng = stream_rng(3, 0);
        let perms: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut counts = [0u64; 6];
        for _ in 0..10_000 {
            let mut o = [0usize, 1, 2];
            o.shuffle(&mut rng);
            counts[perms.iter().position(|p| *p == o).unwrap()] += 1;
        }
        assert!(chi_square_gof(&counts, &[1.0 / 6.0; 6]).p_value > 0.01);
    }

    #[test]
    fn chain_is_deterministic_and_lifting_is_consistent() {
        let (data, model) = setup();
        let sampler = SamplerConfig {
            n_burnin: 50,
            n_samples: 1000,
            seed: 9,
            ..SamplerConfig::default()
        };
        let a = run_chain_freq(&data, &model, &sampler).unwrap();
        let b = run_chain_freq(&data, &model, &sampler).unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
        assert_eq!(a.direction_flips(), a.rejected_jumps());
        assert!(a.samples.iter().all(|s| s.logp.is_finite() && s.phis.len() == s.k));
        let back = ChainTrace::from_jsonl(&a.to_jsonl().unwrap()).unwrap();
        assert_eq!(back.samples, a.samples);
    }
}
