//! The simulate → infer → reconstruct pipeline shared by the CLI, sweeps and
//! tests.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::io::GroundTruth;
use crate::array::{synthesize_sources, Synthesis};
use crate::error::Result;
use crate::inference::{
    aggregate_reconstructions, choose_kappa_from_pmf, detect_order, relabel, summarize, DetectionResult,
    MixtureComponent, OrderLoss, Reconstruction, SourceSummary,
};
use crate::model::{prepare_freq_data, ModelState};
use crate::rng::stream_rng;
use crate::sampler::{run_chain_freq, ChainTrace};

/// RNG stream of the data synthesis; the chain uses `sampler.stream`.
pub const SYNTHESIS_STREAM: u64 = 0;
/// RNG stream of the reconstruction draws.
pub const RECONSTRUCTION_STREAM: u64 = 2;

pub fn simulate(cfg: &ExperimentConfig) -> Result<(Synthesis, GroundTruth)> {
    let filter = cfg.filter();
    let syn = synthesize_sources(
        &cfg.source_specs(),
        cfg.scenario.noise_power,
        &filter,
        &cfg.geometry,
        cfg.scenario.seed,
    )?;
    let truth = GroundTruth {
        k: cfg.scenario.sources.len(),
        sources: cfg.scenario.sources.clone(),
        noise_power: cfg.scenario.noise_power,
        seed: cfg.scenario.seed,
        num_sensors: cfg.geometry.num_sensors,
        n_samples: filter.n_samples,
        period: filter.period(),
    };
    Ok((syn, truth))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub detection: DetectionResult,
    pub kappa: usize,
    pub components: Vec<MixtureComponent>,
    pub outlier_weight: Option<f64>,
    pub sources: Vec<SourceSummary>,
    pub n_samples: usize,
    pub jump_acceptance: f64,
}

/// Detection, relabeling and summaries of an existing trace.
pub fn report(trace: &ChainTrace, cfg: &ExperimentConfig) -> Result<InferenceReport> {
    let model = cfg.model_config();
    let detection = detect_order(trace, model.k_max, OrderLoss::L1Median)?;
    let kappa = choose_kappa_from_pmf(&detection.posterior_pmf);
    let (components, outlier_weight, sources) = if kappa == 0 {
        (Vec::new(), None, Vec::new())
    } else {
        let lab = relabel(trace, kappa)?;
        let sources = summarize(trace, &lab)?;
        (lab.components, Some(lab.outlier_weight), sources)
    };
    let jumps = trace
        .samples
        .iter()
        .filter(|s| s.kind != crate::sampler::MoveKind::Update);
    let (n_jumps, n_acc) = jumps.fold((0usize, 0usize), |(n, a), s| (n + 1, a + usize::from(s.accepted)));
    Ok(InferenceReport {
        detection,
        kappa,
        components,
        outlier_weight,
        sources,
        n_samples: trace.len(),
        jump_acceptance: if n_jumps > 0 {
            n_acc as f64 / n_jumps as f64
        } else {
            0.0
        },
    })
}

pub fn infer(cfg: &ExperimentConfig, y: &[Vec<f64>]) -> Result<(ChainTrace, InferenceReport)> {
    let model = cfg.model_config();
    let data = prepare_freq_data(y, &model)?;
    let trace = run_chain_freq(&data, &model, &cfg.sampler)?;
    let rep = report(&trace, cfg)?;
    Ok((trace, rep))
}

/// Reconstruct the `k̂` heaviest relabeled sources from every `thin`-th
/// retained sample.
pub fn reconstruct(cfg: &ExperimentConfig, y: &[Vec<f64>], trace: &ChainTrace, thin: usize) -> Result<Reconstruction> {
    let model = cfg.model_config();
    let data = prepare_freq_data(y, &model)?;
    let detection = detect_order(trace, model.k_max, OrderLoss::L1Median)?;
    let kappa = choose_kappa_from_pmf(&detection.posterior_pmf);
    let mut rng = stream_rng(cfg.sampler.seed, RECONSTRUCTION_STREAM);
    if kappa == 0 || detection.k_hat == 0 {
        return Ok(Reconstruction {
            dof: 2.0 * model.posterior_shape(),
            sources: Vec::new(),
        });
    }
    let lab = relabel(trace, kappa)?;
    let chosen: Vec<usize> = lab.labels_by_weight().into_iter().take(detection.k_hat).collect();
    let step = thin.max(1);
    let samples: Vec<ModelState> = trace.samples.iter().step_by(step).map(|s| s.state()).collect();
    let labels: Vec<Vec<usize>> = lab.assignments.iter().step_by(step).cloned().collect();
    aggregate_reconstructions(&data, &samples, &labels, &chosen, &model, &mut rng)
}
