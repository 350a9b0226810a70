//! Experiment configuration: profiles, file loading and deep merging.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::mcmc_test::McmcTestConfig;
use crate::array::{ArrayGeometry, FilterConfig, SourceSpec, Window};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::sampler::SamplerConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::usage(format!(
                "unknown profile `{other}` (expected desk or paper)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub doa_deg: f64,
    pub snr_db: f64,
    pub band_hz: [f64; 2],
}

impl SourceEntry {
    pub fn new(doa_deg: f64, snr_db: f64, band_hz: [f64; 2]) -> Self {
        Self {
            doa_deg,
            snr_db,
            band_hz,
        }
    }

    pub fn spec(&self) -> SourceSpec {
        SourceSpec::from_degrees(self.doa_deg, self.snr_db, (self.band_hz[0], self.band_hz[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub sources: Vec<SourceEntry>,
    /// Linear noise variance `σ²`.
    pub noise_power: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    pub n_samples: usize,
    /// Defaults to `n_samples + 1`.
    pub filter_len: Option<usize>,
    pub transition_param: f64,
    pub window: Window,
}

/// Hyperparameter overrides; `k_max` defaults to `M - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_lambda: f64,
    pub beta_lambda: f64,
    pub alpha_gamma: f64,
    pub beta_gamma: f64,
    pub k_max: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Common SNR of every scenario source.
    SnrDb,
    /// Received samples per channel.
    NSamples,
    /// Two equally powered sources placed symmetrically about broadside.
    SeparationDeg,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::NSamples => "n_samples",
            SweepAxis::SeparationDeg => "separation_deg",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub geometry: ArrayGeometry,
    pub signal: SignalConfig,
    pub model: PriorConfig,
    pub sampler: SamplerConfig,
    pub replications: usize,
    pub sweep: Option<SweepConfig>,
    pub output_dir: String,
    pub mcmc_test: McmcTestConfig,
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let (m, n, samples, burnin, sources) = match profile {
            Profile::Desk => (
                8,
                128,
                1 << 11,
                1 << 9,
                vec![
                    SourceEntry::new(-30.0, 0.0, [10.0, 1000.0]),
                    SourceEntry::new(30.0, 0.0, [10.0, 1000.0]),
                ],
            ),
            Profile::Paper => (
                20,
                256,
                1 << 12,
                1 << 10,
                [(-60.0, -6.0), (-15.0, 4.0), (30.0, 0.0), (45.0, -4.0)]
                    .iter()
                    .map(|&(d, s)| SourceEntry::new(d, s, [10.0, 1000.0]))
                    .collect(),
            ),
        };
        let defaults = ModelConfig::new(ArrayGeometry::underwater(m), FilterConfig::new(n));
        Self {
            scenario: ScenarioConfig {
                sources,
                noise_power: 1.0,
                seed: 0,
            },
            geometry: ArrayGeometry::underwater(m),
            signal: SignalConfig {
                n_samples: n,
                filter_len: None,
                transition_param: 0.25,
                window: Window::Rectangular,
            },
            model: PriorConfig {
                alpha: defaults.alpha,
                beta: defaults.beta,
                alpha_lambda: defaults.alpha_lambda,
                beta_lambda: defaults.beta_lambda,
                alpha_gamma: defaults.alpha_gamma,
                beta_gamma: defaults.beta_gamma,
                k_max: None,
            },
            sampler: SamplerConfig {
                n_samples: samples,
                n_burnin: burnin,
                ..SamplerConfig::default()
            },
            replications: 10,
            sweep: None,
            output_dir: "out".into(),
            mcmc_test: McmcTestConfig::default(),
        }
    }

    /// Profile defaults with `overrides` merged on top value by value.
    pub fn from_value(profile: Profile, overrides: Value) -> Result<Self> {
        let mut base = serde_json::to_value(Self::profile(profile))?;
        deep_merge(&mut base, overrides);
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn from_text(profile: Profile, text: &str) -> Result<Self> {
        let overrides: Value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            toml::from_str(text)?
        };
        Self::from_value(profile, overrides)
    }

    pub fn load(profile: Profile, path: Option<&Path>) -> Result<Self> {
        match path {
            None => {
                let cfg = Self::profile(profile);
                cfg.validate()?;
                Ok(cfg)
            }
            Some(p) => Self::from_text(profile, &std::fs::read_to_string(p)?),
        }
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            n_samples: self.signal.n_samples,
            filter_len: self.signal.filter_len.unwrap_or(self.signal.n_samples + 1),
            transition_param: self.signal.transition_param,
            window: self.signal.window,
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        let mut m = ModelConfig::new(self.geometry.clone(), self.filter());
        m.alpha = self.model.alpha;
        m.beta = self.model.beta;
        m.alpha_lambda = self.model.alpha_lambda;
        m.beta_lambda = self.model.beta_lambda;
        m.alpha_gamma = self.model.alpha_gamma;
        m.beta_gamma = self.model.beta_gamma;
        if let Some(k) = self.model.k_max {
            m.k_max = k;
        }
        m
    }

    pub fn source_specs(&self) -> Vec<SourceSpec> {
        self.scenario.sources.iter().map(SourceEntry::spec).collect()
    }

    /// Set `scenario.seed` and `sampler.seed` at once.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        self.sampler.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        self.geometry.validate()?;
        let model = self.model_config();
        model.validate()?;
        self.sampler.validate()?;
        if !(self.scenario.noise_power > 0.0 && self.scenario.noise_power.is_finite()) {
            return Err(Error::config("scenario.noise_power must be positive"));
        }
        for s in self.source_specs() {
            s.validate(self.geometry.sample_rate_hz)?;
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(Error::config("sweep.values is empty"));
            }
            for &v in &sw.values {
                let ok = match sw.axis {
                    SweepAxis::SnrDb => v.is_finite(),
                    SweepAxis::NSamples => v >= 2.0 && v.fract() == 0.0 && (v as usize).is_multiple_of(2),
                    SweepAxis::SeparationDeg => v > 0.0 && v <= 180.0,
                };
                if !ok {
                    return Err(Error::config(format!("invalid {} sweep value {v}", sw.axis.name())));
                }
            }
        }
        Ok(())
    }

    /// The configuration of one sweep cell.
    pub fn at_sweep_value(&self, axis: SweepAxis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            SweepAxis::SnrDb => c.scenario.sources.iter_mut().for_each(|s| s.snr_db = value),
            SweepAxis::NSamples => {
                c.signal.n_samples = value as usize;
                c.signal.filter_len = None;
            }
            SweepAxis::SeparationDeg => {
                let (snr, band) = c
                    .scenario
                    .sources
                    .first()
                    .map_or((0.0, [10.0, 1000.0]), |s| (s.snr_db, s.band_hz));
                c.scenario.sources = vec![
                    SourceEntry::new(-value / 2.0, snr, band),
                    SourceEntry::new(value / 2.0, snr, band),
                ];
            }
        }
        c
    }
}

/// Recursively overwrite `base` with `over`; objects merge key by key, any
/// other value replaces.
pub fn deep_merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => deep_merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}
