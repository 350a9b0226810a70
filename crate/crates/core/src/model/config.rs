use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, FilterConfig};
use crate::error::{Error, Result};

/// Hyperparameters and dimensions of the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Inverse-gamma shape of the noise variance prior.
    pub alpha: f64,
    /// Inverse-gamma scale of the noise variance prior.
    pub beta: f64,
    /// Negative-binomial `r` for the model order.
    pub alpha_lambda: f64,
    /// Sets the negative-binomial success probability `β_λ/(β_λ+1)`.
    pub beta_lambda: f64,
    /// Inverse-gamma shape of the per-source SNR prior.
    pub alpha_gamma: f64,
    /// Inverse-gamma scale of the per-source SNR prior.
    pub beta_gamma: f64,
    pub k_max: usize,
    pub geometry: ArrayGeometry,
    pub filter: FilterConfig,
}

impl ModelConfig {
    /// Diffuse defaults with `k_max = M - 1`.
    pub fn new(geometry: ArrayGeometry, filter: FilterConfig) -> Self {
        let k_max = geometry.num_sensors.saturating_sub(1);
        Self {
            alpha: 0.0,
            beta: 0.0,
            alpha_lambda: 0.6,
            beta_lambda: 0.1,
            alpha_gamma: 1e-2,
            beta_gamma: 1e-2,
            k_max,
            geometry,
            filter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.filter.validate()?;
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::config("alpha and beta must be nonnegative"));
        }
        for (name, v) in [
            ("alpha_lambda", self.alpha_lambda),
            ("beta_lambda", self.beta_lambda),
            ("alpha_gamma", self.alpha_gamma),
            ("beta_gamma", self.beta_gamma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn num_sensors(&self) -> usize {
        self.geometry.num_sensors
    }

    pub fn n_samples(&self) -> usize {
        self.filter.n_samples
    }

    pub fn period(&self) -> usize {
        self.filter.period()
    }

    /// `α̃ = α + MN/2`.
    pub fn posterior_shape(&self) -> f64 {
        self.alpha + 0.5 * (self.num_sensors() * self.n_samples()) as f64
    }
}

/// Jump direction of the lifted chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Up,
    Down,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }

    pub fn from_sign(v: i32) -> Option<Self> {
        match v {
            1 => Some(Direction::Up),
            -1 => Some(Direction::Down),
            _ => None,
        }
    }
}

impl Serialize for Direction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i32(self.sign())
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i32::deserialize(d)?;
        Direction::from_sign(v).ok_or_else(|| serde::de::Error::custom(format!("direction must be ±1, got {v}")))
    }
}

/// A point `(k, φ_{1:k}, γ_{1:k})` of the trans-dimensional space plus the
/// lifting direction. `k` is the common length of `phis` and `gammas`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelState {
    pub phis: Vec<f64>,
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub direction: Direction,
}

impl ModelState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(phis: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        let s = Self {
            phis,
            gammas,
            direction: Direction::Up,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.phis.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.phis.len() != self.gammas.len() {
            return Err(Error::usage(format!(
                "{} directions but {} SNRs",
                self.phis.len(),
                self.gammas.len()
            )));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::usage(format!("SNR parameters must be positive, got {g}")));
        }
        Ok(())
    }

    /// Whether every direction lies in `[-π/2, π/2]`.
    pub fn in_support(&self) -> bool {
        self.phis.iter().all(|p| (-FRAC_PI_2..=FRAC_PI_2).contains(p))
            && self.gammas.iter().all(|g| g.is_finite() && *g > 0.0)
    }

    /// Insert a source before position `j` (`0 ≤ j ≤ k`).
    pub fn inserted(&self, j: usize, phi: f64, gamma: f64) -> Self {
        let mut s = self.clone();
        s.phis.insert(j, phi);
        s.gammas.insert(j, gamma);
        s
    }

    /// Remove the source at 0-based position `j`.
    pub fn removed(&self, j: usize) -> Self {
        let mut s = self.clone();
        s.phis.remove(j);
        s.gammas.remove(j);
        s
    }
}
