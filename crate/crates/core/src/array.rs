//! Array geometry, periodic fractional-delay filters, and synthetic data.
//!
//! Propagation from source `j` to sensor `i` is a circular convolution with a
//! period-`N′` delay filter whose spectrum is known in closed form. Spectra
//! follow the plain DFT convention (they are circulant eigenvalues); see
//! [`crate::dft`] for the data-side unitary convention.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dft::{dft_plain, idft_plain};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Default bound on `d·f_s/c`; above it the array aliases spatially below Nyquist.
pub const DEFAULT_ALIASING_BOUND: f64 = 1.0;

/// Uniform linear array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub num_sensors: usize,
    pub spacing_m: f64,
    pub wave_speed_mps: f64,
    pub sample_rate_hz: f64,
}

impl ArrayGeometry {
    pub fn new(num_sensors: usize, spacing_m: f64, wave_speed_mps: f64, sample_rate_hz: f64) -> Result<Self> {
        let geom = Self {
            num_sensors,
            spacing_m,
            wave_speed_mps,
            sample_rate_hz,
        };
        geom.validate()?;
        if let Some(msg) = geom.aliasing_warning(DEFAULT_ALIASING_BOUND) {
            log::warn!("{msg}");
        }
        Ok(geom)
    }

    /// 3 kHz sampling, 0.5 m spacing, 1500 m/s propagation.
    pub fn underwater(num_sensors: usize) -> Self {
        Self {
            num_sensors,
            spacing_m: 0.5,
            wave_speed_mps: 1500.0,
            sample_rate_hz: 3000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sensors == 0 {
            return Err(Error::config("array needs at least one sensor"));
        }
        for (name, v) in [
            ("spacing_m", self.spacing_m),
            ("wave_speed_mps", self.wave_speed_mps),
            ("sample_rate_hz", self.sample_rate_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Largest inter-sensor delay in samples, `d·f_s/c`.
    pub fn aliasing_ratio(&self) -> f64 {
        self.spacing_m * self.sample_rate_hz / self.wave_speed_mps
    }

    pub fn aliasing_warning(&self, bound: f64) -> Option<String> {
        let r = self.aliasing_ratio();
        (r > bound).then(|| format!("d·fs/c = {r:.3} exceeds the aliasing bound {bound}"))
    }

    /// Delay of sensor `i` (1-based) relative to sensor 1, in seconds.
    pub fn delay_s(&self, sensor_index: usize, doa: f64) -> Result<f64> {
        ula_delay(self, sensor_index, doa)
    }

    /// Per-sensor-step delay in samples, so sensor `i` sees `(i-1)` times this.
    pub fn step_delay_samples(&self, doa: f64) -> f64 {
        -self.spacing_m * doa.sin() * self.sample_rate_hz / self.wave_speed_mps
    }
}

/// `Δ_i(φ) = -(i-1)·d·sin(φ)/c` for a 1-based sensor index.
pub fn ula_delay(geom: &ArrayGeometry, sensor_index: usize, doa: f64) -> Result<f64> {
    if sensor_index == 0 || sensor_index > geom.num_sensors {
        return Err(Error::usage(format!(
            "sensor index {sensor_index} outside 1..={}",
            geom.num_sensors
        )));
    }
    Ok(-((sensor_index - 1) as f64) * geom.spacing_m * doa.sin() / geom.wave_speed_mps)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

/// Signal and filter dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Received samples per channel, `N`.
    pub n_samples: usize,
    /// Non-causal filter length `L` (odd).
    pub filter_len: usize,
    #[serde(default = "default_transition")]
    pub transition_param: f64,
    #[serde(default)]
    pub window: Window,
}

fn default_transition() -> f64 {
    0.25
}

impl FilterConfig {
    /// `L = N + 1`, so the period is exactly `2N`.
    pub fn new(n_samples: usize) -> Self {
        Self::with_filter_len(n_samples, n_samples + 1)
    }

    pub fn with_filter_len(n_samples: usize, filter_len: usize) -> Self {
        Self {
            n_samples,
            filter_len,
            transition_param: default_transition(),
            window: Window::Rectangular,
        }
    }

    /// `N′ = N + L - 1`.
    pub fn period(&self) -> usize {
        self.n_samples + self.filter_len - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || !self.n_samples.is_multiple_of(2) {
            return Err(Error::config(format!(
                "n_samples must be even and positive, got {}",
                self.n_samples
            )));
        }
        if self.filter_len % 2 != 1 {
            return Err(Error::config(format!(
                "filter_len must be odd, got {}",
                self.filter_len
            )));
        }
        if !(0.0..=1.0).contains(&self.transition_param) {
            return Err(Error::config(format!(
                "transition_param must lie in [0, 1], got {}",
                self.transition_param
            )));
        }
        Ok(())
    }

    pub fn shaper(&self) -> Box<dyn SpectrumShaper> {
        match self.window {
            Window::Rectangular => Box::new(PurePhase),
            Window::Hann => Box::new(HannShaper),
        }
    }
}

/// Post-processing applied to the pure-phase delay spectrum.
///
/// Implementations must keep the spectrum conjugate symmetric so the taps stay
/// real.
pub trait SpectrumShaper: Send + Sync {
    fn shape(&self, delay_samples: f64, spectrum: &mut [Complex64]);

    /// True when `shape` is the identity, which lets callers use faster
    /// closed-form paths.
    fn is_identity(&self) -> bool {
        false
    }
}

/// The unshaped all-pass delay.
#[derive(Clone, Copy, Debug, Default)]
pub struct PurePhase;

impl SpectrumShaper for PurePhase {
    fn shape(&self, _delay_samples: f64, _spectrum: &mut [Complex64]) {}

    fn is_identity(&self) -> bool {
        true
    }
}

/// Tapers the periodic taps with a period-long Hann window centered on the
/// rounded delay.
#[derive(Clone, Copy, Debug, Default)]
pub struct HannShaper;

impl SpectrumShaper for HannShaper {
    fn shape(&self, delay_samples: f64, spectrum: &mut [Complex64]) {
        let n = spectrum.len();
        if n == 0 {
            return;
        }
        let mut taps = idft_plain(spectrum);
        let center = delay_samples.round();
        for (t, tap) in taps.iter_mut().enumerate() {
            let d = (t as f64 - center).rem_euclid(n as f64);
            let d = d.min(n as f64 - d);
            let w = 0.5 * (1.0 + (2.0 * PI * d / n as f64).cos());
            *tap = Complex64::new(tap.re * w, 0.0);
        }
        spectrum.copy_from_slice(&dft_plain(&taps));
    }
}

/// Pure-phase delay spectrum of length `period`.
///
/// Bins below Nyquist carry `e^{-j2πmΔ/N′}`, upper bins are their conjugates,
/// and the Nyquist bin is the real value `cos(πΔ)`.
pub fn pure_phase_spectrum(delay_samples: f64, period: usize) -> Vec<Complex64> {
    let mut s = vec![Complex64::new(0.0, 0.0); period];
    if period == 0 {
        return s;
    }
    let half = period / 2;
    let w = -2.0 * PI * delay_samples / period as f64;
    s[0] = Complex64::new(1.0, 0.0);
    let upper = if period.is_multiple_of(2) { half } else { half + 1 };
    for m in 1..upper {
        let (sin, cos) = (w * m as f64).sin_cos();
        s[m] = Complex64::new(cos, sin);
        s[period - m] = Complex64::new(cos, -sin);
    }
    if period.is_multiple_of(2) {
        s[half] = Complex64::new((PI * delay_samples).cos(), 0.0);
    }
    s
}

/// Spectrum of the period-`N′` fractional delay by `delay_samples`.
pub fn fractional_delay_spectrum(delay_samples: f64, cfg: &FilterConfig) -> Vec<Complex64> {
    let mut s = pure_phase_spectrum(delay_samples, cfg.period());
    cfg.shaper().shape(delay_samples, &mut s);
    s
}

/// Real taps of the period-`N′` delay filter (inverse DFT of the spectrum).
pub fn delay_taps(delay_samples: f64, cfg: &FilterConfig) -> Vec<f64> {
    let taps = idft_plain(&fractional_delay_spectrum(delay_samples, cfg));
    debug_assert!(taps.iter().all(|t| t.im.abs() < 1e-8));
    taps.into_iter().map(|t| t.re).collect()
}

/// Explicit circular convolution `(h ⊛ x)[n] = Σ_l h[l]·x[(n-l) mod N′]`.
pub fn circular_convolve(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert_eq!(taps.len(), n, "taps and signal must share the period");
    (0..n)
        .map(|t| (0..n).map(|l| taps[l] * x[(t + n - l) % n]).sum())
        .collect()
}

/// One synthetic source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub doa_rad: f64,
    pub snr_db: f64,
    pub band_hz: (f64, f64),
}

impl SourceSpec {
    pub fn from_degrees(doa_deg: f64, snr_db: f64, band_hz: (f64, f64)) -> Self {
        Self {
            doa_rad: doa_deg.to_radians(),
            snr_db,
            band_hz,
        }
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&self.doa_rad) {
            return Err(Error::config(format!("doa {} rad outside [-π/2, π/2]", self.doa_rad)));
        }
        let (lo, hi) = self.band_hz;
        if !(lo > 0.0 && lo < hi && hi <= sample_rate_hz / 2.0) {
            return Err(Error::config(format!(
                "band [{lo}, {hi}] Hz must satisfy 0 < lo < hi <= {}",
                sample_rate_hz / 2.0
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db must be finite"));
        }
        Ok(())
    }

    /// `P_j = σ²·10^{snr/10}`.
    pub fn power(&self, noise_power: f64) -> f64 {
        noise_power * 10f64.powf(self.snr_db / 10.0)
    }
}

/// Sources (each of length `N′`) and the received channels (each of length `N`).
#[derive(Clone, Debug, PartialEq)]
pub struct Synthesis {
    pub sources: Vec<Vec<f64>>,
    pub received: Vec<Vec<f64>>,
}

/// Band-limited white Gaussian noise with exact empirical power `power`.
pub fn band_limited_noise<R: Rng>(
    period: usize,
    band_hz: (f64, f64),
    sample_rate_hz: f64,
    power: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let white: Vec<Complex64> = (0..period)
        .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
        .collect();
    let mut spec = dft_plain(&white);
    let mut kept = 0usize;
    for (m, bin) in spec.iter_mut().enumerate() {
        let f = m.min(period - m) as f64 * sample_rate_hz / period as f64;
        if f < band_hz.0 || f > band_hz.1 {
            *bin = Complex64::new(0.0, 0.0);
        } else {
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::config(format!(
            "band [{}, {}] Hz contains no DFT bin at period {period}",
            band_hz.0, band_hz.1
        )));
    }
    let mut x: Vec<f64> = idft_plain(&spec).into_iter().map(|v| v.re).collect();
    let empirical = x.iter().map(|v| v * v).sum::<f64>() / period as f64;
    let scale = (power / empirical).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(x)
}

/// Simulate the circular-convolution array model, deterministic in `seed`.
pub fn synthesize_sources(
    specs: &[SourceSpec],
    noise_power: f64,
    cfg: &FilterConfig,
    geom: &ArrayGeometry,
    seed: u64,
) -> Result<Synthesis> {
    cfg.validate()?;
    geom.validate()?;
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(Error::config(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    for s in specs {
        s.validate(geom.sample_rate_hz)?;
    }
    let mut rng = stream_rng(seed, 0);
    let period = cfg.period();
    let n = cfg.n_samples;
    let sources = specs
        .iter()
        .map(|s| band_limited_noise(period, s.band_hz, geom.sample_rate_hz, s.power(noise_power), &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let spectra: Vec<Vec<Complex64>> = sources
        .iter()
        .map(|x| dft_plain(&x.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>()))
        .collect();
    let noise = Normal::new(0.0, noise_power.sqrt()).expect("positive sd");
    let mut received = Vec::with_capacity(geom.num_sensors);
    for i in 1..=geom.num_sensors {
        let mut acc = vec![Complex64::new(0.0, 0.0); period];
        for (spec, x_f) in specs.iter().zip(&spectra) {
            let delay = ula_delay(geom, i, spec.doa_rad)? * geom.sample_rate_hz;
            let h = fractional_delay_spectrum(delay, cfg);
            for ((a, &hm), &xm) in acc.iter_mut().zip(&h).zip(x_f) {
                *a += hm * xm;
            }
        }
        let y: Vec<f64> = idft_plain(&acc)
            .into_iter()
            .take(n)
            .map(|v| v.re + noise.sample(&mut rng))
            .collect();
        received.push(y);
    }
    Ok(Synthesis { sources, received })
}
