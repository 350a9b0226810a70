//! Unitary DFT helpers.
//!
//! All transforms in the crate use the unitary convention
//! `X[m] = N^{-1/2} Σ_n x[n] e^{-j2πmn/N}` so that Parseval holds without
//! extra factors. Filter spectra are the exception: they are eigenvalues of
//! circulant matrices and therefore the plain (unnormalized) DFT of the taps.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct UnitaryDft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl UnitaryDft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            scale: (len as f64).sqrt().recip(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// Unitary DFT of a real signal zero-padded to the transform length.
    pub fn forward_real_padded(&self, x: &[f64]) -> Vec<Complex64> {
        assert!(x.len() <= self.len, "signal longer than transform");
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.forward(&mut buf);
        buf
    }
}

/// Plain inverse DFT: `x[n] = N^{-1} Σ_m X[m] e^{+j2πmn/N}`.
pub fn idft_plain(spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    if n == 0 {
        return buf;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Plain forward DFT: `X[m] = Σ_n x[n] e^{-j2πmn/N}`.
pub fn dft_plain(signal: &[Complex64]) -> Vec<Complex64> {
    let n = signal.len();
    let mut buf = signal.to_vec();
    if n == 0 {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Replace `x` with the nearest conjugate-symmetric vector,
/// `x[m] ← (x[m] + conj(x[N-m])) / 2`.
pub fn symmetrize(x: &mut [Complex64]) {
    let n = x.len();
    if n == 0 {
        return;
    }
    x[0].im = 0.0;
    for m in 1..=(n / 2) {
        let a = x[m];
        let b = x[n - m].conj();
        let avg = (a + b) * 0.5;
        x[m] = avg;
        x[n - m] = avg.conj();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_round_trip_and_parseval() {
        let dft = UnitaryDft::new(12);
        let x: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect();
        let spec = dft.forward_real_padded(&x);
        let e_time: f64 = x.iter().map(|v| v * v).sum();
        let e_freq: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        assert!((e_time - e_freq).abs() < 1e-12);
        let mut back = spec.clone();
        dft.inverse(&mut back);
        for (i, v) in back.iter().enumerate() {
            let want = x.get(i).copied().unwrap_or(0.0);
            assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrize_makes_real_inverse() {
        let mut x: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, (i * i) as f64)).collect();
        symmetrize(&mut x);
        let t = idft_plain(&x);
        assert!(t.iter().all(|v| v.im.abs() < 1e-12));
    }
}
