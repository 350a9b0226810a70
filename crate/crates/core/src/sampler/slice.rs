use rand::Rng;

/// Tuning of the univariate stepping-out slice sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceSettings {
    /// Initial interval width `w`.
    pub width: f64,
    /// Bound on the number of stepping-out expansions (`m`).
    pub max_steps: usize,
    /// Shrinkage iterations after which the update aborts.
    pub max_shrink: usize,
}

impl Default for SliceSettings {
    fn default() -> Self {
        Self {
            width: 2.0,
            max_steps: 10_000,
            max_shrink: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SliceOutcome {
    /// New point and its log density.
    Accepted { x: f64, logf: f64 },
    /// Shrinkage did not terminate; the caller keeps the old point.
    Aborted,
}

/// One stepping-out slice sampling update of `x0` under `logf`, where
/// `logf0 = logf(x0)` is finite.
pub fn slice_sample<R: Rng + ?Sized>(
    x0: f64,
    logf0: f64,
    mut logf: impl FnMut(f64) -> f64,
    settings: &SliceSettings,
    rng: &mut R,
) -> SliceOutcome {
    let w = settings.width;
    // level log(u·f(x0)) with u ~ U(0, 1]; the exponential form avoids ln(0)
    let level = logf0 - rand_distr::Distribution::<f64>::sample(&rand_distr::Exp1, rng);

    let mut lo = x0 - w * rng.random::<f64>();
    let mut hi = lo + w;
    let m = settings.max_steps;
    let mut j = (m as f64 * rng.random::<f64>()).floor() as usize;
    let mut k = (m - 1).saturating_sub(j);
    while j > 0 && logf(lo) > level {
        lo -= w;
        j -= 1;
    }
    while k > 0 && logf(hi) > level {
        hi += w;
        k -= 1;
    }

    for _ in 0..settings.max_shrink {
        let x = lo + (hi - lo) * rng.random::<f64>();
        let fx = logf(x);
        if fx > level {
            return SliceOutcome::Accepted { x, logf: fx };
        }
        if x < x0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    SliceOutcome::Aborted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats::ks_one_sample;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn chain(n: usize, thin: usize, seed: u64, logf: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let s = SliceSettings::default();
        let mut x = 0.0;
        let mut fx = logf(x);
        let mut out = Vec::with_capacity(n);
        for t in 0..n * thin {
            if let SliceOutcome::Accepted { x: nx, logf: nf } = slice_sample(x, fx, &logf, &s, &mut rng) {
                x = nx;
                fx = nf;
            }
            if t % thin == thin - 1 {
                out.push(x);
            }
        }
        out
    }

    #[test]
    fn standard_normal_invariance() {
        let draws = chain(10_000, 5, 11, |x| -0.5 * x * x);
        let n = Normal::standard();
        let ks = ks_one_sample(&draws, |x| n.cdf(x));
        assert!(ks.statistic < 0.02, "{ks:?}");
    }

    #[test]
    fn bounded_support_is_respected() {
        let draws = chain(2000, 1, 3, |x| {
            if (0.0..1.0).contains(&x) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        });
        assert!(draws.iter().all(|x| (0.0..1.0).contains(x)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn degenerate_target_aborts() {
        let mut rng = stream_rng(1, 0);
        let s = SliceSettings {
            max_shrink: 50,
            ..SliceSettings::default()
        };
        // only x0 itself is in the slice
        let out = slice_sample(
            0.0,
            0.0,
            |x| if x == 0.0 { 0.0 } else { f64::NEG_INFINITY },
            &s,
            &mut rng,
        );
        assert_eq!(out, SliceOutcome::Aborted);
    }
}
