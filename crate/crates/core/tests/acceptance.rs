//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit
//! if any criterion fails.

mod common;

use std::f64::consts::FRAC_PI_4;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use common::{dense, loglik_oracle, pearson, random_channels, random_hpd_stripe, random_stripe, rel_err, taps_oracle};
use wbdoa::array::{delay_taps, fractional_delay_spectrum, ArrayGeometry, FilterConfig};
use wbdoa::dft::idft_plain;
use wbdoa::harness::config::SourceEntry;
use wbdoa::harness::mcmc_test::{run_mcmc_test, McmcTestConfig};
use wbdoa::harness::sweep::cell_seed;
use wbdoa::harness::{infer, reconstruct, simulate, ExperimentConfig, Profile};
use wbdoa::model::{collapsed_loglik_dense, collapsed_loglik_freq, prepare_freq_data, ModelConfig, ModelState};
use wbdoa::rng::stream_rng;
use wbdoa::sampler::{slice_sample, KernelVariant, SliceOutcome, SliceSettings};
use wbdoa::stats::ks_one_sample;
use wbdoa::stripe::{block_ldl, quadratic_form, stripe_logdet};
use wbdoa::Complex64;

const REPLICATIONS: usize = 10;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn seeds() -> Vec<u64> {
    (0..REPLICATIONS).map(|r| cell_seed(2024, 0, r)).collect()
}

fn stripe_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_op, mut worst_ldl) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let (r, c, q) = (
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        );
        let len = rng.random_range(1..=8);
        let a = random_stripe(r, c, len, &mut rng);
        let b = random_stripe(r, c, len, &mut rng);
        let e = random_stripe(c, q, len, &mut rng);
        worst_op = worst_op
            .max(rel_err(&dense(&a.adjoint()), &dense(&a).adjoint()))
            .max(rel_err(&dense(&a.add(&b).unwrap()), &(dense(&a) + dense(&b))))
            .max(rel_err(&dense(&a.mul(&e).unwrap()), &(dense(&a) * dense(&e))));

        let h = random_hpd_stripe(r, len, &mut rng);
        let hd = dense(&h);
        let f = block_ldl(&h).unwrap();
        let l = dense(&f.unit_lower);
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            f.diag.len(),
            f.diag.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        worst_ldl = worst_ldl.max(rel_err(&(&l * d * l.adjoint()), &hd));
        let chol = hd.clone().cholesky().unwrap();
        let logdet: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.re.ln()).sum();
        let z: Vec<Complex64> = (0..r * len)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let zd = DVector::from_vec(z.clone());
        let quad = zd.dotc(&chol.solve(&zd)).re;
        worst_op = worst_op
            .max(rel(stripe_logdet(&f).unwrap(), logdet))
            .max(rel(quadratic_form(&f, &z).unwrap(), quad));
    }
    outcome(
        worst_op < 1e-8 && worst_ldl < 1e-10,
        format!("200 instances, worst op rel err {worst_op:.1e}, worst LDL rel err {worst_ldl:.1e}"),
    )
}

fn likelihood_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_dense, mut worst_oracle) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let m = rng.random_range(1..=3);
        let n = 2 * rng.random_range(1..=4);
        let k = rng.random_range(0..=2);
        let cfg = ModelConfig::new(ArrayGeometry::underwater(m), FilterConfig::with_filter_len(n, 1));
        let phis: Vec<f64> = (0..k).map(|_| rng.random_range(-1.5..1.5)).collect();
        let gammas: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..20.0)).collect();
        let y = random_channels(m, n, &mut rng);
        let s = ModelState::new(phis.clone(), gammas.clone()).unwrap();
        let fast = collapsed_loglik_freq(&prepare_freq_data(&y, &cfg).unwrap(), &s, &cfg);
        worst_dense = worst_dense.max((fast - collapsed_loglik_dense(&y, &s, &cfg)).abs());
        worst_oracle = worst_oracle.max((fast - loglik_oracle(&y, &phis, &gammas, &cfg)).abs());
    }
    outcome(
        worst_dense < 1e-8 && worst_oracle < 1e-8,
        format!(
            "100 instances, max |freq - dense| {worst_dense:.1e}, max |freq - covariance oracle| {worst_oracle:.1e}"
        ),
    )
}

fn filter_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut imag, mut shift, mut compose, mut closed) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = 2 * rng.random_range(1..=64);
        let cfg = FilterConfig::new(n);
        let p = cfg.period();
        let delay = rng.random_range(-30.0..30.0);
        let raw = idft_plain(&fractional_delay_spectrum(delay, &cfg));
        imag = imag.max(raw.iter().map(|t| t.im.abs()).fold(0.0, f64::max));
        let taps = delay_taps(delay, &cfg);
        closed = closed.max(
            taps.iter()
                .zip(taps_oracle(delay, p))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );

        let d = rng.random_range(-40i64..40);
        let at = d.rem_euclid(p as i64) as usize;
        let t = delay_taps(d as f64, &cfg);
        shift = shift.max(
            t.iter()
                .enumerate()
                .map(|(i, v)| (v - if i == at { 1.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max),
        );

        let b = rng.random_range(-30.0..30.0);
        let (sa, sb, sab) = (
            fractional_delay_spectrum(delay, &cfg),
            fractional_delay_spectrum(b, &cfg),
            fractional_delay_spectrum(delay + b, &cfg),
        );
        compose = compose.max((0..p / 2).map(|m| (sa[m] * sb[m] - sab[m]).norm()).fold(0.0, f64::max));
    }
    outcome(
        imag < 1e-10 && shift < 1e-10 && compose < 1e-12 && closed < 1e-10,
        format!("max imag {imag:.1e}, integer-shift err {shift:.1e}, composition err {compose:.1e}, closed-form err {closed:.1e}"),
    )
}

fn mcmc_suite() -> Outcome {
    let base = McmcTestConfig {
        draws: 10_000,
        ..McmcTestConfig::default()
    };
    let good = run_mcmc_test(&base).unwrap();
    let bad = run_mcmc_test(&McmcTestConfig {
        kernel: KernelVariant::DeathWithoutProposal,
        ..base.clone()
    })
    .unwrap();
    let fmt = |r: &wbdoa::harness::mcmc_test::McmcTestReport| {
        r.tests
            .iter()
            .map(|t| format!("{}={:.2e}", t.name, t.p_adjusted))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        good.passed && !bad.passed,
        format!(
            "correct kernel p_adj [{}]; broken kernel p_adj [{}]",
            fmt(&good),
            fmt(&bad)
        ),
    )
}

fn slice_suite() -> Outcome {
    let mut rng = stream_rng(5, 0);
    let s = SliceSettings::default();
    let logf = |x: f64| -0.5 * x * x;
    let (mut x, mut fx) = (0.0, 0.0);
    let mut draws = Vec::with_capacity(10_000);
    for t in 0..50_000 {
        if let SliceOutcome::Accepted { x: nx, logf: nf } = slice_sample(x, fx, logf, &s, &mut rng) {
            x = nx;
            fx = nf;
        }
        if t % 5 == 4 {
            draws.push(x);
        }
    }
    let n = Normal::standard();
    let ks = ks_one_sample(&draws, |v| n.cdf(v));
    outcome(
        ks.statistic < 0.02,
        format!(
            "KS distance {:.4} over {} draws thinned by 5",
            ks.statistic,
            draws.len()
        ),
    )
}

fn detection_runs(cfg: &ExperimentConfig) -> Vec<usize> {
    seeds()
        .par_iter()
        .map(|&s| {
            let c = cfg.clone().with_seed(s);
            let (syn, _) = simulate(&c).unwrap();
            infer(&c, &syn.received).unwrap().1.detection.k_hat
        })
        .collect()
}

fn desk_detection() -> Outcome {
    let cfg = ExperimentConfig::profile(Profile::Desk);
    let hits = detection_runs(&cfg);
    let ok = hits.iter().filter(|&&k| k == 2).count();
    let low = cfg.at_sweep_value(wbdoa::harness::SweepAxis::SnrDb, -12.0);
    let low_hits = detection_runs(&low).iter().filter(|&&k| k == 2).count();
    outcome(
        ok >= 8,
        format!("0 dB: k_hat = 2 in {ok}/10 (k_hat {hits:?}); -12 dB (informational): {low_hits}/10"),
    )
}

fn null_detection() -> Outcome {
    let mut cfg = ExperimentConfig::profile(Profile::Desk);
    cfg.scenario.sources.clear();
    let hits = detection_runs(&cfg);
    let ok = hits.iter().filter(|&&k| k == 0).count();
    outcome(ok >= 8, format!("k_hat = 0 in {ok}/10 (k_hat {hits:?})"))
}

/// Smallest worst-case error over assignments of estimates to distinct truths.
fn best_matching(est: &[f64], truth: &[f64]) -> f64 {
    fn go(est: &[f64], truth: &[f64], used: &mut Vec<bool>, i: usize, worst: f64, best: &mut f64) {
        if worst >= *best {
            return;
        }
        if i == est.len() {
            *best = worst;
            return;
        }
        for j in 0..truth.len() {
            if !used[j] {
                used[j] = true;
                go(est, truth, used, i + 1, worst.max((est[i] - truth[j]).abs()), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(est, truth, &mut vec![false; truth.len()], 0, 0.0, &mut best);
    best
}

fn four_sources() -> Outcome {
    let cfg = ExperimentConfig::profile(Profile::Paper);
    let truth: Vec<f64> = cfg.scenario.sources.iter().map(|s| s.doa_deg).collect();
    let runs: Vec<(usize, f64)> = seeds()
        .par_iter()
        .map(|&s| {
            let c = cfg.clone().with_seed(s);
            let (syn, _) = simulate(&c).unwrap();
            let rep = infer(&c, &syn.received).unwrap().1;
            let mut comps = rep.components.clone();
            comps.sort_by(|a, b| b.weight.total_cmp(&a.weight));
            let est: Vec<f64> = comps.iter().take(4).map(|m| m.mean.to_degrees()).collect();
            let err = if est.len() == 4 {
                best_matching(&est, &truth)
            } else {
                f64::INFINITY
            };
            (rep.detection.k_hat, err)
        })
        .collect();
    let ok = runs.iter().filter(|(k, e)| *k == 4 && *e <= 3.0).count();
    let detail = runs
        .iter()
        .map(|(k, e)| format!("k={k} err={e:.2}°"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        ok >= 7,
        format!("{ok}/10 runs with k_hat = 4 and all means within 3° [{detail}]"),
    )
}

fn reconstruction() -> Outcome {
    let mut cfg = ExperimentConfig::profile(Profile::Desk);
    cfg.scenario.sources = vec![SourceEntry::new(-FRAC_PI_4.to_degrees(), 0.0, [10.0, 1000.0])];
    let n = cfg.signal.n_samples;
    let runs: Vec<(f64, f64, f64)> = seeds()
        .par_iter()
        .map(|&s| {
            let c = cfg.clone().with_seed(s);
            let (syn, _) = simulate(&c).unwrap();
            let (trace, _) = infer(&c, &syn.received).unwrap();
            let rec = reconstruct(&c, &syn.received, &trace, 4).unwrap();
            match rec.sources.first() {
                Some(src) if src.n_draws > 0 => {
                    let corr = pearson(&src.mean[..n], &syn.sources[0][..n]);
                    let amp = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64;
                    (corr, amp(&src.mean[n..]), amp(&src.mean[..n]))
                }
                _ => (f64::NAN, f64::NAN, f64::NAN),
            }
        })
        .collect();
    let ok = runs
        .iter()
        .filter(|(c, tail, causal)| *c >= 0.8 && tail < causal)
        .count();
    let detail = runs
        .iter()
        .map(|(c, t, a)| format!("r={c:.2} tail/causal={:.2}", t / a))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        ok >= 8,
        format!("{ok}/10 runs with correlation >= 0.8 and a smaller tail [{detail}]"),
    )
}

fn complexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let sizes = [64usize, 128, 256, 512];
    let times: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let cfg = ModelConfig::new(ArrayGeometry::underwater(8), FilterConfig::new(n));
            let y = random_channels(8, n, &mut rng);
            let data = prepare_freq_data(&y, &cfg).unwrap();
            let s = ModelState::new(vec![-0.5, 0.2, 0.7], vec![1.0, 2.0, 0.5]).unwrap();
            let reps = (200_000 / n).max(20);
            let mut samples = Vec::new();
            for _ in 0..7 {
                let t = Instant::now();
                for _ in 0..reps {
                    std::hint::black_box(collapsed_loglik_freq(&data, std::hint::black_box(&s), &cfg));
                }
                samples.push(t.elapsed().as_secs_f64() / reps as f64);
            }
            samples.sort_by(f64::total_cmp);
            samples[samples.len() / 2]
        })
        .collect();
    let ratios: Vec<f64> = times.windows(2).map(|w| w[1] / w[0]).collect();
    let overall = times[3] / times[0];
    let ok = ratios.iter().all(|&r| r <= 2.0 * 2.0) && overall <= 2.0 * 8.0;
    outcome(
        ok,
        format!(
            "per-eval {:?} us at N = {sizes:?} (M=8, k=3); doubling ratios {:?}, 64->512 ratio {overall:.2}",
            times
                .iter()
                .map(|t| (t * 1e6 * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("stripe oracle suite", Duration::from_secs(10), stripe_suite),
        ("likelihood oracle", Duration::from_secs(30), likelihood_suite),
        ("delay-filter suite", Duration::from_secs(5), filter_suite),
        ("MCMC joint-distribution test", Duration::from_secs(300), mcmc_suite),
        ("slice-sampler invariance", Duration::from_secs(30), slice_suite),
        (
            "wideband detection, desk scale",
            Duration::from_secs(900),
            desk_detection,
        ),
        ("null scenario", Duration::from_secs(600), null_detection),
        (
            "four-source demonstration, paper scale",
            Duration::from_secs(900),
            four_sources,
        ),
        ("reconstruction", Duration::from_secs(600), reconstruction),
        ("complexity sanity", Duration::from_secs(120), complexity),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let passed = out.passed && elapsed <= limit;
        failed += usize::from(!passed);
        println!(
            "[{}] {}. {name}: {} ({:.1} s, limit {} s)",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
