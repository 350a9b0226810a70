//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wbdoa::harness::io::{read_columns, read_trace, unix_now, write_columns, write_json, write_trace, RunMetadata};
use wbdoa::harness::mcmc_test::run_mcmc_test;
use wbdoa::harness::pipeline::{RECONSTRUCTION_STREAM, SYNTHESIS_STREAM};
use wbdoa::harness::sweep::{accuracy_by_axis, run_sweep};
use wbdoa::harness::{infer, reconstruct, report, simulate, ExperimentConfig, Profile};
use wbdoa::sampler::KernelVariant;
use wbdoa::{Error, Result};

#[derive(Parser)]
#[command(
    name = "wbdoa",
    version,
    about = "Bayesian wideband DoA estimation and source detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML (or JSON) overrides on top of the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
    profile: ProfileArg,
    /// Overrides both the scenario and the sampler seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to `output_dir` of the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Correct,
    /// Death acceptance without the reverse proposal density.
    Broken,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate array data; writes data.csv, sources.csv and truth.json.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the sampler on a data CSV; writes trace.jsonl and report.json.
    Infer {
        #[command(flatten)]
        common: Common,
        /// Data CSV, one column per sensor (default: <out>/data.csv).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Detection accuracy over the configured sweep axis; appends to sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Posterior source reconstructions from a trace; writes reconstruction.csv.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Use every `thin`-th retained sample.
        #[arg(long, default_value_t = 4)]
        thin: usize,
    },
    /// Joint-distribution test of the transition kernel on a tiny model.
    McmcTest {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = KernelArg::Correct)]
        kernel: KernelArg,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Recompute the detection and summary report from an existing trace.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

/// Nonzero exit for a failed statistical test, as opposed to an error.
const EXIT_TEST_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let profile = match common.profile {
        ProfileArg::Desk => Profile::Desk,
        ProfileArg::Paper => Profile::Paper,
    };
    let mut cfg = ExperimentConfig::load(profile, common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg = cfg.with_seed(s);
        cfg.mcmc_test.seed = s;
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn meta(out: &Path, command: &str, seed: u64, streams: Vec<(&str, u64, u64)>, started: f64) -> Result<()> {
    let streams = streams.into_iter().map(|(n, a, b)| (n.to_string(), a, b)).collect();
    write_json(
        &out.join(format!("{command}.meta.json")),
        &RunMetadata::new(command, seed, streams, started),
    )
}

fn check_dims(cfg: &ExperimentConfig, y: &[Vec<f64>]) -> Result<()> {
    let (m, n) = (cfg.geometry.num_sensors, cfg.signal.n_samples);
    if y.len() != m || y.iter().any(|c| c.len() != n) {
        return Err(Error::Shape(format!(
            "data has {} channels of {} samples, configuration expects {m} × {n}",
            y.len(),
            y.first().map_or(0, Vec::len)
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let started = unix_now();
    match cli.command {
        Command::Simulate { common } => {
            let (cfg, out) = load(&common)?;
            let (syn, truth) = simulate(&cfg)?;
            write_columns(&out.join("data.csv"), "sensor", &syn.received)?;
            write_columns(&out.join("sources.csv"), "source", &syn.sources)?;
            write_json(&out.join("truth.json"), &truth)?;
            meta(
                &out,
                "simulate",
                cfg.scenario.seed,
                vec![("synthesis", cfg.scenario.seed, SYNTHESIS_STREAM)],
                started,
            )?;
            println!(
                "wrote {} channels × {} samples, k = {}",
                truth.num_sensors, truth.n_samples, truth.k
            );
        }
        Command::Infer { common, data } => {
            let (cfg, out) = load(&common)?;
            let y = read_columns(&data.unwrap_or_else(|| out.join("data.csv")))?;
            check_dims(&cfg, &y)?;
            let (trace, rep) = infer(&cfg, &y)?;
            write_trace(&out.join("trace.jsonl"), &trace)?;
            write_json(&out.join("report.json"), &rep)?;
            meta(
                &out,
                "infer",
                cfg.sampler.seed,
                vec![("chain", cfg.sampler.seed, cfg.sampler.stream)],
                started,
            )?;
            println!("k_hat = {}, kappa = {}", rep.detection.k_hat, rep.kappa);
        }
        Command::Sweep { common, jobs } => {
            let (cfg, out) = load(&common)?;
            let rows = run_sweep(&cfg, &out.join("sweep.csv"), jobs)?;
            meta(&out, "sweep", cfg.scenario.seed, vec![], started)?;
            for (v, acc, n) in accuracy_by_axis(&rows) {
                println!("{v}: accuracy {acc:.2} over {n} replications");
            }
        }
        Command::Reconstruct {
            common,
            data,
            trace,
            thin,
        } => {
            let (cfg, out) = load(&common)?;
            let y = read_columns(&data.unwrap_or_else(|| out.join("data.csv")))?;
            check_dims(&cfg, &y)?;
            let trace = read_trace(&trace.unwrap_or_else(|| out.join("trace.jsonl")))?;
            if let Some(bad) = trace.samples.iter().find(|s| s.state().validate().is_err()) {
                return Err(Error::Shape(format!("trace sample {} is not a valid state", bad.step)));
            }
            let rec = reconstruct(&cfg, &y, &trace, thin)?;
            let mut w = csv::Writer::from_path(out.join("reconstruction.csv"))?;
            w.write_record(["source", "n", "mean", "lower", "upper"])?;
            for (i, s) in rec.sources.iter().enumerate() {
                for t in 0..s.mean.len() {
                    w.write_record(&[
                        (i + 1).to_string(),
                        t.to_string(),
                        format!("{:e}", s.mean[t]),
                        format!("{:e}", s.lower[t]),
                        format!("{:e}", s.upper[t]),
                    ])?;
                }
            }
            w.flush()?;
            meta(
                &out,
                "reconstruct",
                cfg.sampler.seed,
                vec![("reconstruction", cfg.sampler.seed, RECONSTRUCTION_STREAM)],
                started,
            )?;
            println!("reconstructed {} sources", rec.sources.len());
        }
        Command::McmcTest { common, kernel, draws } => {
            let (cfg, out) = load(&common)?;
            let mut t = cfg.mcmc_test.clone();
            t.kernel = match kernel {
                KernelArg::Correct => KernelVariant::Correct,
                KernelArg::Broken => KernelVariant::DeathWithoutProposal,
            };
            if let Some(d) = draws {
                t.draws = d;
            }
            let rep = run_mcmc_test(&t)?;
            write_json(&out.join("mcmc_test.json"), &rep)?;
            meta(
                &out,
                "mcmc-test",
                t.seed,
                vec![("marginal", t.seed, 0), ("successive", t.seed, 1)],
                started,
            )?;
            for m in &rep.tests {
                println!(
                    "{:<12} statistic {:>10.4}  p {:.3e}  p_adj {:.3e}",
                    m.name, m.statistic, m.p_value, m.p_adjusted
                );
            }
            println!("{}", if rep.passed { "PASS" } else { "FAIL" });
            return Ok(rep.passed);
        }
        Command::Report { common, trace } => {
            let (cfg, out) = load(&common)?;
            let trace = read_trace(&trace.unwrap_or_else(|| out.join("trace.jsonl")))?;
            let rep = report(&trace, &cfg)?;
            write_json(&out.join("report.json"), &rep)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TEST_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
