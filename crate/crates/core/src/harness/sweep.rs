//! Replication sweeps over one scenario axis with a resumable CSV.

use std::collections::HashSet;
use std::fs::OpenOptions;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepAxis};
use super::pipeline::{infer, simulate};
use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    pub replication: usize,
    pub k_true: usize,
    pub k_hat: usize,
    pub correct: u8,
    pub wall_time: f64,
}

/// Seed of one cell, a pure function of the base seed and the cell address.
pub fn cell_seed(base: u64, axis_index: usize, replication: usize) -> u64 {
    substream(substream(base, axis_index as u64), replication as u64)
}

pub fn run_cell(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
    seed: u64,
    replication: usize,
) -> Result<SweepRow> {
    let start = Instant::now();
    let cell = cfg.at_sweep_value(axis, value).with_seed(seed);
    cell.validate()?;
    let (syn, truth) = simulate(&cell)?;
    let (_, rep) = infer(&cell, &syn.received)?;
    let k_hat = rep.detection.k_hat;
    Ok(SweepRow {
        axis: value,
        replication,
        k_true: truth.k,
        k_hat,
        correct: u8::from(k_hat == truth.k),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Run every missing `(axis value, replication)` cell and append it to
/// `path`. Cells run `jobs` at a time and each batch is written in cell
/// order, so an interrupted sweep loses at most one batch. Returns the rows
/// of the whole file.
pub fn run_sweep(cfg: &ExperimentConfig, path: &Path, jobs: usize) -> Result<Vec<SweepRow>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep requires a [sweep] section with axis and values"))?;
    cfg.validate()?;
    let existing = if path.exists() && std::fs::metadata(path)?.len() > 0 {
        read_rows(path)?
    } else {
        Vec::new()
    };
    let done: HashSet<(u64, usize)> = existing.iter().map(|r| (r.axis.to_bits(), r.replication)).collect();
    let pending: Vec<(usize, f64, usize)> = sweep
        .values
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| (0..cfg.replications).map(move |r| (i, v, r)))
        .filter(|&(_, v, r)| !done.contains(&(v.to_bits(), r)))
        .collect();
    if pending.is_empty() {
        log::info!("sweep already complete ({} rows)", existing.len());
        return Ok(existing);
    }
    log::info!(
        "{} of {} sweep cells to run",
        pending.len(),
        sweep.values.len() * cfg.replications
    );

    let jobs = jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(existing.is_empty())
        .from_writer(file);
    let mut rows = existing;
    for batch in pending.chunks(jobs) {
        let out: Vec<Result<SweepRow>> = pool.install(|| {
            batch
                .par_iter()
                .map(|&(i, v, r)| run_cell(cfg, sweep.axis, v, cell_seed(cfg.scenario.seed, i, r), r))
                .collect()
        });
        for row in out {
            let row = row?;
            log::info!(
                "{}={} rep {}: k_hat={} (k={})",
                sweep.axis.name(),
                row.axis,
                row.replication,
                row.k_hat,
                row.k_true
            );
            w.serialize(&row)?;
            rows.push(row);
        }
        w.flush()?;
    }
    Ok(rows)
}

/// Mean accuracy per axis value, in the order values first appear.
pub fn accuracy_by_axis(rows: &[SweepRow]) -> Vec<(f64, f64, usize)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(a, _, _)| a.to_bits() == r.axis.to_bits()) {
            Some((_, s, n)) => {
                *s += f64::from(r.correct);
                *n += 1;
            }
            None => out.push((r.axis, f64::from(r.correct), 1)),
        }
    }
    out.iter_mut().for_each(|(_, s, n)| *s /= *n as f64);
    out
}
