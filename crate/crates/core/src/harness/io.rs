//! File formats: channel CSVs, ground truth, traces and metadata sidecars.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::SourceEntry;
use crate::error::{Error, Result};
use crate::rng::GENERATOR_NAME;
use crate::sampler::ChainTrace;

/// Write equal-length columns with headers `{prefix}_1, {prefix}_2, …`.
pub fn write_columns(path: &Path, prefix: &str, columns: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = (1..=columns.len()).map(|i| format!("{prefix}_{i}")).collect();
    w.write_record(&header)?;
    let rows = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::shape("columns differ in length"));
    }
    for t in 0..rows {
        w.write_record(columns.iter().map(|c| format!("{:e}", c[t])))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a column-per-channel CSV back into channels.
pub fn read_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let m = r.headers()?.len();
    let mut cols = vec![Vec::new(); m];
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != m {
            return Err(Error::shape(format!("row has {} fields, header has {m}", rec.len())));
        }
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::usage(format!("bad number `{field}`: {e}")))?,
            );
        }
    }
    Ok(cols)
}

/// Ground truth of a simulated scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub k: usize,
    pub sources: Vec<SourceEntry>,
    pub noise_power: f64,
    pub seed: u64,
    pub num_sensors: usize,
    pub n_samples: usize,
    pub period: usize,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_trace(path: &Path, trace: &ChainTrace) -> Result<()> {
    fs::write(path, trace.to_jsonl()?)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<ChainTrace> {
    ChainTrace::from_jsonl(&fs::read_to_string(path)?)
}

/// Everything that varies between otherwise identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub version: String,
    pub generator: String,
    pub seed: u64,
    /// `(seed, stream)` pairs used, by purpose.
    pub streams: Vec<(String, u64, u64)>,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub wall_time_s: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunMetadata {
    pub fn new(command: &str, seed: u64, streams: Vec<(String, u64, u64)>, started: f64) -> Self {
        let finished = unix_now();
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generator: GENERATOR_NAME.into(),
            seed,
            streams,
            started_unix_s: started,
            finished_unix_s: finished,
            wall_time_s: finished - started,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let cols = vec![vec![1.0, -2.5e-7, 3.0], vec![0.1, 0.2, std::f64::consts::PI]];
        write_columns(&p, "sensor", &cols).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("sensor_1,sensor_2\n"));
        assert_eq!(read_columns(&p).unwrap(), cols);
    }
}
