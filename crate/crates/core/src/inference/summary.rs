use serde::{Deserialize, Serialize};

use super::MixtureLabeling;
use crate::error::{Error, Result};
use crate::sampler::ChainTrace;
use crate::stats::quantile;

/// Per-component point estimates and central 95% intervals. Fields are
/// `None` when no draw was assigned to the component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    /// 1-based mixture component.
    pub component: usize,
    pub weight: f64,
    pub n_assigned: usize,
    pub doa_mean_deg: Option<f64>,
    pub doa_sd_deg: Option<f64>,
    pub doa_ci95_deg: Option<(f64, f64)>,
    pub snr_mean_db: Option<f64>,
    pub snr_sd_db: Option<f64>,
    pub snr_ci95_db: Option<(f64, f64)>,
}

fn describe(mut v: Vec<f64>) -> (Option<f64>, Option<f64>, Option<(f64, f64)>) {
    if v.is_empty() {
        return (None, None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    v.sort_by(f64::total_cmp);
    (Some(mean), Some(sd), Some((quantile(&v, 0.025), quantile(&v, 0.975))))
}

/// Summaries sorted by decreasing component weight.
pub fn summarize(trace: &ChainTrace, labeling: &MixtureLabeling) -> Result<Vec<SourceSummary>> {
    if labeling.assignments.len() != trace.len() {
        return Err(Error::shape(format!(
            "{} label rows for {} samples",
            labeling.assignments.len(),
            trace.len()
        )));
    }
    let kappa = labeling.components.len();
    let mut doas = vec![Vec::new(); kappa];
    let mut snrs = vec![Vec::new(); kappa];
    for (s, lab) in trace.samples.iter().zip(&labeling.assignments) {
        for (i, &c) in lab.iter().enumerate() {
            if c >= 1 {
                doas[c - 1].push(s.phis[i].to_degrees());
                snrs[c - 1].push(10.0 * s.gammas[i].log10());
            }
        }
    }
    let mut out: Vec<SourceSummary> = labeling
        .components
        .iter()
        .zip(doas.into_iter().zip(snrs))
        .enumerate()
        .map(|(c, (comp, (d, g)))| {
            let n_assigned = d.len();
            let (doa_mean_deg, doa_sd_deg, doa_ci95_deg) = describe(d);
            let (snr_mean_db, snr_sd_db, snr_ci95_db) = describe(g);
            SourceSummary {
                component: c + 1,
                weight: comp.weight,
                n_assigned,
                doa_mean_deg,
                doa_sd_deg,
                doa_ci95_deg,
                snr_mean_db,
                snr_sd_db,
                snr_ci95_db,
            }
        })
        .collect();
    out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    Ok(out)
}
