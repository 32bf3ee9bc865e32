//! File formats: trace CSV, metrics JSON and dataset CSV. Every file is
//! written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use surrogate_mcmc_core::diagnostics::{MetricsReport, Summary};
use surrogate_mcmc_core::samplers::ChainTrace;
use surrogate_mcmc_core::targets::Dataset;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: &str = "1.0";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Scientific notation with 17 significant digits.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_csv(trace: &ChainTrace) -> String {
    let d = trace.dim();
    let mut s = String::from("iter");
    for j in 0..d {
        write!(s, ",theta_{j}").unwrap();
    }
    s.push_str(",stage1_log_alpha,stage1_accepted,stage2_log_alpha,stage2_accepted,full_eval\n");
    for (k, r) in trace.records.iter().enumerate() {
        write!(s, "{k}").unwrap();
        for v in &r.theta {
            write!(s, ",{}", float(*v)).unwrap();
        }
        let a2 = r.stage2_log_alpha.map(float).unwrap_or_default();
        let acc2 = r.stage2_accepted.map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            s,
            ",{},{},{a2},{acc2},{}",
            float(r.stage1_log_alpha),
            r.stage1_accepted,
            r.full_eval
        )
        .unwrap();
    }
    s
}

pub fn dataset_csv(data: &Dataset) -> String {
    let mut s = data.columns.join(",");
    s.push('\n');
    for row in &data.rows {
        let cells: Vec<String> = row.iter().map(|v| float(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acceptance_rate: f64,
    pub ess: Vec<f64>,
    pub ess_mean: f64,
    pub ess_min: f64,
    pub esjd: f64,
    pub eval_pct: f64,
    pub sd: f64,
    pub posterior_mean: Vec<f64>,
    pub full_evaluations: u64,
    pub n_iters: usize,
    pub n_burnin: usize,
    /// `[window index, mean |α₁ − α₂|]` pairs.
    pub alpha_gap_series: Vec<(usize, f64)>,
}

impl From<&MetricsReport> for Metrics {
    fn from(m: &MetricsReport) -> Self {
        Self {
            acceptance_rate: m.acceptance_rate,
            ess: m.ess.clone(),
            ess_mean: m.ess_mean,
            ess_min: m.ess_min,
            esjd: m.esjd,
            eval_pct: m.eval_pct,
            sd: m.sd,
            posterior_mean: m.posterior_mean.clone(),
            full_evaluations: m.full_evaluations,
            n_iters: m.n_iters,
            n_burnin: m.n_burnin,
            alpha_gap_series: m.alpha_gap_series.clone(),
        }
    }
}

impl From<&Metrics> for MetricsReport {
    fn from(m: &Metrics) -> Self {
        Self {
            acceptance_rate: m.acceptance_rate,
            ess: m.ess.clone(),
            ess_mean: m.ess_mean,
            ess_min: m.ess_min,
            esjd: m.esjd,
            eval_pct: m.eval_pct,
            sd: m.sd,
            posterior_mean: m.posterior_mean.clone(),
            full_evaluations: m.full_evaluations,
            n_iters: m.n_iters,
            n_burnin: m.n_burnin,
            alpha_gap_series: m.alpha_gap_series.clone(),
        }
    }
}

/// One chain's metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub schema_version: String,
    pub kind: String,
    pub target: String,
    pub algo: String,
    pub seed: u64,
    pub true_params: Vec<f64>,
    pub gp_skipped: usize,
    pub hyper_updates: usize,
    pub metrics: Metrics,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub median: f64,
}

impl From<Summary> for Stat {
    fn from(s: Summary) -> Self {
        Self {
            mean: s.mean,
            median: s.median,
        }
    }
}

/// One table row: a target/algorithm pair summarized over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub target: String,
    pub algo: String,
    pub replicates: usize,
    pub failed: usize,
    pub acceptance_rate: Stat,
    pub ess: Stat,
    pub ess_min: Stat,
    pub esjd: Stat,
    pub eval_pct: Stat,
    pub sd: Stat,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub algo: String,
    pub replicate: usize,
    pub seed: u64,
    pub error: String,
}

/// Summary written by `bench`, and the merged file written by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableFile {
    pub schema_version: String,
    pub kind: String,
    pub rows: Vec<Row>,
    #[serde(default)]
    pub failures: Vec<Failure>,
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("metrics serialize");
    v.push(b'\n');
    v
}
