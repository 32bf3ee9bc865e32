use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use surrogate_mcmc_core::diagnostics::{aggregate, compute_metrics, MetricsReport, Summary};
use surrogate_mcmc_core::samplers::{draw_start, run, Algorithm, ChainTrace};
use surrogate_mcmc_core::targets::TargetInstance;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{
    dataset_csv, to_json, trace_csv, write_atomic, Failure, Metrics, Row, RunFile, Stat, TableFile, SCHEMA_VERSION,
};
use crate::report::render_table;

/// Largest tolerated fraction of failed replicates per algorithm.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

struct ChainOutcome {
    trace: ChainTrace,
    metrics: MetricsReport,
    seconds: f64,
}

fn run_chain(cfg: &RunConfig, target: &TargetInstance, alg: Algorithm, seed: u64) -> Result<ChainOutcome> {
    let sampler = cfg.sampler_config(target, alg, seed)?;
    let theta0 = draw_start(target, seed)?;
    let start = Instant::now();
    let trace = run(alg, target, &sampler, &theta0)?;
    let seconds = start.elapsed().as_secs_f64();
    let metrics = compute_metrics(&trace, target.true_params(), cfg.window)?;
    Ok(ChainOutcome {
        trace,
        metrics,
        seconds,
    })
}

fn run_file(cfg: &RunConfig, target: &TargetInstance, alg: Algorithm, seed: u64, o: &ChainOutcome) -> RunFile {
    RunFile {
        schema_version: SCHEMA_VERSION.into(),
        kind: "run".into(),
        target: cfg.target.clone(),
        algo: alg.name().into(),
        seed,
        true_params: target.true_params().to_vec(),
        gp_skipped: o.trace.gp_skipped,
        hyper_updates: o.trace.hyper_updates,
        metrics: Metrics::from(&o.metrics),
        wall_clock_seconds: o.seconds,
    }
}

fn stem(cfg: &RunConfig, alg: Algorithm, tag: &str) -> PathBuf {
    cfg.out.join(format!("{}_{}_{tag}", cfg.target, alg.name()))
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn export_data(cfg: &RunConfig, target: &TargetInstance) -> Result<()> {
    if let Some(path) = &cfg.export_data {
        write_atomic(path, dataset_csv(&target.dataset()).as_bytes())?;
    }
    Ok(())
}

/// One chain per configured algorithm at `cfg.seed`; writes the trace CSV
/// and metrics JSON for each.
pub fn cmd_run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let target = cfg.make_target(cfg.seed)?;
    export_data(cfg, &target)?;
    let mut written = Vec::new();
    for &alg in &cfg.algos {
        let outcome = run_chain(cfg, &target, alg, cfg.seed)?;
        let base = stem(cfg, alg, &format!("seed{}", cfg.seed));
        let trace_path = with_suffix(&base, ".trace.csv");
        let metrics_path = with_suffix(&base, ".metrics.json");
        write_atomic(&trace_path, trace_csv(&outcome.trace).as_bytes())?;
        write_atomic(
            &metrics_path,
            &to_json(&run_file(cfg, &target, alg, cfg.seed, &outcome)),
        )?;
        println!(
            "{} {} seed {}: AR {:.3}, ESS {:.1}, Eval {:.1}%, {:.2}s -> {}",
            cfg.target,
            alg.name(),
            cfg.seed,
            outcome.metrics.acceptance_rate,
            outcome.metrics.ess_mean,
            outcome.metrics.eval_pct,
            outcome.seconds,
            metrics_path.display()
        );
        written.push(trace_path);
        written.push(metrics_path);
    }
    Ok(written)
}

fn single(v: f64) -> Stat {
    Stat { mean: v, median: v }
}

pub(crate) fn row_from_reports(
    target: &str,
    algo: &str,
    reports: &[MetricsReport],
    seconds: &[f64],
    failed: usize,
) -> Result<Row> {
    let agg = aggregate(reports)?;
    Ok(Row {
        target: target.into(),
        algo: algo.into(),
        replicates: reports.len(),
        failed,
        acceptance_rate: agg.acceptance_rate.into(),
        ess: agg.ess.into(),
        ess_min: agg.ess_min.into(),
        esjd: agg.esjd.into(),
        eval_pct: agg.eval_pct.into(),
        sd: agg.sd.into(),
        wall_clock_seconds: Summary::of(seconds).map_or(0.0, |s| s.mean),
    })
}

pub(crate) fn row_from_run(f: &RunFile) -> Row {
    let m = &f.metrics;
    Row {
        target: f.target.clone(),
        algo: f.algo.clone(),
        replicates: 1,
        failed: 0,
        acceptance_rate: single(m.acceptance_rate),
        ess: single(m.ess_mean),
        ess_min: single(m.ess_min),
        esjd: single(m.esjd),
        eval_pct: single(m.eval_pct),
        sd: single(m.sd),
        wall_clock_seconds: f.wall_clock_seconds,
    }
}

/// Seeded replicates (`seed + r`, fresh data each) of every configured
/// algorithm, run in parallel. Returns the summary path.
pub fn cmd_bench(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let jobs: Vec<(usize, Algorithm)> = (0..cfg.replicates)
        .flat_map(|r| cfg.algos.iter().map(move |a| (r, *a)))
        .collect();
    let work = |&(r, alg): &(usize, Algorithm)| -> (usize, Algorithm, Result<(MetricsReport, f64)>) {
        let seed = cfg.seed.wrapping_add(r as u64);
        let result = (|| {
            let target = cfg.make_target(seed)?;
            let outcome = run_chain(cfg, &target, alg, seed)?;
            let base = stem(cfg, alg, &format!("r{r:03}"));
            if cfg.traces {
                write_atomic(&with_suffix(&base, ".trace.csv"), trace_csv(&outcome.trace).as_bytes())?;
            }
            write_atomic(
                &with_suffix(&base, ".metrics.json"),
                &to_json(&run_file(cfg, &target, alg, seed, &outcome)),
            )?;
            Ok((outcome.metrics, outcome.seconds))
        })();
        (r, alg, result)
    };
    let results: Vec<_> = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| jobs.par_iter().map(work).collect()),
        None => jobs.par_iter().map(work).collect(),
    };
    export_data(cfg, &cfg.make_target(cfg.seed)?)?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut too_many = Vec::new();
    for &alg in &cfg.algos {
        let mut reports = Vec::new();
        let mut seconds = Vec::new();
        let mut failed = 0;
        for (r, a, res) in &results {
            if *a != alg {
                continue;
            }
            match res {
                Ok((m, s)) => {
                    reports.push(m.clone());
                    seconds.push(*s);
                }
                Err(e) => {
                    failed += 1;
                    failures.push(Failure {
                        algo: alg.name().into(),
                        replicate: *r,
                        seed: cfg.seed.wrapping_add(*r as u64),
                        error: e.to_string(),
                    });
                }
            }
        }
        if failed as f64 > MAX_FAILURE_FRACTION * cfg.replicates as f64 {
            too_many.push(format!("{}: {failed}/{} replicates failed", alg.name(), cfg.replicates));
        }
        if !reports.is_empty() {
            rows.push(row_from_reports(&cfg.target, alg.name(), &reports, &seconds, failed)?);
        }
    }
    let table = TableFile {
        schema_version: SCHEMA_VERSION.into(),
        kind: "bench".into(),
        rows,
        failures,
    };
    let path = cfg.out.join(format!("{}_bench.json", cfg.target));
    write_atomic(&path, &to_json(&table))?;
    print!("{}", render_table(&table.rows));
    for f in &table.failures {
        eprintln!(
            "replicate {} ({}, seed {}) failed: {}",
            f.replicate, f.algo, f.seed, f.error
        );
    }
    if !too_many.is_empty() {
        return Err(CliError::Runtime(too_many.join("; ")));
    }
    Ok(path)
}
