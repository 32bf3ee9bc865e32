//! Run configuration: built-in defaults, then the TOML file, then the
//! `SURROGATE_MCMC_SEED` environment variable, then command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use surrogate_mcmc_core::acceptance::MalaProposalParams;
use surrogate_mcmc_core::samplers::{default_config, Algorithm, SamplerConfig};
use surrogate_mcmc_core::targets::{make_target, TargetInstance, TargetOptions};

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "SURROGATE_MCMC_SEED";

/// Flags shared by `run` and `bench`. Each maps to one key of the config
/// file, shown in brackets.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// TOML config file with [run], [sampler] and [output] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Target: t1, t2, t3, t4, t5 or normal. [run.target]
    #[arg(long)]
    pub target: Option<String>,
    /// Algorithm; bench accepts a comma-separated list. [run.algo]
    #[arg(long)]
    pub algo: Option<String>,
    /// Replicates for bench. [run.replicates]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Dataset size for t3/t5, dimension for normal. [run.scale]
    #[arg(long)]
    pub scale: Option<usize>,
    /// Generate t2/t4 data without observation noise. [run.noise_free]
    #[arg(long)]
    pub noise_free: bool,
    /// Worker threads for bench replicates. [run.jobs]
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Total iterations, burn-in included. [sampler.iters]
    #[arg(long)]
    pub iters: Option<usize>,
    /// [sampler.burnin]
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Base seed; replicate r uses seed + r. [sampler.seed]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random-walk standard deviations, comma separated. [sampler.scales]
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    /// Langevin step size. [sampler.delta]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Diagonal Langevin preconditioner, comma separated. [sampler.precond]
    #[arg(long, value_delimiter = ',')]
    pub precond: Option<Vec<f64>>,
    /// Exact evaluations before the two-stage sampler starts. [sampler.init_count]
    #[arg(long)]
    pub init_count: Option<usize>,
    /// Hyperparameter refit period in ledger growths (burn-in only). [sampler.hyper_every]
    #[arg(long)]
    pub hyper_every: Option<usize>,
    /// Objective evaluations per refit. [sampler.hyper_budget]
    #[arg(long)]
    pub hyper_budget: Option<usize>,
    /// Fit hyperparameters on the most recent N points. [sampler.hyper_fit_points]
    #[arg(long)]
    pub hyper_fit_points: Option<usize>,
    /// GP training-set cap; 0 means unlimited. [sampler.gp_max_points]
    #[arg(long)]
    pub gp_max_points: Option<usize>,

    /// Output directory. [output.dir]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-replicate traces in bench. [output.traces]
    #[arg(long)]
    pub traces: bool,
    /// Write the target's synthetic dataset to this CSV. [output.export_data]
    #[arg(long)]
    pub export_data: Option<PathBuf>,
    /// Iterations per alpha-gap window. [output.window]
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    sampler: SamplerSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    target: Option<String>,
    algo: Option<String>,
    replicates: Option<usize>,
    scale: Option<usize>,
    noise_free: Option<bool>,
    jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplerSection {
    iters: Option<usize>,
    burnin: Option<usize>,
    seed: Option<u64>,
    scales: Option<Vec<f64>>,
    delta: Option<f64>,
    precond: Option<Vec<f64>>,
    init_count: Option<usize>,
    hyper_every: Option<usize>,
    hyper_budget: Option<usize>,
    hyper_fit_points: Option<usize>,
    gp_max_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    traces: Option<bool>,
    export_data: Option<PathBuf>,
    window: Option<usize>,
}

/// Fully merged configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub target: String,
    pub algos: Vec<Algorithm>,
    pub replicates: usize,
    pub scale: Option<usize>,
    pub noise_free: bool,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub iters: Option<usize>,
    pub burnin: Option<usize>,
    pub scales: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub precond: Option<Vec<f64>>,
    pub init_count: Option<usize>,
    pub hyper_every: Option<usize>,
    pub hyper_budget: Option<usize>,
    pub hyper_fit_points: Option<usize>,
    pub gp_max_points: Option<usize>,
    pub out: PathBuf,
    pub traces: bool,
    pub export_data: Option<PathBuf>,
    pub window: usize,
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_algos(list: &str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let a = Algorithm::parse(name).map_err(|e| CliError::Config(e.to_string()))?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("no algorithm given".into()));
    }
    Ok(out)
}

impl RunConfig {
    /// Merges flags over the file (if any) over the environment seed.
    pub fn resolve(flags: &Settings, env_seed: Option<&str>) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let env_seed = env_seed
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got '{s}'")))
            })
            .transpose()?;
        let target = flags
            .target
            .clone()
            .or(file.run.target)
            .ok_or_else(|| CliError::Config("no target given (--target or run.target)".into()))?;
        let algo = flags
            .algo
            .clone()
            .or(file.run.algo)
            .ok_or_else(|| CliError::Config("no algorithm given (--algo or run.algo)".into()))?;
        let replicates = flags.replicates.or(file.run.replicates).unwrap_or(1);
        if replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        let window = flags.window.or(file.output.window).unwrap_or(100);
        if window == 0 {
            return Err(CliError::Config("window must be at least 1".into()));
        }
        Ok(Self {
            target,
            algos: parse_algos(&algo)?,
            replicates,
            scale: flags.scale.or(file.run.scale),
            noise_free: flags.noise_free || file.run.noise_free.unwrap_or(false),
            jobs: flags.jobs.or(file.run.jobs),
            seed: flags.seed.or(env_seed).or(file.sampler.seed).unwrap_or(0),
            iters: flags.iters.or(file.sampler.iters),
            burnin: flags.burnin.or(file.sampler.burnin),
            scales: flags.scales.clone().or(file.sampler.scales),
            delta: flags.delta.or(file.sampler.delta),
            precond: flags.precond.clone().or(file.sampler.precond),
            init_count: flags.init_count.or(file.sampler.init_count),
            hyper_every: flags.hyper_every.or(file.sampler.hyper_every),
            hyper_budget: flags.hyper_budget.or(file.sampler.hyper_budget),
            hyper_fit_points: flags.hyper_fit_points.or(file.sampler.hyper_fit_points),
            gp_max_points: flags.gp_max_points.or(file.sampler.gp_max_points),
            out: flags
                .out
                .clone()
                .or(file.output.dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            traces: flags.traces || file.output.traces.unwrap_or(false),
            export_data: flags.export_data.clone().or(file.output.export_data),
            window,
        })
    }

    pub fn target_options(&self) -> TargetOptions {
        TargetOptions {
            scale: self.scale,
            noise_free: self.noise_free,
        }
    }

    /// Target instance with data generated from `seed`.
    pub fn make_target(&self, seed: u64) -> Result<TargetInstance> {
        make_target(&self.target, seed, self.target_options()).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Capability and sampler-setting checks, before any chain runs.
    pub fn validate(&self) -> Result<()> {
        let target = self.make_target(self.seed)?;
        for &alg in &self.algos {
            if alg.uses_gradient() && !target.has_gradient() {
                return Err(CliError::Config(format!(
                    "algorithm {} needs gradients, which target {} does not provide",
                    alg.name(),
                    self.target
                )));
            }
            self.sampler_config(&target, alg, self.seed)?;
        }
        Ok(())
    }

    /// Target defaults overridden by the configured sampler settings.
    pub fn sampler_config(&self, target: &TargetInstance, alg: Algorithm, seed: u64) -> Result<SamplerConfig> {
        let bad = |e: surrogate_mcmc_core::error::Error| CliError::Config(e.to_string());
        let mut c = default_config(target, alg, seed).map_err(bad)?;
        if let Some(n) = self.iters {
            c.n_iters = n;
        }
        if let Some(n) = self.burnin {
            c.n_burnin = n;
        }
        if let Some(s) = &self.scales {
            c.proposal_scales = s.clone();
        }
        if self.delta.is_some() || self.precond.is_some() {
            let t = target.tuning();
            let delta = self.delta.unwrap_or(t.mala_delta);
            let precond = self.precond.as_deref().unwrap_or(&t.mala_precond);
            c.mala = Some(MalaProposalParams::diagonal(delta, precond).map_err(bad)?);
        }
        if let Some(n) = self.init_count {
            c.gp_init_count = n;
        }
        if let Some(n) = self.hyper_every {
            c.hyper_update_every = n;
        }
        if let Some(n) = self.hyper_budget {
            c.hyper_budget = n;
        }
        if self.hyper_fit_points.is_some() {
            c.hyper_fit_points = self.hyper_fit_points;
        }
        if let Some(n) = self.gp_max_points {
            c.gp_max_points = (n > 0).then_some(n);
        }
        c.validate(target.dim(), alg).map_err(bad)?;
        Ok(c)
    }
}
