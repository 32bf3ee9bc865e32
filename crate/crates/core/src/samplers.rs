//! Chain drivers: random-walk MH, MALA, and their two-stage GP-surrogate
//! counterparts.
//!
//! The current state's log-likelihood (and gradient) always comes from the
//! ledger, never from the surrogate. Every stage-1 acceptance of a new
//! point costs one exact evaluation, which is added to the ledger and to the
//! GP before the stage-2 decision; stage 2 itself uses the pre-update
//! stage-1 quantities.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};

use crate::acceptance::{
    stage1_log_alpha_mala, stage1_log_alpha_mh, stage2_log_alpha_mala, stage2_log_alpha_mh, MalaProposalParams,
    StateSnapshot,
};
use crate::error::{check_dim, Error, Result};
use crate::gp::{GpSurrogate, SurrogatePrediction};
use crate::hyperopt::{optimize_hypers_bounded, FitData, LogBounds};
use crate::kernel::KernelHyper;
use crate::ledger::{Evaluation, EvaluationLedger};
use crate::targets::TargetInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Mh,
    Mala,
    GpMh,
    GpMala,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Mh, Algorithm::Mala, Algorithm::GpMh, Algorithm::GpMala];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mh => "mh",
            Algorithm::Mala => "mala",
            Algorithm::GpMh => "gp-mh",
            Algorithm::GpMala => "gp-mala",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown algorithm '{name}' (expected mh, mala, gp-mh, gp-mala)"
            ))
        })
    }

    pub fn uses_gradient(self) -> bool {
        matches!(self, Algorithm::Mala | Algorithm::GpMala)
    }

    pub fn is_two_stage(self) -> bool {
        matches!(self, Algorithm::GpMh | Algorithm::GpMala)
    }
}

/// Default hyperparameter fitting window for the joint value and gradient
/// surrogate, whose likelihood costs `O((n(d+1))³)` per evaluation.
pub const JOINT_FIT_POINTS: usize = 40;

/// Default training-set cap for the joint surrogate, whose prediction cost
/// grows as `(n(d+1))²`.
pub const JOINT_GP_MAX_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Total iterations, burn-in included.
    pub n_iters: usize,
    pub n_burnin: usize,
    /// Standard deviations of the diagonal random-walk proposal.
    pub proposal_scales: Vec<f64>,
    pub mala: Option<MalaProposalParams>,
    /// Exact evaluations made before the two-stage sampler starts.
    pub gp_init_count: usize,
    /// Re-optimize kernel hyperparameters after this many new ledger
    /// entries, during burn-in only.
    pub hyper_update_every: usize,
    /// Objective evaluations per hyperparameter optimization.
    pub hyper_budget: usize,
    /// Fit hyperparameters on at most this many of the most recent ledger
    /// entries. Unset means all entries for the scalar surrogate and
    /// [`JOINT_FIT_POINTS`] for the joint one.
    pub hyper_fit_points: Option<usize>,
    /// Stop conditioning the GP on new points beyond this many.
    pub gp_max_points: Option<usize>,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(proposal_scales: Vec<f64>, seed: u64) -> Self {
        Self {
            n_iters: 2500,
            n_burnin: 500,
            proposal_scales,
            mala: None,
            gp_init_count: 3,
            hyper_update_every: 25,
            hyper_budget: 100,
            hyper_fit_points: None,
            gp_max_points: None,
            seed,
        }
    }

    pub fn validate(&self, dim: usize, algorithm: Algorithm) -> Result<()> {
        if self.n_iters == 0 || self.n_burnin >= self.n_iters {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= burn-in < iterations, got burn-in {} with {} iterations",
                self.n_burnin, self.n_iters
            )));
        }
        if algorithm.uses_gradient() {
            let p = self
                .mala
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("Langevin proposal parameters are required".into()))?;
            check_dim(dim, p.dim())?;
        } else {
            check_dim(dim, self.proposal_scales.len())?;
            if self.proposal_scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                return Err(Error::InvalidArgument("proposal scales must be positive".into()));
            }
        }
        if self.gp_init_count == 0 {
            return Err(Error::InvalidArgument("gp_init_count must be at least 1".into()));
        }
        if self.hyper_update_every == 0 {
            return Err(Error::InvalidArgument("hyper_update_every must be at least 1".into()));
        }
        if self.hyper_fit_points.is_some_and(|n| n < 3) {
            return Err(Error::InvalidArgument("hyper_fit_points must be at least 3".into()));
        }
        if self.gp_max_points == Some(0) {
            return Err(Error::InvalidArgument("gp_max_points must be at least 1".into()));
        }
        Ok(())
    }
}

/// One iteration of a chain. Baselines report their single MH probability
/// in the stage-1 fields and leave stage 2 empty.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// State after the iteration.
    pub theta: Vec<f64>,
    pub stage1_log_alpha: f64,
    pub stage1_accepted: bool,
    pub stage2_log_alpha: Option<f64>,
    pub stage2_accepted: Option<bool>,
    /// Final decision.
    pub accepted: bool,
    pub full_eval: bool,
}

#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub algorithm: Algorithm,
    pub records: Vec<IterationRecord>,
    pub n_burnin: usize,
    pub theta0: Vec<f64>,
    pub ledger: EvaluationLedger,
    /// Exact evaluations made by this run, initialization included.
    pub full_evaluations: u64,
    pub init_evaluations: u64,
    /// Kernel hyperparameters in force at the end (two-stage only).
    pub final_hyper: Option<KernelHyper>,
    pub hyper_updates: usize,
    /// New points that could not be added to the GP (ill-conditioning or
    /// the size cap); they remain in the ledger.
    pub gp_skipped: usize,
}

impl ChainTrace {
    pub fn n_iters(&self) -> usize {
        self.records.len()
    }

    pub fn post_burnin(&self) -> &[IterationRecord] {
        &self.records[self.n_burnin.min(self.records.len())..]
    }

    pub fn dim(&self) -> usize {
        self.theta0.len()
    }
}

/// Runs `algorithm` from `theta0`.
pub fn run(
    algorithm: Algorithm,
    target: &TargetInstance,
    config: &SamplerConfig,
    theta0: &[f64],
) -> Result<ChainTrace> {
    match algorithm {
        Algorithm::Mh => run_mh(target, config, theta0),
        Algorithm::Mala => run_mala(target, config, theta0),
        Algorithm::GpMh => run_gp_mh(target, config, theta0),
        Algorithm::GpMala => run_gp_mala(target, config, theta0),
    }
}

fn require_gradient(target: &TargetInstance) -> Result<()> {
    if target.has_gradient() {
        Ok(())
    } else {
        Err(Error::MissingCapability {
            target: String::from(target.name()),
            capability: "gradient",
        })
    }
}

fn check_start(target: &TargetInstance, theta0: &[f64]) -> Result<f64> {
    check_dim(target.dim(), theta0.len())?;
    let lp = target.log_prior(theta0)?;
    if !lp.is_finite() {
        return Err(Error::Initialization(
            "starting point is outside the prior support".into(),
        ));
    }
    Ok(lp)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(Open01)
}

fn random_walk(rng: &mut ChaCha8Rng, theta: &[f64], scales: &[f64]) -> Vec<f64> {
    theta
        .iter()
        .zip(scales)
        .map(|(t, s)| t + s * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn langevin_noise(rng: &mut ChaCha8Rng, params: &MalaProposalParams) -> Vec<f64> {
    let z: Vec<f64> = (0..params.dim()).map(|_| rng.sample(StandardNormal)).collect();
    params.noise(&z)
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

struct Tally<'a> {
    target: &'a TargetInstance,
    start: u64,
}

impl<'a> Tally<'a> {
    fn new(target: &'a TargetInstance) -> Self {
        Self {
            target,
            start: target.evaluations(),
        }
    }

    fn count(&self) -> u64 {
        self.target.evaluations() - self.start
    }
}

/// Random-walk Metropolis–Hastings with `Normal(0, diag(scales²))` steps.
pub fn run_mh(target: &TargetInstance, config: &SamplerConfig, theta0: &[f64]) -> Result<ChainTrace> {
    config.validate(target.dim(), Algorithm::Mh)?;
    let mut lp = check_start(target, theta0)?;
    let tally = Tally::new(target);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta = theta0.to_vec();
    let mut ll = target.log_likelihood(&theta)?;
    if !ll.is_finite() {
        return Err(Error::Initialization(
            "log-likelihood is not finite at the starting point".into(),
        ));
    }
    let mut ledger = EvaluationLedger::new();
    ledger.insert(Evaluation::new(theta.clone(), ll))?;
    let init = tally.count();

    let mut records = Vec::with_capacity(config.n_iters);
    for _ in 0..config.n_iters {
        let prop = random_walk(&mut rng, &theta, &config.proposal_scales);
        let u = uniform(&mut rng);
        let lp_p = target.log_prior(&prop)?;
        let ll_p = target.log_likelihood(&prop)?;
        let _ = ledger.insert(Evaluation::new(prop.clone(), ll_p));
        let log_alpha = if lp_p.is_finite() && ll_p.is_finite() {
            (ll_p + lp_p - ll - lp).min(0.0)
        } else {
            f64::NEG_INFINITY
        };
        let accepted = u.ln() < log_alpha;
        if accepted {
            theta = prop;
            ll = ll_p;
            lp = lp_p;
        }
        records.push(IterationRecord {
            theta: theta.clone(),
            stage1_log_alpha: log_alpha,
            stage1_accepted: accepted,
            stage2_log_alpha: None,
            stage2_accepted: None,
            accepted,
            full_eval: true,
        });
    }
    Ok(ChainTrace {
        algorithm: Algorithm::Mh,
        records,
        n_burnin: config.n_burnin,
        theta0: theta0.to_vec(),
        ledger,
        full_evaluations: tally.count(),
        init_evaluations: init,
        final_hyper: None,
        hyper_updates: 0,
        gp_skipped: 0,
    })
}

/// Metropolis-adjusted Langevin with proposal
/// `Normal(θ + ½δΛ∇log π(θ), δΛ)`.
pub fn run_mala(target: &TargetInstance, config: &SamplerConfig, theta0: &[f64]) -> Result<ChainTrace> {
    require_gradient(target)?;
    config.validate(target.dim(), Algorithm::Mala)?;
    let params = config.mala.as_ref().expect("validated");
    let mut lp = check_start(target, theta0)?;
    let tally = Tally::new(target);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta = theta0.to_vec();
    let (mut ll, grad) = target.log_likelihood_and_gradient(&theta)?;
    let grad = match grad {
        Some(g) if ll.is_finite() => g,
        _ => {
            return Err(Error::Initialization(
                "log-likelihood is not finite at the starting point".into(),
            ))
        }
    };
    let mut ledger = EvaluationLedger::new();
    ledger.insert(Evaluation::with_gradient(theta.clone(), ll, grad.clone()))?;
    let init = tally.count();
    let glp = target.grad_log_prior(&theta)?;
    let mut drift = crate::acceptance::mala_drift(&theta, &grad, &glp, params)?;

    let mut records = Vec::with_capacity(config.n_iters);
    for _ in 0..config.n_iters {
        let prop = add(&drift, &langevin_noise(&mut rng, params));
        let u = uniform(&mut rng);
        let lp_p = target.log_prior(&prop)?;
        let (ll_p, grad_p) = target.log_likelihood_and_gradient(&prop)?;
        let mut next = None;
        let log_alpha = match grad_p {
            Some(g) if lp_p.is_finite() && ll_p.is_finite() => {
                let _ = ledger.insert(Evaluation::with_gradient(prop.clone(), ll_p, g.clone()));
                let glp_p = target.grad_log_prior(&prop)?;
                let drift_p = crate::acceptance::mala_drift(&prop, &g, &glp_p, params)?;
                let fwd = params.log_density(&prop, &drift)?;
                let rev = params.log_density(&theta, &drift_p)?;
                let la = (ll_p + lp_p + rev - ll - lp - fwd).min(0.0);
                next = Some(drift_p);
                la
            }
            _ => {
                let _ = ledger.insert(Evaluation::new(prop.clone(), ll_p));
                f64::NEG_INFINITY
            }
        };
        let accepted = u.ln() < log_alpha;
        if accepted {
            theta = prop;
            ll = ll_p;
            lp = lp_p;
            drift = next.expect("finite proposal");
        }
        records.push(IterationRecord {
            theta: theta.clone(),
            stage1_log_alpha: log_alpha,
            stage1_accepted: accepted,
            stage2_log_alpha: None,
            stage2_accepted: None,
            accepted,
            full_eval: true,
        });
    }
    Ok(ChainTrace {
        algorithm: Algorithm::Mala,
        records,
        n_burnin: config.n_burnin,
        theta0: theta0.to_vec(),
        ledger,
        full_evaluations: tally.count(),
        init_evaluations: init,
        final_hyper: None,
        hyper_updates: 0,
        gp_skipped: 0,
    })
}

/// Exact evaluations at `theta0` and at `gp_init_count − 1` proposal draws
/// around it. A duplicate draw is retried once.
pub fn init_ledger(
    target: &TargetInstance,
    theta0: &[f64],
    config: &SamplerConfig,
    gradient: bool,
) -> Result<EvaluationLedger> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_ledger_with(target, theta0, config, gradient, &mut rng)
}

fn evaluate(target: &TargetInstance, theta: &[f64], gradient: bool) -> Result<Evaluation> {
    if gradient {
        let (ll, g) = target.log_likelihood_and_gradient(theta)?;
        Ok(match g {
            Some(g) => Evaluation::with_gradient(theta.to_vec(), ll, g),
            None => Evaluation::new(theta.to_vec(), ll),
        })
    } else {
        Ok(Evaluation::new(theta.to_vec(), target.log_likelihood(theta)?))
    }
}

fn init_ledger_with(
    target: &TargetInstance,
    theta0: &[f64],
    config: &SamplerConfig,
    gradient: bool,
    rng: &mut ChaCha8Rng,
) -> Result<EvaluationLedger> {
    check_dim(target.dim(), theta0.len())?;
    if gradient {
        require_gradient(target)?;
    }
    let mut ledger = EvaluationLedger::new();
    let first = evaluate(target, theta0, gradient)?;
    if !first.is_finite() || (gradient && first.gradient.is_none()) {
        return Err(Error::Initialization(
            "log-likelihood is not finite at the starting point".into(),
        ));
    }
    ledger.insert(first)?;
    for _ in 1..config.gp_init_count {
        let mut placed = false;
        for _ in 0..2 {
            let theta = match (&config.mala, gradient) {
                (Some(p), true) => add(theta0, &langevin_noise(rng, p)),
                _ => random_walk(rng, theta0, &config.proposal_scales),
            };
            if ledger.contains(&theta) {
                continue;
            }
            ledger.insert(evaluate(target, &theta, gradient)?)?;
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Initialization("duplicate initialization point".into()));
        }
    }
    Ok(ledger)
}

/// Length-scale guess from the proposal: twice the per-coordinate step.
fn initial_hyper(config: &SamplerConfig, ledger: &EvaluationLedger, gradient: bool) -> Result<KernelHyper> {
    let steps: Vec<f64> = match (&config.mala, gradient) {
        (Some(p), true) => (0..p.dim()).map(|j| (p.delta() * p.precond()[(j, j)]).sqrt()).collect(),
        _ => config.proposal_scales.clone(),
    };
    let ys: Vec<f64> = ledger
        .iter()
        .filter(|e| e.is_finite())
        .map(|e| e.log_likelihood)
        .collect();
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    KernelHyper::new(steps.iter().map(|s| 2.0 * s).collect(), var.max(1.0))
}

/// Hyperparameter search box, fixed for the whole run and anchored at the
/// initial guess (twice the proposal step): length-scales may not fall
/// below one proposal step, where the surrogate stops informing stage 1,
/// and may grow by up to 1000x; the
/// signal variance may move three decades down and six up.
fn hyper_bounds(init: &KernelHyper) -> LogBounds {
    let x0 = init.to_log_params();
    let d = init.dim();
    let (down_l, up_l) = (2f64.ln(), 1000f64.ln());
    let (down_s, up_s) = (1e3f64.ln(), 1e6f64.ln());
    let mut lower: Vec<f64> = x0[..d].iter().map(|v| v - down_l).collect();
    let mut upper: Vec<f64> = x0[..d].iter().map(|v| v + up_l).collect();
    lower.push(x0[d] - down_s);
    upper.push(x0[d] + up_s);
    LogBounds { lower, upper }
}

/// Surrogate state shared by both two-stage drivers.
struct Surrogate {
    gp: GpSurrogate,
    bounds: LogBounds,
    gradient: bool,
    budget: usize,
    every: usize,
    cap: Option<usize>,
    fit_data: FitData,
    growth_since_update: usize,
    updates: usize,
    skipped: usize,
}

impl Surrogate {
    fn new(ledger: &EvaluationLedger, config: &SamplerConfig, gradient: bool, prior_mean: f64) -> Result<Self> {
        let hyper = initial_hyper(config, ledger, gradient)?;
        let gp = GpSurrogate::fit_evaluations(
            ledger
                .iter()
                .filter(|e| e.is_finite())
                .take(config.gp_max_points.unwrap_or(usize::MAX)),
            &hyper,
            prior_mean,
            gradient,
        )?;
        let mut s = Self {
            bounds: hyper_bounds(&hyper),
            gp,
            gradient,
            budget: config.hyper_budget,
            every: config.hyper_update_every,
            cap: config.gp_max_points,
            fit_data: FitData {
                gradient,
                max_points: config.hyper_fit_points.or(gradient.then_some(JOINT_FIT_POINTS)),
            },
            growth_since_update: 0,
            updates: 0,
            skipped: 0,
        };
        s.reoptimize(ledger, prior_mean);
        Ok(s)
    }

    fn reoptimize(&mut self, ledger: &EvaluationLedger, prior_mean: f64) {
        self.growth_since_update = 0;
        if self.budget == 0 || ledger.iter().filter(|e| e.is_finite()).count() < 3 {
            return;
        }
        let Ok(outcome) = optimize_hypers_bounded(
            ledger,
            self.gp.hyper(),
            prior_mean,
            self.budget,
            &self.bounds,
            self.fit_data,
        ) else {
            return;
        };
        if outcome.hyper == *self.gp.hyper() {
            return;
        }
        let members = ledger.iter().filter(|e| e.is_finite() && self.gp.contains(&e.theta));
        if let Ok(gp) = GpSurrogate::fit_evaluations(members, &outcome.hyper, prior_mean, self.gradient) {
            self.gp = gp;
            self.updates += 1;
        }
    }

    fn add(&mut self, ev: &Evaluation) {
        if !ev.is_finite() || (self.gradient && ev.gradient.is_none()) {
            return;
        }
        if self.cap.is_some_and(|c| self.gp.len() >= c) || self.gp.append(ev).is_err() {
            self.skipped += 1;
        }
    }

    fn after_growth(&mut self, ledger: &EvaluationLedger, prior_mean: f64, in_burnin: bool) {
        self.growth_since_update += 1;
        if in_burnin && self.growth_since_update >= self.every {
            self.reoptimize(ledger, prior_mean);
        }
    }
}

fn cached_or_predicted(
    gp: &GpSurrogate,
    ledger: &EvaluationLedger,
    theta: &[f64],
    joint: bool,
) -> Result<Option<SurrogatePrediction>> {
    if let Some(ev) = ledger.get(theta) {
        if !ev.is_finite() {
            return Ok(None);
        }
        return Ok(Some(match (&ev.gradient, joint) {
            (Some(g), true) => SurrogatePrediction::exact_joint(ev.log_likelihood, g.clone()),
            _ => SurrogatePrediction::exact(ev.log_likelihood),
        }));
    }
    if joint {
        gp.predict_joint(theta).map(Some)
    } else {
        gp.predict(theta).map(Some)
    }
}

fn rejected(theta: &[f64], log_alpha: f64) -> IterationRecord {
    IterationRecord {
        theta: theta.to_vec(),
        stage1_log_alpha: log_alpha,
        stage1_accepted: false,
        stage2_log_alpha: None,
        stage2_accepted: None,
        accepted: false,
        full_eval: false,
    }
}

/// Two-stage random-walk MH with a scalar GP surrogate of the
/// log-likelihood.
pub fn run_gp_mh(target: &TargetInstance, config: &SamplerConfig, theta0: &[f64]) -> Result<ChainTrace> {
    config.validate(target.dim(), Algorithm::GpMh)?;
    let lp0 = check_start(target, theta0)?;
    let tally = Tally::new(target);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ledger = init_ledger_with(target, theta0, config, false, &mut rng)?;
    let init = tally.count();
    let mut cur = StateSnapshot {
        theta: theta0.to_vec(),
        exact_ll: ledger.entries()[0].log_likelihood,
        log_prior: lp0,
        exact_grad_ll: None,
    };
    let mut sur = Surrogate::new(&ledger, config, false, cur.exact_ll)?;

    let mut records = Vec::with_capacity(config.n_iters);
    for k in 0..config.n_iters {
        let in_burnin = k < config.n_burnin;
        sur.gp.set_prior_mean(cur.exact_ll);
        let prop = random_walk(&mut rng, &cur.theta, &config.proposal_scales);
        let u1 = uniform(&mut rng);
        let lp_p = target.log_prior(&prop)?;
        if !lp_p.is_finite() {
            records.push(rejected(&cur.theta, f64::NEG_INFINITY));
            continue;
        }
        let Some(pred) = cached_or_predicted(&sur.gp, &ledger, &prop, false)? else {
            records.push(rejected(&cur.theta, f64::NEG_INFINITY));
            continue;
        };
        let s1 = stage1_log_alpha_mh(&cur, &prop, &pred, lp_p, 0.0, u1)?;
        if !s1.accepted {
            records.push(rejected(&cur.theta, s1.log_alpha1_forward));
            continue;
        }

        let u2 = uniform(&mut rng);
        let (ll_p, full_eval) = match ledger.get(&prop) {
            Some(ev) => (ev.log_likelihood, false),
            None => {
                let ev = evaluate(target, &prop, false)?;
                let ll = ev.log_likelihood;
                sur.add(&ev);
                ledger.insert(ev)?;
                (ll, true)
            }
        };
        let la2 = stage2_log_alpha_mh(&cur, ll_p, &s1, lp_p, 0.0)?;
        let accepted = u2.ln() < la2;
        if accepted {
            cur.theta = prop;
            cur.exact_ll = ll_p;
            cur.log_prior = lp_p;
        }
        if full_eval {
            sur.after_growth(&ledger, cur.exact_ll, in_burnin);
        }
        records.push(IterationRecord {
            theta: cur.theta.clone(),
            stage1_log_alpha: s1.log_alpha1_forward,
            stage1_accepted: true,
            stage2_log_alpha: Some(la2),
            stage2_accepted: Some(accepted),
            accepted,
            full_eval,
        });
    }
    Ok(ChainTrace {
        algorithm: Algorithm::GpMh,
        records,
        n_burnin: config.n_burnin,
        theta0: theta0.to_vec(),
        ledger,
        full_evaluations: tally.count(),
        init_evaluations: init,
        final_hyper: Some(sur.gp.hyper().clone()),
        hyper_updates: sur.updates,
        gp_skipped: sur.skipped,
    })
}

/// Two-stage MALA with a joint GP over the log-likelihood and its gradient.
pub fn run_gp_mala(target: &TargetInstance, config: &SamplerConfig, theta0: &[f64]) -> Result<ChainTrace> {
    require_gradient(target)?;
    config.validate(target.dim(), Algorithm::GpMala)?;
    let params = config.mala.as_ref().expect("validated");
    let lp0 = check_start(target, theta0)?;
    let tally = Tally::new(target);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ledger = init_ledger_with(target, theta0, config, true, &mut rng)?;
    let init = tally.count();
    let first = ledger.entries()[0].clone();
    let mut cur = StateSnapshot {
        theta: first.theta,
        exact_ll: first.log_likelihood,
        log_prior: lp0,
        exact_grad_ll: first.gradient,
    };
    let mut glp = target.grad_log_prior(&cur.theta)?;
    let mut sur = Surrogate::new(&ledger, config, true, cur.exact_ll)?;

    let mut records = Vec::with_capacity(config.n_iters);
    for k in 0..config.n_iters {
        let in_burnin = k < config.n_burnin;
        sur.gp.set_prior_mean(cur.exact_ll);
        let grad_k = cur.exact_grad_ll.as_ref().expect("current state carries a gradient");
        let drift = crate::acceptance::mala_drift(&cur.theta, grad_k, &glp, params)?;
        let prop = add(&drift, &langevin_noise(&mut rng, params));
        let u1 = uniform(&mut rng);
        let lp_p = target.log_prior(&prop)?;
        if !lp_p.is_finite() {
            records.push(rejected(&cur.theta, f64::NEG_INFINITY));
            continue;
        }
        let glp_p = target.grad_log_prior(&prop)?;
        let Some(pred) = cached_or_predicted(&sur.gp, &ledger, &prop, true)? else {
            records.push(rejected(&cur.theta, f64::NEG_INFINITY));
            continue;
        };
        let s1 = stage1_log_alpha_mala(&cur, &prop, &pred, (&glp, &glp_p), lp_p, params, u1)?;
        if !s1.accepted {
            records.push(rejected(&cur.theta, s1.log_alpha1_forward));
            continue;
        }

        let u2 = uniform(&mut rng);
        let (ev, full_eval) = match ledger.get(&prop) {
            Some(ev) => (ev.clone(), false),
            None => {
                let ev = evaluate(target, &prop, true)?;
                sur.add(&ev);
                ledger.insert(ev.clone())?;
                (ev, true)
            }
        };
        let proposal = StateSnapshot {
            theta: prop,
            exact_ll: ev.log_likelihood,
            log_prior: lp_p,
            exact_grad_ll: ev.gradient,
        };
        let la2 = if proposal.exact_ll.is_finite() && proposal.exact_grad_ll.is_some() {
            stage2_log_alpha_mala(&cur, &proposal, &s1, (&glp, &glp_p), params)?
        } else {
            f64::NEG_INFINITY
        };
        let accepted = u2.ln() < la2;
        if accepted {
            cur = proposal;
            glp = glp_p;
        }
        if full_eval {
            sur.after_growth(&ledger, cur.exact_ll, in_burnin);
        }
        records.push(IterationRecord {
            theta: cur.theta.clone(),
            stage1_log_alpha: s1.log_alpha1_forward,
            stage1_accepted: true,
            stage2_log_alpha: Some(la2),
            stage2_accepted: Some(accepted),
            accepted,
            full_eval,
        });
    }
    Ok(ChainTrace {
        algorithm: Algorithm::GpMala,
        records,
        n_burnin: config.n_burnin,
        theta0: theta0.to_vec(),
        ledger,
        full_evaluations: tally.count(),
        init_evaluations: init,
        final_hyper: Some(sur.gp.hyper().clone()),
        hyper_updates: sur.updates,
        gp_skipped: sur.skipped,
    })
}

/// Starting point drawn uniformly within the target's start half-widths
/// of the true parameters, redrawn until it lies in the prior support.
pub fn draw_start(target: &TargetInstance, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let half = &target.tuning().start_half_width;
    for _ in 0..1000 {
        let theta: Vec<f64> = target
            .true_params()
            .iter()
            .zip(half)
            .map(|(t, h)| t + h * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        if target.log_prior(&theta)?.is_finite() {
            return Ok(theta);
        }
    }
    Err(Error::Initialization(
        "could not draw a starting point inside the prior support".into(),
    ))
}

/// Default sampler configuration for a target: its tuned proposal scales
/// and Langevin parameters. The joint surrogate is capped at
/// [`JOINT_GP_MAX_POINTS`] training points.
pub fn default_config(target: &TargetInstance, algorithm: Algorithm, seed: u64) -> Result<SamplerConfig> {
    let t = target.tuning();
    let mut c = SamplerConfig::new(t.proposal_scales.clone(), seed);
    c.mala = Some(MalaProposalParams::diagonal(t.mala_delta, &t.mala_precond)?);
    if algorithm == Algorithm::GpMala {
        c.gp_max_points = Some(JOINT_GP_MAX_POINTS);
    }
    Ok(c)
}
