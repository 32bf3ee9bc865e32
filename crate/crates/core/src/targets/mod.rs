//! Benchmark posteriors with seeded synthetic data.
//!
//! A [`TargetInstance`] wraps a [`Model`] with an evaluation counter, which
//! is the cost metric: every exact likelihood call (value, or value plus
//! gradient) counts as one unit.

mod banana;
mod gpc;
mod logistic;
mod michaelis;
mod normal;
mod sir;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};

pub use gpc::{laplace_marginal_ll, LaplaceMode};
pub use sir::{sir_solve, sir_solve_with_step, SirTrajectory, SIR_MAX_STEP};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Names accepted by [`make_target`].
pub const TARGET_NAMES: [&str; 6] = ["t1", "t2", "t3", "t4", "t5", "normal"];

/// Tabular view of a target's synthetic data, for export.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Likelihood and prior of one posterior. Implementations are immutable
/// after construction, so concurrent evaluation is safe.
pub trait Model: Send + Sync {
    fn dim(&self) -> usize;

    fn param_names(&self) -> Vec<String>;

    /// Log prior density; `-inf` outside the support.
    fn log_prior(&self, theta: &[f64]) -> f64;

    /// Gradient of the log prior. Only called inside the support.
    fn grad_log_prior(&self, theta: &[f64]) -> Vec<f64>;

    /// Exact log-likelihood; `-inf` outside the parameter domain.
    fn log_likelihood(&self, theta: &[f64]) -> f64;

    /// Log-likelihood together with its gradient, for models that have one.
    fn log_likelihood_and_gradient(&self, _theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        None
    }

    fn has_gradient(&self) -> bool {
        false
    }

    fn dataset(&self) -> Dataset;
}

/// Per-target proposal defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTuning {
    /// Standard deviations of the diagonal random-walk proposal.
    pub proposal_scales: Vec<f64>,
    /// Langevin step size.
    pub mala_delta: f64,
    /// Diagonal of the Langevin preconditioner.
    pub mala_precond: Vec<f64>,
    /// Starting points are drawn uniformly within this half-width of the
    /// true parameters.
    pub start_half_width: Vec<f64>,
}

/// Options for [`make_target`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetOptions {
    /// Dataset size for the targets that have one (t3, t5).
    pub scale: Option<usize>,
    /// Generate observations without noise where the model has an additive
    /// or multiplicative noise term (t2, t4).
    pub noise_free: bool,
}

/// A posterior with synthetic data and a thread-safe evaluation counter.
pub struct TargetInstance {
    name: String,
    true_params: Vec<f64>,
    tuning: TargetTuning,
    model: Box<dyn Model>,
    evaluations: AtomicU64,
}

impl core::fmt::Debug for TargetInstance {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("TargetInstance")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("true_params", &self.true_params)
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

impl TargetInstance {
    pub fn new(
        name: impl Into<String>,
        true_params: Vec<f64>,
        tuning: TargetTuning,
        model: Box<dyn Model>,
    ) -> Result<Self> {
        let d = model.dim();
        check_dim(d, true_params.len())?;
        check_dim(d, tuning.proposal_scales.len())?;
        check_dim(d, tuning.mala_precond.len())?;
        check_dim(d, tuning.start_half_width.len())?;
        Ok(Self {
            name: name.into(),
            true_params,
            tuning,
            model,
            evaluations: AtomicU64::new(0),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn true_params(&self) -> &[f64] {
        &self.true_params
    }

    pub fn tuning(&self) -> &TargetTuning {
        &self.tuning
    }

    pub fn param_names(&self) -> Vec<String> {
        self.model.param_names()
    }

    pub fn has_gradient(&self) -> bool {
        self.model.has_gradient()
    }

    pub fn dataset(&self) -> Dataset {
        self.model.dataset()
    }

    /// Number of exact likelihood evaluations so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        check_dim(self.dim(), theta.len())?;
        if theta.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("parameter vector is not finite".into()))
        }
    }

    pub fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.model.log_prior(theta))
    }

    /// Gradient of the log prior; a domain error outside the support.
    pub fn grad_log_prior(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        if self.model.log_prior(theta) == f64::NEG_INFINITY {
            return Err(Error::Domain);
        }
        Ok(self.model.grad_log_prior(theta))
    }

    /// Exact log-likelihood. Counts one evaluation, including when the
    /// result is the `-inf` sentinel.
    pub fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let ll = self.model.log_likelihood(theta);
        if ll.is_nan() {
            return Err(Error::Numeric(format!("{} log-likelihood is NaN", self.name)));
        }
        Ok(ll)
    }

    /// Exact log-likelihood and gradient in one call, counted as one
    /// evaluation. Outside the domain the value is `-inf` and no gradient is
    /// returned.
    pub fn log_likelihood_and_gradient(&self, theta: &[f64]) -> Result<(f64, Option<Vec<f64>>)> {
        self.check_theta(theta)?;
        if !self.has_gradient() {
            return Err(self.missing_gradient());
        }
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        match self.model.log_likelihood_and_gradient(theta) {
            Some((ll, g)) if ll.is_finite() && g.iter().all(|v| v.is_finite()) => Ok((ll, Some(g))),
            Some((ll, _)) if ll == f64::NEG_INFINITY => Ok((ll, None)),
            Some(_) => Err(Error::Numeric(format!(
                "{} gradient evaluation is not finite",
                self.name
            ))),
            None => Err(self.missing_gradient()),
        }
    }

    /// Exact gradient of the log-likelihood (one evaluation).
    pub fn grad_log_likelihood(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match self.log_likelihood_and_gradient(theta)? {
            (_, Some(g)) => Ok(g),
            (_, None) => Err(Error::Domain),
        }
    }

    fn missing_gradient(&self) -> Error {
        Error::MissingCapability {
            target: self.name.clone(),
            capability: "gradient",
        }
    }
}

/// Builds a named target with data generated from `seed`.
///
/// `normal` is an isotropic standard normal (dimension from `scale`,
/// default 1) with a flat prior, used for sampler validation.
pub fn make_target(name: &str, seed: u64, options: TargetOptions) -> Result<TargetInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "t1" => banana::build(&mut rng),
        "t2" => michaelis::build(&mut rng, options.noise_free),
        "t3" => gpc::build(&mut rng, options.scale.unwrap_or(200)),
        "t4" => sir::build(&mut rng, options.noise_free),
        "t5" => logistic::build(&mut rng, options.scale.unwrap_or(200)),
        "normal" => normal::build(options.scale.unwrap_or(1)),
        other => Err(Error::InvalidArgument(format!(
            "unknown target '{other}' (expected one of {})",
            TARGET_NAMES.join(", ")
        ))),
    }
}

pub(crate) fn names(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|i| format!("{prefix}{i}")).collect()
}

pub(crate) fn labels(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// `ln N(x; mean, sd²)`.
pub(crate) fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * LN_2PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name() {
        assert!(matches!(
            make_target("t9", 0, TargetOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn every_target_is_finite_at_truth() {
        for name in TARGET_NAMES {
            let t = make_target(name, 7, TargetOptions::default()).unwrap();
            let p = t.true_params().to_vec();
            assert!(t.log_prior(&p).unwrap().is_finite(), "{name}");
            assert!(t.log_likelihood(&p).unwrap().is_finite(), "{name}");
            assert_eq!(t.evaluations(), 1);
        }
    }

    #[test]
    fn same_seed_same_data() {
        for name in TARGET_NAMES {
            let a = make_target(name, 11, TargetOptions::default()).unwrap();
            let b = make_target(name, 11, TargetOptions::default()).unwrap();
            assert_eq!(a.dataset(), b.dataset(), "{name}");
            assert_eq!(a.true_params(), b.true_params());
        }
    }

    #[test]
    fn gradient_capability() {
        let t4 = make_target("t4", 1, TargetOptions::default()).unwrap();
        let p = t4.true_params().to_vec();
        assert!(matches!(
            t4.grad_log_likelihood(&p),
            Err(Error::MissingCapability { .. })
        ));
        let t5 = make_target("t5", 1, TargetOptions::default()).unwrap();
        let p = t5.true_params().to_vec();
        assert_eq!(t5.grad_log_likelihood(&p).unwrap().len(), 5);
        assert_eq!(t5.evaluations(), 1);
    }

    #[test]
    fn normal_log_pdf_values() {
        assert!((normal_log_pdf(0.0, 0.0, 1.0) + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!((normal_log_pdf(5.0, 3.0, 2.0) - (-0.5 - 2f64.ln() - 0.5 * LN_2PI)).abs() < 1e-15);
    }
}
