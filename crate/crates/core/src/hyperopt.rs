//! Burn-in hyperparameter fitting: deterministic Nelder–Mead on the log
//! marginal likelihood over `[ln ℓ₁, …, ln ℓ_d, ln σ²]`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::gp::log_marginal_likelihood_points;
use crate::kernel::KernelHyper;
use crate::ledger::EvaluationLedger;

/// Default half-width of the search box around the starting point, in
/// natural-log units (a factor of 1000 either way).
pub const DEFAULT_LOG_HALF_WIDTH: f64 = 6.907_755_278_982_137;

/// Initial simplex edge in log units.
const SIMPLEX_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperOptWarning {
    /// Every candidate, including the starting point, was ill-conditioned.
    AllCandidatesFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperOptOutcome {
    pub hyper: KernelHyper,
    /// Log marginal likelihood at `hyper` (−∞ if it could not be evaluated).
    pub log_marginal_likelihood: f64,
    pub evaluations: usize,
    pub warning: Option<HyperOptWarning>,
}

/// Box constraints in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LogBounds {
    /// `start ± half_width` in every coordinate.
    pub fn around(start: &[f64], half_width: f64) -> Self {
        Self {
            lower: start.iter().map(|v| v - half_width).collect(),
            upper: start.iter().map(|v| v + half_width).collect(),
        }
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Which observations enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitData {
    /// Fit the joint value and gradient likelihood.
    pub gradient: bool,
    /// Use only the most recent finite entries.
    pub max_points: Option<usize>,
}

/// Maximize the log marginal likelihood from `init` using at most `budget`
/// objective evaluations. The result is never worse than `init`.
pub fn optimize_hypers(
    ledger: &EvaluationLedger,
    init: &KernelHyper,
    prior_mean: f64,
    budget: usize,
) -> Result<HyperOptOutcome> {
    let bounds = LogBounds::around(&init.to_log_params(), DEFAULT_LOG_HALF_WIDTH);
    optimize_hypers_bounded(ledger, init, prior_mean, budget, &bounds, FitData::default())
}

pub fn optimize_hypers_bounded(
    ledger: &EvaluationLedger,
    init: &KernelHyper,
    prior_mean: f64,
    budget: usize,
    bounds: &LogBounds,
    data: FitData,
) -> Result<HyperOptOutcome> {
    let finite: Vec<&crate::ledger::Evaluation> = ledger
        .iter()
        .filter(|e| e.log_likelihood.is_finite() && (!data.gradient || e.gradient.is_some()))
        .collect();
    let skip = data.max_points.map_or(0, |m| finite.len().saturating_sub(m));
    let used = &finite[skip..];
    let inputs: Vec<Vec<f64>> = used.iter().map(|e| e.theta.clone()).collect();
    let values: Vec<f64> = used.iter().map(|e| e.log_likelihood).collect();
    let gradients: Option<Vec<Vec<f64>>> = data
        .gradient
        .then(|| used.iter().filter_map(|e| e.gradient.clone()).collect());
    if inputs.len() < 3 {
        return Err(Error::InvalidArgument(
            "hyperparameter optimization needs at least 3 finite ledger entries".into(),
        ));
    }
    let dim = init.dim() + 1;
    if bounds.lower.len() != dim || bounds.upper.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bounds.lower.len(),
        });
    }
    let rel_jitter = init.jitter() / init.signal_variance();
    let objective = |x: &[f64]| -> f64 {
        KernelHyper::from_log_params(x, rel_jitter)
            .and_then(|h| log_marginal_likelihood_points(&inputs, &values, gradients.as_deref(), &h, prior_mean))
            .map_or(f64::INFINITY, |v| -v)
    };

    let x0 = init.to_log_params();
    let f0 = objective(&x0);
    if budget == 0 {
        return Ok(HyperOptOutcome {
            hyper: init.clone(),
            log_marginal_likelihood: -f0,
            evaluations: 0,
            warning: None,
        });
    }

    let mut evals = 1usize;
    let (x_best, f_best, all_failed) = nelder_mead(&objective, &x0, f0, budget, bounds, &mut evals);

    if f_best < f0 {
        let hyper = KernelHyper::from_log_params(&x_best, rel_jitter)?;
        Ok(HyperOptOutcome {
            hyper,
            log_marginal_likelihood: -f_best,
            evaluations: evals,
            warning: None,
        })
    } else {
        Ok(HyperOptOutcome {
            hyper: init.clone(),
            log_marginal_likelihood: -f0,
            evaluations: evals,
            warning: all_failed.then_some(HyperOptWarning::AllCandidatesFailed),
        })
    }
}

/// Minimizes `f` starting from `x0` (with known value `f0`). Returns the best
/// point, its value and whether every evaluation was non-finite.
fn nelder_mead<F>(
    f: &F,
    x0: &[f64],
    f0: f64,
    budget: usize,
    bounds: &LogBounds,
    evals: &mut usize,
) -> (Vec<f64>, f64, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut all_failed = !f0.is_finite();
    let mut eval = |x: &mut Vec<f64>, evals: &mut usize| -> f64 {
        bounds.project(x);
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            all_failed = false;
        }
        v
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        if *evals >= budget {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += SIMPLEX_STEP;
        if x[i] > bounds.upper[i] {
            x[i] = x0[i] - SIMPLEX_STEP;
        }
        let v = eval(&mut x, evals);
        simplex.push((x, v));
    }

    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);

    while simplex.len() == n + 1 && *evals < budget {
        simplex.sort_by(by_value);
        let worst = simplex[n].clone();
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

        let mut xr = along(1.0);
        let fr = eval(&mut xr, evals);
        if fr < simplex[0].1 {
            if *evals >= budget {
                simplex[n] = (xr, fr);
                break;
            }
            let mut xe = along(2.0);
            let fe = eval(&mut xe, evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        if *evals >= budget {
            break;
        }
        let (mut xc, outside) = if fr < worst.1 {
            (along(0.5), true)
        } else {
            (along(-0.5), false)
        };
        let fc = eval(&mut xc, evals);
        if (outside && fc <= fr) || (!outside && fc < worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if *evals >= budget {
                break;
            }
            let mut x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            let v = eval(&mut x, evals);
            *vertex = (x, v);
        }
    }

    let (x, v) = simplex.into_iter().min_by(by_value).unwrap_or((x0.to_vec(), f0));
    (x, v, all_failed)
}
