//! Hyperparameter posterior of a Bernoulli-logit GP classifier with an ARD
//! squared-exponential kernel, `θ = (ln ℓ₁, ln ℓ₂, ln σ²)`.
//!
//! The marginal likelihood is the Laplace approximation found by Newton
//! iteration on the latent function. Priors: `ln ℓᵢ ~ N(0, 10)` and
//! `ln σ ~ N(0, 10)` (variances).

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng;
use rand_distr::StandardNormal;

use super::logistic::{sigmoid, softplus};
use super::{labels, normal_log_pdf, Dataset, Model, TargetInstance, TargetTuning};
use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-8;
const NEWTON_MAX_ITERS: usize = 50;
const MAX_HALVINGS: usize = 20;
const TRUE_SIGNAL_VARIANCE: f64 = 5.0;

/// Result of the Laplace approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceMode {
    /// Approximate log marginal likelihood; `-inf` if Newton failed.
    pub log_marginal: f64,
    /// Posterior mode of the latent function.
    pub latent: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LaplaceMode {
    fn failed(n: usize, iterations: usize) -> Self {
        Self {
            log_marginal: f64::NEG_INFINITY,
            latent: vec![0.0; n],
            iterations,
            converged: false,
        }
    }
}

/// SE kernel matrix on 2-D inputs with `θ = (ln ℓ₁, ln ℓ₂, ln σ²)`.
pub(crate) fn gpc_kernel(x: &[[f64; 2]], hyper_theta: &[f64]) -> DMatrix<f64> {
    let inv1 = (-2.0 * hyper_theta[0]).exp();
    let inv2 = (-2.0 * hyper_theta[1]).exp();
    let sf2 = hyper_theta[2].exp();
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d1 = x[i][0] - x[j][0];
        let d2 = x[i][1] - x[j][1];
        sf2 * (-0.5 * (d1 * d1 * inv1 + d2 * d2 * inv2)).exp()
    })
}

fn log_lik(y: &[f64], f: &DVector<f64>) -> f64 {
    y.iter().zip(f.iter()).map(|(y, f)| -softplus(-y * f)).sum()
}

/// Laplace-approximate log marginal likelihood for labels `y ∈ {−1, +1}`.
pub fn laplace_marginal_ll(x: &[[f64; 2]], y: &[f64], hyper_theta: &[f64]) -> Result<LaplaceMode> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if hyper_theta.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: hyper_theta.len(),
        });
    }
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(Error::InvalidArgument("labels must be -1 or +1".into()));
    }
    let n = x.len();
    let k = gpc_kernel(x, hyper_theta);
    if k.iter().any(|v| !v.is_finite()) {
        return Ok(LaplaceMode::failed(n, 0));
    }
    let target: DVector<f64> = DVector::from_iterator(n, y.iter().map(|v| 0.5 * (v + 1.0)));

    // Returns (B's Cholesky factor, sqrt W, new a) for one Newton step from f.
    let newton = |f: &DVector<f64>| {
        let pi = f.map(sigmoid);
        let w = pi.map(|p| p * (1.0 - p));
        let sw = w.map(f64::sqrt);
        let b_mat = DMatrix::from_fn(n, n, |i, j| sw[i] * k[(i, j)] * sw[j] + if i == j { 1.0 } else { 0.0 });
        let chol = b_mat.cholesky()?;
        let b = w.component_mul(f) + (&target - &pi);
        let c = sw.component_mul(&(&k * &b));
        let v = chol.solve(&c);
        let a = b - sw.component_mul(&v);
        Some((chol, a))
    };

    let mut a = DVector::zeros(n);
    let mut f = DVector::zeros(n);
    let mut psi = log_lik(y, &f);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITERS {
        iterations += 1;
        let Some((_, a_new)) = newton(&f) else {
            return Ok(LaplaceMode::failed(n, iterations));
        };
        let mut step = a_new - &a;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let a_try = &a + &step;
            let f_try = &k * &a_try;
            let psi_try = -0.5 * a_try.dot(&f_try) + log_lik(y, &f_try);
            if psi_try.is_finite() && psi_try >= psi - NEWTON_TOL {
                accepted = Some((a_try, f_try, psi_try));
                break;
            }
            step *= 0.5;
        }
        let Some((a_next, f_next, psi_next)) = accepted else {
            return Ok(LaplaceMode::failed(n, iterations));
        };
        let delta = (psi_next - psi).abs();
        a = a_next;
        f = f_next;
        psi = psi_next;
        if delta < NEWTON_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Ok(LaplaceMode::failed(n, iterations));
    }
    let Some((chol, _)) = newton(&f) else {
        return Ok(LaplaceMode::failed(n, iterations));
    };
    let half_log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let log_marginal = psi - half_log_det;
    if !log_marginal.is_finite() {
        return Ok(LaplaceMode::failed(n, iterations));
    }
    Ok(LaplaceMode {
        log_marginal,
        latent: f.iter().copied().collect(),
        iterations,
        converged,
    })
}

struct GpClassifier {
    x: Vec<[f64; 2]>,
    y: Vec<f64>,
}

impl Model for GpClassifier {
    fn dim(&self) -> usize {
        3
    }

    fn param_names(&self) -> Vec<alloc::string::String> {
        labels(&["log_l1", "log_l2", "log_sf2"])
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let sd = 10f64.sqrt();
        normal_log_pdf(theta[0], 0.0, sd) + normal_log_pdf(theta[1], 0.0, sd) + normal_log_pdf(0.5 * theta[2], 0.0, sd)
            - core::f64::consts::LN_2
    }

    fn grad_log_prior(&self, theta: &[f64]) -> Vec<f64> {
        vec![-theta[0] / 10.0, -theta[1] / 10.0, -theta[2] / 40.0]
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        laplace_marginal_ll(&self.x, &self.y, theta)
            .map(|m| m.log_marginal)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn dataset(&self) -> Dataset {
        Dataset {
            columns: labels(&["x1", "x2", "y"]),
            rows: self.x.iter().zip(&self.y).map(|(x, y)| vec![x[0], x[1], *y]).collect(),
        }
    }
}

pub(super) fn build<R: Rng>(rng: &mut R, n: usize) -> Result<TargetInstance> {
    if n == 0 {
        return Err(Error::InvalidArgument("t3 needs at least one observation".into()));
    }
    let l1: f64 = rng.random_range(0.1..1.0);
    let l2: f64 = rng.random_range(0.1..1.0);
    let truth = vec![l1.ln(), l2.ln(), TRUE_SIGNAL_VARIANCE.ln()];
    let x: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
        .collect();
    let mut k = gpc_kernel(&x, &truth);
    for i in 0..n {
        k[(i, i)] += 1e-8 * TRUE_SIGNAL_VARIANCE;
    }
    let chol = k
        .cholesky()
        .ok_or_else(|| Error::Numeric("latent covariance not positive definite".into()))?;
    let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let f = chol.l() * z;
    let y = f
        .iter()
        .map(|&fi| if rng.random::<f64>() < sigmoid(fi) { 1.0 } else { -1.0 })
        .collect();
    let tuning = TargetTuning {
        proposal_scales: vec![0.6, 0.5, 0.8],
        mala_delta: 0.5,
        mala_precond: vec![0.09, 0.09, 0.25],
        start_half_width: vec![0.3, 0.3, 0.5],
    };
    TargetInstance::new("t3", truth, tuning, Box::new(GpClassifier { x, y }))
}
