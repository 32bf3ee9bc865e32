//! Acceptance probabilities for the two-stage samplers.
//!
//! Stage 1 uses the surrogate with the GP marginalized out: for MH the
//! proposal's likelihood enters through the lognormal mean `exp(μ + k/2)`;
//! for MALA the expectation also covers the surrogate gradient inside the
//! Langevin proposal density. Stage 2 corrects with the exact
//! log-likelihood. Everything is computed in the log domain.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{check_dim, Error, Result};
use crate::gp::SurrogatePrediction;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative tolerance used when cross-checking the two stage-2 routes.
const STAGE2_AGREEMENT_TOL: f64 = 1e-9;

/// `ln E[exp(X)]` for `X ~ Normal(mean, variance)`, i.e. `mean + variance / 2`.
pub fn lognormal_mean_log(mean: f64, variance: f64) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variance must be non-negative, got {variance}"
        )));
    }
    Ok(mean + 0.5 * variance)
}

/// Exact quantities at the current chain state (always served from the
/// ledger, never from the surrogate).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub theta: Vec<f64>,
    pub exact_ll: f64,
    pub log_prior: f64,
    pub exact_grad_ll: Option<Vec<f64>>,
}

/// Outcome of the surrogate-based first stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Decision {
    /// `min(0, log_ratio_r)`.
    pub log_alpha1_forward: f64,
    /// Unclipped log of the marginalized stage-1 ratio.
    pub log_ratio_r: f64,
    pub accepted: bool,
    /// The (pre-update) surrogate prediction used for the decision.
    pub prediction: SurrogatePrediction,
    /// Log of the ratio's numerator (proposal side, marginalized).
    pub log_numerator: f64,
    /// Log of the ratio's denominator (current side, exact).
    pub log_denominator: f64,
}

impl Stage1Decision {
    /// Reverse-move stage-1 probability `α₁(θ*, θ⁽ᵏ⁾)` in log form, using the
    /// same cached quantities.
    pub fn log_alpha1_reverse(&self) -> f64 {
        (-self.log_ratio_r).min(0.0)
    }
}

fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{name} is not finite ({v})")))
    }
}

/// `-inf` is a legitimate log-prior (outside the support); NaN and `+inf` are not.
fn ensure_log_density(name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v == f64::INFINITY {
        Err(Error::Numeric(format!("{name} is not a valid log-density ({v})")))
    } else {
        Ok(())
    }
}

fn accept(log_alpha: f64, uniform: f64) -> Result<bool> {
    if !(uniform > 0.0 && uniform < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "uniform draw must lie in (0, 1), got {uniform}"
        )));
    }
    Ok(uniform.ln() < log_alpha)
}

fn finish_stage1(
    log_numerator: f64,
    log_denominator: f64,
    prediction: SurrogatePrediction,
    uniform: f64,
) -> Result<Stage1Decision> {
    let log_ratio_r = log_numerator - log_denominator;
    if log_ratio_r.is_nan() {
        return Err(Error::Numeric(String::from("stage-1 log ratio is NaN")));
    }
    let log_alpha1_forward = log_ratio_r.min(0.0);
    Ok(Stage1Decision {
        log_alpha1_forward,
        log_ratio_r,
        accepted: accept(log_alpha1_forward, uniform)?,
        prediction,
        log_numerator,
        log_denominator,
    })
}

/// Marginalized stage-1 decision for a Metropolis–Hastings proposal.
///
/// `log_q_ratio = ln q(θ⁽ᵏ⁾ | θ*) − ln q(θ* | θ⁽ᵏ⁾)` (zero for a symmetric
/// random walk). The move is accepted when `ln uniform < log α₁`.
pub fn stage1_log_alpha_mh(
    current: &StateSnapshot,
    proposal_theta: &[f64],
    pred: &SurrogatePrediction,
    proposal_log_prior: f64,
    log_q_ratio: f64,
    uniform: f64,
) -> Result<Stage1Decision> {
    check_dim(current.theta.len(), proposal_theta.len())?;
    ensure_finite("current log-likelihood", current.exact_ll)?;
    ensure_finite("current log-prior", current.log_prior)?;
    ensure_finite("surrogate mean", pred.mean)?;
    ensure_finite("surrogate variance", pred.variance)?;
    ensure_finite("proposal log ratio", log_q_ratio)?;
    ensure_log_density("proposal log-prior", proposal_log_prior)?;
    let lognormal = lognormal_mean_log(pred.mean, pred.variance)?;
    let num = lognormal + proposal_log_prior + log_q_ratio;
    let den = current.exact_ll + current.log_prior;
    finish_stage1(num, den, pred.clone(), uniform)
}

/// Stage-2 ratio evaluated literally: exact likelihoods, and the stage-1
/// probabilities of both the forward and the reverse move taken from the
/// cached (pre-update) decision.
pub fn stage2_log_alpha_mh_direct(
    current: &StateSnapshot,
    proposal_exact_ll: f64,
    stage1: &Stage1Decision,
    proposal_log_prior: f64,
    log_q_ratio: f64,
) -> f64 {
    let num = proposal_exact_ll + proposal_log_prior + log_q_ratio + stage1.log_alpha1_reverse();
    let den = current.exact_ll + current.log_prior + stage1.log_alpha1_forward;
    (num - den).min(0.0)
}

/// Simplified stage-2 ratio: the exact log-likelihood against the
/// surrogate's lognormal-mean term.
pub fn stage2_log_alpha_mh_simplified(proposal_exact_ll: f64, stage1: &Stage1Decision) -> f64 {
    let p = &stage1.prediction;
    (proposal_exact_ll - p.mean - 0.5 * p.variance).min(0.0)
}

fn check_agreement(direct: f64, simplified: f64, scale: f64) -> Result<()> {
    if direct == simplified {
        return Ok(());
    }
    let tol = STAGE2_AGREEMENT_TOL * (1.0 + scale);
    if (direct - simplified).abs() <= tol {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "stage-2 routes disagree: direct {direct}, simplified {simplified}"
        )))
    }
}

/// Exact second-stage acceptance `min(0, log α₂)` for MH. Both routes are
/// evaluated and must agree.
pub fn stage2_log_alpha_mh(
    current: &StateSnapshot,
    proposal_exact_ll: f64,
    stage1: &Stage1Decision,
    proposal_log_prior: f64,
    log_q_ratio: f64,
) -> Result<f64> {
    if !stage1.accepted {
        return Err(Error::ContractViolation("stage 2 evaluated after a stage-1 rejection"));
    }
    ensure_log_density("proposal log-likelihood", proposal_exact_ll)?;
    if proposal_exact_ll == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let direct = stage2_log_alpha_mh_direct(current, proposal_exact_ll, stage1, proposal_log_prior, log_q_ratio);
    let simplified = stage2_log_alpha_mh_simplified(proposal_exact_ll, stage1);
    let scale = [
        proposal_exact_ll,
        current.exact_ll,
        proposal_log_prior,
        current.log_prior,
        stage1.log_numerator,
        stage1.log_denominator,
    ]
    .iter()
    .fold(0.0f64, |m, v| m.max(v.abs()));
    check_agreement(direct, simplified, scale)?;
    Ok(direct)
}

/// Langevin proposal parameters: step size δ and preconditioner Λ. The
/// proposal is `Normal(θ + ½δΛ∇log π(θ), δΛ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MalaProposalParams {
    delta: f64,
    precond: DMatrix<f64>,
    precond_sqrt: DMatrix<f64>,
    precond_inv: DMatrix<f64>,
    log_det_precond: f64,
}

impl MalaProposalParams {
    pub fn new(delta: f64, precond: DMatrix<f64>) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {delta}"
            )));
        }
        if !precond.is_square() || precond.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "preconditioner must be a non-empty square matrix".into(),
            ));
        }
        let asym = (&precond - precond.transpose()).amax();
        if asym > 1e-12 * precond.amax().max(1.0) {
            return Err(Error::InvalidArgument("preconditioner must be symmetric".into()));
        }
        let chol = precond
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("preconditioner is not positive definite".into()))?;
        let precond_sqrt = chol.l();
        let log_det_precond = 2.0 * precond_sqrt.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let precond_inv = chol.inverse();
        Ok(Self {
            delta,
            precond,
            precond_sqrt,
            precond_inv,
            log_det_precond,
        })
    }

    /// Diagonal preconditioner.
    pub fn diagonal(delta: f64, diag: &[f64]) -> Result<Self> {
        Self::new(delta, DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.precond.nrows()
    }

    pub fn precond(&self) -> &DMatrix<f64> {
        &self.precond
    }

    /// Lower-triangular square root `S` with `S Sᵀ = Λ`.
    pub fn precond_sqrt(&self) -> &DMatrix<f64> {
        &self.precond_sqrt
    }

    pub fn precond_inv(&self) -> &DMatrix<f64> {
        &self.precond_inv
    }

    /// `√δ · S z`, the random part of a Langevin step.
    pub fn noise(&self, z: &[f64]) -> Vec<f64> {
        let z = DVector::from_column_slice(z);
        let v = &self.precond_sqrt * z * self.delta.sqrt();
        v.iter().copied().collect()
    }

    /// `ln Normal(x; mean, δΛ)`.
    pub fn log_density(&self, x: &[f64], mean: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), mean.len())?;
        let r = DVector::from_iterator(self.dim(), x.iter().zip(mean).map(|(a, b)| a - b));
        let quad = (r.transpose() * &self.precond_inv * &r)[(0, 0)];
        let d = self.dim() as f64;
        Ok(-0.5 * d * LN_2PI - 0.5 * (d * self.delta.ln() + self.log_det_precond) - 0.5 * quad / self.delta)
    }

    fn apply_precond(&self, v: &[f64]) -> DVector<f64> {
        &self.precond * DVector::from_column_slice(v)
    }
}

/// Langevin drift `θ + ½δΛ(∇LL + ∇log p)`.
pub fn mala_drift(
    theta: &[f64],
    grad_ll: &[f64],
    grad_log_prior: &[f64],
    params: &MalaProposalParams,
) -> Result<Vec<f64>> {
    check_dim(params.dim(), theta.len())?;
    check_dim(params.dim(), grad_ll.len())?;
    check_dim(params.dim(), grad_log_prior.len())?;
    let g: Vec<f64> = grad_ll.iter().zip(grad_log_prior).map(|(a, b)| a + b).collect();
    let step = params.apply_precond(&g) * (0.5 * params.delta);
    Ok(theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect())
}

/// `ln E[exp(w + uᵀg − ½ gᵀSg)]` for `g ~ Normal(m, K)` with `K`, `S`
/// symmetric positive semi-definite.
pub fn gaussian_quadratic_expectation(m: &[f64], k: &DMatrix<f64>, w: f64, u: &[f64], s: &DMatrix<f64>) -> Result<f64> {
    let n = m.len();
    check_dim(n, u.len())?;
    for mat in [k, s] {
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mat.nrows(),
            });
        }
    }
    let mv = DVector::from_column_slice(m);
    let uv = DVector::from_column_slice(u);
    let a = DMatrix::identity(n, n) + k * s;
    let lu = a.lu();
    let det = lu.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Numeric(format!(
            "I + K·S is singular or indefinite (det = {det})"
        )));
    }
    let x = lu
        .solve(k)
        .ok_or_else(|| Error::Numeric(String::from("I + K·S is singular")))?;
    let sm = s * &mv;
    let b = &uv - &sm;
    let value = w + uv.dot(&mv) - 0.5 * mv.dot(&sm) + 0.5 * b.dot(&(&x * &b)) - 0.5 * det.ln();
    if value.is_nan() {
        return Err(Error::Numeric(String::from("quadratic expectation is NaN")));
    }
    Ok(value)
}

/// How the GP is marginalized out of the MALA stage-1 numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalaMarginalization {
    /// Completion of the square over the full Gaussian quadratic form.
    GeneralQuadratic,
    /// The `V`-vector closed form taken literally. It drops the random part of
    /// the quadratic drift term and fails the Monte-Carlo check; kept only
    /// for comparison.
    PrintedClosedForm,
}

/// Marginalization used by the samplers.
pub const SHIPPED_MARGINALIZATION: MalaMarginalization = MalaMarginalization::GeneralQuadratic;

/// `ln E_GP[ exp(f(θ*)) · q(θ′ | θ* + ½δΛ∇f(θ*) + ½δΛ∇log p(θ*)) ]` where
/// `(f, ∇f)(θ*)` follows the joint surrogate prediction `pred`.
pub fn mala_log_expectation(
    theta_to: &[f64],
    theta_from: &[f64],
    pred: &SurrogatePrediction,
    grad_log_prior_from: &[f64],
    params: &MalaProposalParams,
    method: MalaMarginalization,
) -> Result<f64> {
    let d = params.dim();
    check_dim(d, theta_to.len())?;
    check_dim(d, theta_from.len())?;
    check_dim(d, grad_log_prior_from.len())?;
    let (mu_grad, cov) = match (&pred.grad_mean, &pred.joint_cov) {
        (Some(g), Some(c)) => (g, c),
        _ => return Err(Error::ModeMismatch("joint (value and gradient)")),
    };
    check_dim(d, mu_grad.len())?;
    check_dim(d + 1, cov.nrows())?;
    ensure_finite("surrogate mean", pred.mean)?;

    let delta = params.delta;
    let prior_step = params.apply_precond(grad_log_prior_from) * (0.5 * delta);
    let base_mean: Vec<f64> = theta_from.iter().zip(prior_step.iter()).map(|(t, s)| t + s).collect();
    let w = params.log_density(theta_to, &base_mean)?;
    let a: Vec<f64> = theta_to.iter().zip(&base_mean).map(|(t, b)| t - b).collect();

    match method {
        MalaMarginalization::GeneralQuadratic => {
            let mut m = Vec::with_capacity(d + 1);
            m.push(pred.mean);
            m.extend_from_slice(mu_grad);
            let mut u = vec![1.0];
            u.extend(a.iter().map(|v| 0.5 * v));
            let mut s = DMatrix::zeros(d + 1, d + 1);
            s.view_mut((1, 1), (d, d))
                .copy_from(&(params.precond() * (0.25 * delta)));
            gaussian_quadratic_expectation(&m, cov, w, &u, &s)
        }
        MalaMarginalization::PrintedClosedForm => {
            let lam_mu = params.apply_precond(mu_grad);
            let inner = DVector::from_iterator(d, a.iter().zip(lam_mu.iter()).map(|(a, l)| a - 0.25 * delta * l));
            let tail = &params.precond_inv * inner * (0.5 * delta);
            let mut v = DVector::zeros(d + 1);
            v[0] = 1.0;
            v.rows_mut(1, d).copy_from(&tail);
            let mut mean_vec = DVector::zeros(d + 1);
            mean_vec[0] = pred.mean;
            mean_vec.rows_mut(1, d).copy_from(&lam_mu);
            let mu_g = DVector::from_column_slice(mu_grad);
            let exponent =
                v.dot(&mean_vec) + 0.5 * v.dot(&(cov * &v)) + 0.5 * (delta * delta / 4.0) * mu_g.dot(&lam_mu);
            Ok(exponent + w)
        }
    }
}

/// Marginalized stage-1 decision for a Langevin proposal.
///
/// `prior_grads` holds `∇log p` at the current state and at the proposal.
pub fn stage1_log_alpha_mala(
    current: &StateSnapshot,
    proposal_theta: &[f64],
    joint_pred: &SurrogatePrediction,
    prior_grads: (&[f64], &[f64]),
    proposal_log_prior: f64,
    params: &MalaProposalParams,
    uniform: f64,
) -> Result<Stage1Decision> {
    if !joint_pred.is_joint() {
        return Err(Error::ModeMismatch("joint (value and gradient)"));
    }
    let grad_k = current
        .exact_grad_ll
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("current state lacks an exact gradient".into()))?;
    ensure_finite("current log-likelihood", current.exact_ll)?;
    ensure_finite("current log-prior", current.log_prior)?;
    ensure_log_density("proposal log-prior", proposal_log_prior)?;

    let log_expectation = mala_log_expectation(
        &current.theta,
        proposal_theta,
        joint_pred,
        prior_grads.1,
        params,
        SHIPPED_MARGINALIZATION,
    )?;
    let num = log_expectation + proposal_log_prior;
    let forward_mean = mala_drift(&current.theta, grad_k, prior_grads.0, params)?;
    let den = current.exact_ll + current.log_prior + params.log_density(proposal_theta, &forward_mean)?;
    finish_stage1(num, den, joint_pred.clone(), uniform)
}

fn exact_reverse_log_q(
    current: &StateSnapshot,
    proposal: &StateSnapshot,
    prior_grad_proposal: &[f64],
    params: &MalaProposalParams,
) -> Result<f64> {
    let grad = proposal
        .exact_grad_ll
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("proposal lacks an exact gradient".into()))?;
    let reverse_mean = mala_drift(&proposal.theta, grad, prior_grad_proposal, params)?;
    params.log_density(&current.theta, &reverse_mean)
}

/// Stage-2 MALA ratio evaluated literally with exact endpoint quantities and
/// the cached forward/reverse stage-1 probabilities.
pub fn stage2_log_alpha_mala_direct(
    current: &StateSnapshot,
    proposal: &StateSnapshot,
    stage1: &Stage1Decision,
    prior_grads: (&[f64], &[f64]),
    params: &MalaProposalParams,
) -> Result<f64> {
    let grad_k = current
        .exact_grad_ll
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("current state lacks an exact gradient".into()))?;
    let forward_mean = mala_drift(&current.theta, grad_k, prior_grads.0, params)?;
    let log_q_fwd = params.log_density(&proposal.theta, &forward_mean)?;
    let log_q_rev = exact_reverse_log_q(current, proposal, prior_grads.1, params)?;
    let num = proposal.exact_ll + proposal.log_prior + log_q_rev + stage1.log_alpha1_reverse();
    let den = current.exact_ll + current.log_prior + log_q_fwd + stage1.log_alpha1_forward;
    Ok((num - den).min(0.0))
}

/// Simplified stage-2 MALA ratio: exact reverse-move target density against
/// the marginalized stage-1 numerator.
pub fn stage2_log_alpha_mala_simplified(
    current: &StateSnapshot,
    proposal: &StateSnapshot,
    stage1: &Stage1Decision,
    prior_grad_proposal: &[f64],
    params: &MalaProposalParams,
) -> Result<f64> {
    let log_q_rev = exact_reverse_log_q(current, proposal, prior_grad_proposal, params)?;
    Ok((proposal.exact_ll + proposal.log_prior + log_q_rev - stage1.log_numerator).min(0.0))
}

/// Exact second-stage acceptance for MALA. `proposal` carries the freshly
/// computed exact log-likelihood and gradient.
pub fn stage2_log_alpha_mala(
    current: &StateSnapshot,
    proposal: &StateSnapshot,
    stage1: &Stage1Decision,
    prior_grads: (&[f64], &[f64]),
    params: &MalaProposalParams,
) -> Result<f64> {
    if !stage1.accepted {
        return Err(Error::ContractViolation("stage 2 evaluated after a stage-1 rejection"));
    }
    ensure_log_density("proposal log-likelihood", proposal.exact_ll)?;
    if proposal.exact_ll == f64::NEG_INFINITY || proposal.log_prior == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let direct = stage2_log_alpha_mala_direct(current, proposal, stage1, prior_grads, params)?;
    let simplified = stage2_log_alpha_mala_simplified(current, proposal, stage1, prior_grads.1, params)?;
    let scale = [
        proposal.exact_ll,
        current.exact_ll,
        proposal.log_prior,
        current.log_prior,
        stage1.log_numerator,
        stage1.log_denominator,
    ]
    .iter()
    .fold(0.0f64, |m, v| m.max(v.abs()));
    check_agreement(direct, simplified, scale)?;
    Ok(direct)
}
