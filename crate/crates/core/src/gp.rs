//! Noise-free Gaussian-process regression over the log-likelihood.
//!
//! The surrogate interpolates its training values (up to a tiny diagonal
//! jitter) and, in joint mode, also conditions on observed gradients. The
//! prior mean is a constant `m`; the solves `K⁻¹y` and `K⁻¹e` (with `e` the
//! indicator of value observations) are cached so that changing `m` only
//! costs O(n).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{check_dim, Error, Result};
use crate::kernel::{KernelHyper, MAX_RELATIVE_JITTER};
use crate::ledger::{theta_key, Evaluation, EvaluationLedger};
use crate::linalg::{dot, PackedCholesky};

/// Maximum number of ×10 jitter escalations attempted by [`GpSurrogate::fit`].
pub const JITTER_ESCALATIONS: usize = 3;

/// Posterior summary of the surrogate at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogatePrediction {
    pub mean: f64,
    pub variance: f64,
    pub grad_mean: Option<Vec<f64>>,
    /// Joint covariance of `[f; ∇f]`, present for joint predictions.
    pub joint_cov: Option<DMatrix<f64>>,
}

impl SurrogatePrediction {
    /// A zero-variance prediction from an exact value.
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            variance: 0.0,
            grad_mean: None,
            joint_cov: None,
        }
    }

    /// A zero-covariance joint prediction from an exact value and gradient.
    pub fn exact_joint(value: f64, gradient: Vec<f64>) -> Self {
        let n = gradient.len() + 1;
        Self {
            mean: value,
            variance: 0.0,
            grad_mean: Some(gradient),
            joint_cov: Some(DMatrix::zeros(n, n)),
        }
    }

    pub fn is_joint(&self) -> bool {
        self.grad_mean.is_some() && self.joint_cov.is_some()
    }
}

/// Trained GP state.
#[derive(Debug, Clone)]
pub struct GpSurrogate {
    hyper: KernelHyper,
    gradient_mode: bool,
    inputs: Vec<Vec<f64>>,
    values: Vec<f64>,
    gradients: Vec<Vec<f64>>,
    keys: BTreeMap<Vec<u64>, usize>,
    chol: PackedCholesky,
    /// `L⁻¹ y` and `L⁻¹ 1_value` (forward solves only, so an append just
    /// extends them).
    z_obs: Vec<f64>,
    z_mask: Vec<f64>,
    prior_mean: f64,
    /// `L⁻¹ (y − m·1_value)`; the predictive mean is `m + (L⁻¹k*)ᵀ z_centered`.
    z_centered: Vec<f64>,
}

fn jitter_schedule(hyper: &KernelHyper) -> impl Iterator<Item = f64> {
    let sv = hyper.signal_variance();
    let base = hyper.jitter();
    let cap = MAX_RELATIVE_JITTER * sv;
    (0..=JITTER_ESCALATIONS).map(move |k| {
        let j = if base > 0.0 {
            base * 10f64.powi(k as i32)
        } else if k == 0 {
            0.0
        } else {
            crate::kernel::DEFAULT_RELATIVE_JITTER * sv * 10f64.powi(k as i32 - 1)
        };
        j.min(cap)
    })
}

impl GpSurrogate {
    /// Fit on every finite entry of the ledger.
    pub fn fit(ledger: &EvaluationLedger, hyper: &KernelHyper, prior_mean: f64, gradient_mode: bool) -> Result<Self> {
        Self::fit_evaluations(
            ledger.iter().filter(|e| e.is_finite()),
            hyper,
            prior_mean,
            gradient_mode,
        )
    }

    /// Fit on an explicit set of evaluations.
    pub fn fit_evaluations<'a, I>(
        evaluations: I,
        hyper: &KernelHyper,
        prior_mean: f64,
        gradient_mode: bool,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Evaluation>,
    {
        let d = hyper.dim();
        let mut inputs = Vec::new();
        let mut values = Vec::new();
        let mut gradients = Vec::new();
        let mut keys = BTreeMap::new();
        for ev in evaluations {
            check_dim(d, ev.theta.len())?;
            if !ev.is_finite() {
                return Err(Error::InvalidArgument("training values must be finite".into()));
            }
            if keys.insert(theta_key(&ev.theta), inputs.len()).is_some() {
                return Err(Error::DuplicatePoint);
            }
            if gradient_mode {
                let g = ev
                    .gradient
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("gradient-mode fit needs gradients on every entry".into()))?;
                check_dim(d, g.len())?;
                gradients.push(g.clone());
            }
            inputs.push(ev.theta.clone());
            values.push(ev.log_likelihood);
        }
        if inputs.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit a GP on an empty training set".into(),
            ));
        }

        let mut last_jitter = hyper.jitter();
        for jitter in jitter_schedule(hyper) {
            last_jitter = jitter;
            let mut h = hyper.clone();
            h.set_jitter(jitter);
            if let Some(chol) = factor(&inputs, &h, gradient_mode) {
                let mut gp = Self {
                    hyper: h,
                    gradient_mode,
                    inputs,
                    values,
                    gradients,
                    keys,
                    chol,
                    z_obs: Vec::new(),
                    z_mask: Vec::new(),
                    prior_mean,
                    z_centered: Vec::new(),
                };
                gp.refresh_solves();
                return Ok(gp);
            }
        }
        Err(Error::IllConditioned { jitter: last_jitter })
    }

    pub fn hyper(&self) -> &KernelHyper {
        &self.hyper
    }

    pub fn gradient_mode(&self) -> bool {
        self.gradient_mode
    }

    pub fn dim(&self) -> usize {
        self.hyper.dim()
    }

    /// Number of training points (not observations).
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.keys.contains_key(&theta_key(theta))
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn cholesky(&self) -> &PackedCholesky {
        &self.chol
    }

    /// Change the constant prior mean; O(n).
    pub fn set_prior_mean(&mut self, prior_mean: f64) {
        self.prior_mean = prior_mean;
        self.z_centered = self
            .z_obs
            .iter()
            .zip(&self.z_mask)
            .map(|(a, b)| a - prior_mean * b)
            .collect();
    }

    fn outputs(&self) -> usize {
        if self.gradient_mode {
            self.dim() + 1
        } else {
            1
        }
    }

    fn observation_vector(&self) -> (Vec<f64>, Vec<f64>) {
        let q = self.outputs();
        let mut obs = Vec::with_capacity(self.inputs.len() * q);
        let mut mask = Vec::with_capacity(self.inputs.len() * q);
        for i in 0..self.inputs.len() {
            obs.push(self.values[i]);
            mask.push(1.0);
            if self.gradient_mode {
                obs.extend_from_slice(&self.gradients[i]);
                mask.extend(core::iter::repeat_n(0.0, self.dim()));
            }
        }
        (obs, mask)
    }

    fn refresh_solves(&mut self) {
        let (obs, mask) = self.observation_vector();
        self.z_obs = self.chol.solve_lower(&obs);
        self.z_mask = self.chol.solve_lower(&mask);
        self.set_prior_mean(self.prior_mean);
    }

    /// Condition on one more evaluation via a block Cholesky extension.
    /// On error the surrogate is unchanged.
    pub fn append(&mut self, ev: &Evaluation) -> Result<()> {
        let d = self.dim();
        check_dim(d, ev.theta.len())?;
        if !ev.is_finite() {
            return Err(Error::InvalidArgument("training values must be finite".into()));
        }
        let key = theta_key(&ev.theta);
        if self.keys.contains_key(&key) {
            return Err(Error::DuplicatePoint);
        }
        let gradient = if self.gradient_mode {
            let g = ev
                .gradient
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("gradient-mode append needs a gradient".into()))?;
            check_dim(d, g.len())?;
            Some(g.clone())
        } else {
            None
        };

        let q = self.outputs();
        let mut block = vec![0.0; q * q];
        // columns of K for each new observation r: cov(obs_j, new_r)
        let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(self.chol.len()); q];
        for x in &self.inputs {
            if self.gradient_mode {
                self.hyper.joint_block_unchecked(x, &ev.theta, &mut block);
                for r in 0..q {
                    for s in 0..q {
                        columns[r].push(block[s * q + r]);
                    }
                }
            } else {
                columns[0].push(self.hyper.eval_unchecked(x, &ev.theta));
            }
        }
        if self.gradient_mode {
            self.hyper.joint_block_unchecked(&ev.theta, &ev.theta, &mut block);
        } else {
            block[0] = self.hyper.signal_variance();
        }
        for r in 0..q {
            block[r * q + r] += self.hyper.jitter();
        }
        if !self.chol.push_block(&columns, &block) {
            return Err(Error::IllConditioned {
                jitter: self.hyper.jitter(),
            });
        }

        self.keys.insert(key, self.inputs.len());
        self.inputs.push(ev.theta.clone());
        self.values.push(ev.log_likelihood);
        let mut obs_tail = vec![ev.log_likelihood];
        let mut mask_tail = vec![1.0];
        if let Some(g) = gradient {
            obs_tail.extend_from_slice(&g);
            mask_tail.resize(q, 0.0);
            self.gradients.push(g);
        }
        self.chol.extend_lower(&mut self.z_obs, &obs_tail);
        self.chol.extend_lower(&mut self.z_mask, &mask_tail);
        self.set_prior_mean(self.prior_mean);
        Ok(())
    }

    /// Cross-covariance between the query outputs `c` and every training
    /// observation, one vector per query output.
    fn cross_covariances(&self, theta: &[f64], outputs: usize) -> Vec<Vec<f64>> {
        let q = self.outputs();
        let n = self.chol.len();
        let mut cols = vec![Vec::with_capacity(n); outputs];
        if self.gradient_mode {
            let mut block = vec![0.0; q * q];
            for x in &self.inputs {
                self.hyper.joint_block_unchecked(theta, x, &mut block);
                for (c, col) in cols.iter_mut().enumerate() {
                    col.extend_from_slice(&block[c * q..(c + 1) * q]);
                }
            }
        } else {
            debug_assert_eq!(outputs, 1);
            cols[0].extend(self.inputs.iter().map(|x| self.hyper.eval_unchecked(theta, x)));
        }
        cols
    }

    /// Posterior mean and variance of the log-likelihood at `theta`.
    pub fn predict(&self, theta: &[f64]) -> Result<SurrogatePrediction> {
        check_dim(self.dim(), theta.len())?;
        let kstar = self.cross_covariances(theta, 1).pop().unwrap_or_default();
        let v = self.chol.solve_lower(&kstar);
        let mean = self.prior_mean + dot(&v, &self.z_centered);
        let variance = (self.hyper.signal_variance() - dot(&v, &v)).max(0.0);
        Ok(SurrogatePrediction {
            mean,
            variance,
            grad_mean: None,
            joint_cov: None,
        })
    }

    /// Joint posterior of `[LL(θ); ∇LL(θ)]`; requires a gradient-mode surrogate.
    pub fn predict_joint(&self, theta: &[f64]) -> Result<SurrogatePrediction> {
        if !self.gradient_mode {
            return Err(Error::ModeMismatch("gradient-mode"));
        }
        let d = self.dim();
        check_dim(d, theta.len())?;
        let q = d + 1;
        let kstar = self.cross_covariances(theta, q);
        let v = self.chol.solve_lower_many(&kstar);
        let means: Vec<f64> = v.iter().map(|v| dot(v, &self.z_centered)).collect();

        let sv = self.hyper.signal_variance();
        let ls = self.hyper.lengthscales();
        let mut cov = DMatrix::zeros(q, q);
        for a in 0..q {
            for b in a..q {
                let prior = match (a, b) {
                    (0, 0) => sv,
                    (a, b) if a == b => sv / (ls[a - 1] * ls[a - 1]),
                    _ => 0.0,
                };
                let c = prior - dot(&v[a], &v[b]);
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
            if cov[(a, a)] < 0.0 {
                cov[(a, a)] = 0.0;
            }
        }
        Ok(SurrogatePrediction {
            mean: self.prior_mean + means[0],
            variance: cov[(0, 0)],
            grad_mean: Some(means[1..].to_vec()),
            joint_cov: Some(cov),
        })
    }
}

fn factor(inputs: &[Vec<f64>], hyper: &KernelHyper, gradient_mode: bool) -> Option<PackedCholesky> {
    let jitter = hyper.jitter();
    if !gradient_mode {
        return PackedCholesky::factor_with(inputs.len(), |i, j| {
            let k = if i == j {
                hyper.signal_variance()
            } else {
                hyper.eval_unchecked(&inputs[i], &inputs[j])
            };
            if i == j {
                k + jitter
            } else {
                k
            }
        });
    }
    let q = hyper.dim() + 1;
    let mut block = vec![0.0; q * q];
    let mut cached = (usize::MAX, usize::MAX);
    PackedCholesky::factor_with(inputs.len() * q, |i, j| {
        let (pi, r) = (i / q, i % q);
        let (pj, s) = (j / q, j % q);
        if cached != (pi, pj) {
            hyper.joint_block_unchecked(&inputs[pi], &inputs[pj], &mut block);
            cached = (pi, pj);
        }
        let k = block[r * q + s];
        if i == j {
            k + jitter
        } else {
            k
        }
    })
}

/// Noise-free GP log marginal likelihood of the ledger values under a
/// constant prior mean.
pub fn log_marginal_likelihood(ledger: &EvaluationLedger, hyper: &KernelHyper, prior_mean: f64) -> Result<f64> {
    let (inputs, values): (Vec<Vec<f64>>, Vec<f64>) = ledger
        .iter()
        .filter(|e| e.log_likelihood.is_finite())
        .map(|e| (e.theta.clone(), e.log_likelihood))
        .unzip();
    log_marginal_likelihood_points(&inputs, &values, None, hyper, prior_mean)
}

/// Log marginal likelihood of the joint value and gradient observations.
/// Every finite ledger entry must carry a gradient.
pub fn log_marginal_likelihood_joint(ledger: &EvaluationLedger, hyper: &KernelHyper, prior_mean: f64) -> Result<f64> {
    let mut inputs = Vec::new();
    let mut values = Vec::new();
    let mut gradients = Vec::new();
    for e in ledger.iter().filter(|e| e.log_likelihood.is_finite()) {
        let g = e
            .gradient
            .as_ref()
            .ok_or(Error::InvalidArgument("joint likelihood needs gradients".into()))?;
        inputs.push(e.theta.clone());
        values.push(e.log_likelihood);
        gradients.push(g.clone());
    }
    log_marginal_likelihood_points(&inputs, &values, Some(&gradients), hyper, prior_mean)
}

pub(crate) fn log_marginal_likelihood_points(
    inputs: &[Vec<f64>],
    values: &[f64],
    gradients: Option<&[Vec<f64>]>,
    hyper: &KernelHyper,
    prior_mean: f64,
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("empty ledger".into()));
    }
    for x in inputs {
        check_dim(hyper.dim(), x.len())?;
    }
    let mut centered = Vec::with_capacity(inputs.len() * (hyper.dim() + 1));
    match gradients {
        None => centered.extend(values.iter().map(|y| y - prior_mean)),
        Some(grads) => {
            check_dim(inputs.len(), grads.len())?;
            for (y, g) in values.iter().zip(grads) {
                check_dim(hyper.dim(), g.len())?;
                centered.push(y - prior_mean);
                centered.extend_from_slice(g);
            }
        }
    }
    let mut last = hyper.jitter();
    for jitter in jitter_schedule(hyper) {
        last = jitter;
        let mut h = hyper.clone();
        h.set_jitter(jitter);
        if let Some(chol) = factor(inputs, &h, gradients.is_some()) {
            let z = chol.solve_lower(&centered);
            let t = centered.len() as f64;
            let v = -0.5 * dot(&z, &z) - 0.5 * chol.log_det() - 0.5 * t * (2.0 * core::f64::consts::PI).ln();
            return if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Numeric(format!("non-finite log marginal likelihood {v}")))
            };
        }
    }
    Err(Error::IllConditioned { jitter: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ledger_1d(points: &[(f64, f64)]) -> EvaluationLedger {
        points.iter().map(|&(x, y)| Evaluation::new(vec![x], y)).collect()
    }

    #[test]
    fn single_point_interpolates() {
        let l = ledger_1d(&[(0.3, -2.0)]);
        let h = KernelHyper::isotropic(1, 1.0, 1.0).unwrap();
        let gp = GpSurrogate::fit(&l, &h, 0.0, false).unwrap();
        let p = gp.predict(&[0.3]).unwrap();
        assert_abs_diff_eq!(p.mean, -2.0, epsilon = 1e-6);
        assert!(p.variance < 1e-6);
    }

    #[test]
    fn collinear_points_fit_at_default_jitter() {
        let l: EvaluationLedger = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]
            .iter()
            .enumerate()
            .map(|(i, x)| Evaluation::new(x.to_vec(), i as f64))
            .collect();
        let h = KernelHyper::isotropic(2, 1.0, 1.0).unwrap();
        let gp = GpSurrogate::fit(&l, &h, 0.0, false).unwrap();
        assert_eq!(gp.hyper().jitter(), 1e-10);
    }

    #[test]
    fn two_point_closed_form() {
        // K = [[1, c], [c, 1]] with c = exp(-1/2); k* = [k(x,0), k(x,1)]
        let l = ledger_1d(&[(0.0, 1.0), (1.0, 3.0)]);
        let h = KernelHyper::with_jitter(vec![1.0], 1.0, 0.0).unwrap();
        let gp = GpSurrogate::fit(&l, &h, 0.5, false).unwrap();
        let x: f64 = 0.4;
        let c = (-0.5f64).exp();
        let k0 = (-0.5 * x * x).exp();
        let k1 = (-0.5 * (x - 1.0) * (x - 1.0)).exp();
        let det = 1.0 - c * c;
        let (y0, y1) = (1.0 - 0.5, 3.0 - 0.5);
        let a0 = (y0 - c * y1) / det;
        let a1 = (y1 - c * y0) / det;
        let mean = 0.5 + k0 * a0 + k1 * a1;
        let var = 1.0 - (k0 * k0 - 2.0 * c * k0 * k1 + k1 * k1) / det;
        let p = gp.predict(&[x]).unwrap();
        assert_abs_diff_eq!(p.mean, mean, epsilon = 1e-10);
        assert_abs_diff_eq!(p.variance, var, epsilon = 1e-10);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let l = ledger_1d(&[(0.0, 1.0), (0.5, 2.0)]);
        let h = KernelHyper::isotropic(1, 0.3, 2.0).unwrap();
        let gp = GpSurrogate::fit(&l, &h, -7.0, false).unwrap();
        let p = gp.predict(&[100.0]).unwrap();
        assert_abs_diff_eq!(p.mean, -7.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.variance, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn prior_mean_update_matches_refit() {
        let l = ledger_1d(&[(0.0, 1.0), (0.7, -2.0), (1.5, 0.5)]);
        let h = KernelHyper::isotropic(1, 0.8, 1.5).unwrap();
        let mut gp = GpSurrogate::fit(&l, &h, 0.0, false).unwrap();
        gp.set_prior_mean(-3.0);
        let refit = GpSurrogate::fit(&l, &h, -3.0, false).unwrap();
        for x in [-1.0, 0.2, 1.1, 4.0] {
            assert_abs_diff_eq!(
                gp.predict(&[x]).unwrap().mean,
                refit.predict(&[x]).unwrap().mean,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn append_rejects_duplicates_and_leaves_state() {
        let l = ledger_1d(&[(0.0, 1.0)]);
        let h = KernelHyper::isotropic(1, 1.0, 1.0).unwrap();
        let mut gp = GpSurrogate::fit(&l, &h, 0.0, false).unwrap();
        assert_eq!(gp.append(&Evaluation::new(vec![0.0], 5.0)), Err(Error::DuplicatePoint));
        assert_eq!(gp.len(), 1);
        gp.append(&Evaluation::new(vec![0.5], 5.0)).unwrap();
        let p = gp.predict(&[0.5]).unwrap();
        assert_abs_diff_eq!(p.mean, 5.0, epsilon = 1e-6);
        assert!(p.variance < 1e-6);
    }

    #[test]
    fn joint_prediction_on_scalar_gp_is_mode_error() {
        let l = ledger_1d(&[(0.0, 1.0)]);
        let h = KernelHyper::isotropic(1, 1.0, 1.0).unwrap();
        let gp = GpSurrogate::fit(&l, &h, 0.0, false).unwrap();
        assert!(matches!(gp.predict_joint(&[0.1]), Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn gradient_mode_requires_gradients() {
        let l = ledger_1d(&[(0.0, 1.0)]);
        let h = KernelHyper::isotropic(1, 1.0, 1.0).unwrap();
        assert!(GpSurrogate::fit(&l, &h, 0.0, true).is_err());
    }

    #[test]
    fn joint_prediction_at_training_point() {
        let l: EvaluationLedger = [
            Evaluation::with_gradient(vec![0.0, 0.0], -1.0, vec![0.5, -0.2]),
            Evaluation::with_gradient(vec![0.8, -0.3], -2.0, vec![-1.0, 0.4]),
        ]
        .into_iter()
        .collect();
        let h = KernelHyper::new(vec![0.9, 1.2], 1.3).unwrap();
        let gp = GpSurrogate::fit(&l, &h, -1.5, true).unwrap();
        let p = gp.predict_joint(&[0.8, -0.3]).unwrap();
        assert_abs_diff_eq!(p.mean, -2.0, epsilon = 1e-6);
        let g = p.grad_mean.unwrap();
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(g[1], 0.4, epsilon = 1e-5);
        let cov = p.joint_cov.unwrap();
        assert!(cov.iter().all(|c| c.abs() < 1e-6));
    }

    #[test]
    fn joint_append_matches_refit() {
        let evs = [
            Evaluation::with_gradient(vec![0.0, 0.0], -1.0, vec![0.5, -0.2]),
            Evaluation::with_gradient(vec![0.8, -0.3], -2.0, vec![-1.0, 0.4]),
            Evaluation::with_gradient(vec![-0.4, 0.6], -0.7, vec![0.1, 0.9]),
        ];
        let h = KernelHyper::new(vec![0.9, 1.2], 1.3).unwrap();
        let mut gp = GpSurrogate::fit_evaluations(&evs[..2], &h, -1.5, true).unwrap();
        gp.append(&evs[2]).unwrap();
        let refit = GpSurrogate::fit_evaluations(&evs, &h, -1.5, true).unwrap();
        for q in [[0.3, 0.1], [-1.0, 2.0], [0.5, -0.5]] {
            let a = gp.predict_joint(&q).unwrap();
            let b = refit.predict_joint(&q).unwrap();
            assert_abs_diff_eq!(a.mean, b.mean, epsilon = 1e-10);
            let diff = a.joint_cov.unwrap() - b.joint_cov.unwrap();
            assert!(diff.amax() < 1e-10);
        }
    }

    #[test]
    fn lml_single_point() {
        let l = ledger_1d(&[(0.0, 0.25)]);
        let h = KernelHyper::with_jitter(vec![1.0], 1.0, 0.0).unwrap();
        let v = log_marginal_likelihood(&l, &h, 0.25).unwrap();
        assert_abs_diff_eq!(v, -0.918_938_533_204_672_7, epsilon = 1e-12);
    }
}
