//! Squared-exponential (ARD) covariance and its derivative blocks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{check_dim, Error, Result};

/// Default diagonal nugget relative to the signal variance.
pub const DEFAULT_RELATIVE_JITTER: f64 = 1e-10;
/// Largest nugget permitted relative to the signal variance.
pub const MAX_RELATIVE_JITTER: f64 = 1e-6;

/// Hyperparameters of the ARD squared-exponential kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelHyper {
    lengthscales: Vec<f64>,
    signal_variance: f64,
    jitter: f64,
}

impl KernelHyper {
    /// Kernel with the default jitter of `1e-10 · signal_variance`.
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        let jitter = DEFAULT_RELATIVE_JITTER * signal_variance;
        Self::with_jitter(lengthscales, signal_variance, jitter)
    }

    pub fn with_jitter(lengthscales: Vec<f64>, signal_variance: f64, jitter: f64) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::InvalidArgument("at least one lengthscale is required".into()));
        }
        if let Some(l) = lengthscales.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument(format!("lengthscale must be positive, got {l}")));
        }
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "signal variance must be positive, got {signal_variance}"
            )));
        }
        // small slack so that escalated jitter computed by repeated ×10 still validates
        if !(jitter >= 0.0) || jitter > MAX_RELATIVE_JITTER * signal_variance * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "jitter {jitter:e} outside [0, 1e-6·σ²]"
            )));
        }
        Ok(Self {
            lengthscales,
            signal_variance,
            jitter,
        })
    }

    /// Isotropic convenience constructor.
    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(vec![lengthscale; dim], signal_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub(crate) fn set_jitter(&mut self, jitter: f64) {
        self.jitter = jitter;
    }

    /// Log-parameters `[ln ℓ₁, …, ln ℓ_d, ln σ²]`.
    pub fn to_log_params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        p.push(self.signal_variance.ln());
        p
    }

    /// Inverse of [`KernelHyper::to_log_params`]; the jitter keeps its ratio
    /// to the signal variance.
    pub fn from_log_params(log_params: &[f64], relative_jitter: f64) -> Result<Self> {
        let d = log_params
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidArgument("log-parameter vector must not be empty".into()))?;
        let ls = log_params[..d].iter().map(|v| v.exp()).collect();
        let sv = log_params[d].exp();
        Self::with_jitter(ls, sv, relative_jitter * sv)
    }

    #[inline]
    fn scaled_sq_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let r = (a - b) / l;
                r * r
            })
            .sum()
    }

    /// `σ² exp(−½ Σ (x_j − y_j)² / ℓ_j²)` without dimension checks.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.signal_variance * (-0.5 * self.scaled_sq_dist(x, y)).exp()
    }

    /// Covariance between the outputs `[f(x), ∇f(x)]` and `[f(y), ∇f(y)]`,
    /// as a row-major `(d+1) × (d+1)` array: entry `[r][s]` is
    /// `cov(out_r(x), out_s(y))`.
    pub(crate) fn joint_block_unchecked(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let n = d + 1;
        debug_assert_eq!(out.len(), n * n);
        let k = self.eval_unchecked(x, y);
        out[0] = k;
        for a in 0..d {
            let la2 = self.lengthscales[a] * self.lengthscales[a];
            let ua = (x[a] - y[a]) / la2;
            // cov(f(x), ∂_a f(y)) = ∂k/∂y_a
            out[1 + a] = k * ua;
            // cov(∂_a f(x), f(y)) = ∂k/∂x_a
            out[(1 + a) * n] = -k * ua;
            for b in 0..d {
                let lb2 = self.lengthscales[b] * self.lengthscales[b];
                let ub = (x[b] - y[b]) / lb2;
                let delta = if a == b { 1.0 / la2 } else { 0.0 };
                out[(1 + a) * n + 1 + b] = k * (delta - ua * ub);
            }
        }
    }
}

/// Squared-exponential covariance `k(x, y)`.
pub fn se_kernel(x: &[f64], y: &[f64], hyper: &KernelHyper) -> Result<f64> {
    check_dim(hyper.dim(), x.len())?;
    check_dim(hyper.dim(), y.len())?;
    Ok(hyper.eval_unchecked(x, y))
}

/// `k(x, y)` together with its first derivative in `y` and the mixed second
/// derivative `∂²k/∂x∂y`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlocks {
    pub value: f64,
    pub dk_dy: Vec<f64>,
    pub d2k_dxdy: DMatrix<f64>,
}

pub fn se_kernel_derivative_blocks(x: &[f64], y: &[f64], hyper: &KernelHyper) -> Result<KernelBlocks> {
    check_dim(hyper.dim(), x.len())?;
    check_dim(hyper.dim(), y.len())?;
    let d = hyper.dim();
    let k = hyper.eval_unchecked(x, y);
    let u: Vec<f64> = (0..d)
        .map(|j| (x[j] - y[j]) / (hyper.lengthscales[j] * hyper.lengthscales[j]))
        .collect();
    let dk_dy = u.iter().map(|uj| k * uj).collect();
    let d2k_dxdy = DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j {
            1.0 / (hyper.lengthscales[i] * hyper.lengthscales[i])
        } else {
            0.0
        };
        k * (delta - u[i] * u[j])
    });
    Ok(KernelBlocks {
        value: k,
        dk_dy,
        d2k_dxdy,
    })
}
