//! Logistic regression with an intercept and four standard-normal
//! covariates; `β_i ~ N(0, 100)` a priori, true `β_i ~ N(0, 1)`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{labels, names, normal_log_pdf, Dataset, Model, TargetInstance, TargetTuning};
use crate::error::{Error, Result};

const DIM: usize = 5;
const PRIOR_SD: f64 = 10.0;

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct Logistic {
    /// Row-major design matrix, first column all ones.
    x: Vec<[f64; DIM]>,
    y: Vec<f64>,
}

impl Logistic {
    fn eval(&self, beta: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let mut ll = 0.0;
        let mut g = vec![0.0; DIM];
        for (row, &y) in self.x.iter().zip(&self.y) {
            let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            ll += y * eta - softplus(eta);
            if want_grad {
                let r = y - sigmoid(eta);
                for (gj, xj) in g.iter_mut().zip(row) {
                    *gj += r * xj;
                }
            }
        }
        (ll, g)
    }
}

impl Model for Logistic {
    fn dim(&self) -> usize {
        DIM
    }

    fn param_names(&self) -> Vec<alloc::string::String> {
        names("beta", DIM)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        theta.iter().map(|b| normal_log_pdf(*b, 0.0, PRIOR_SD)).sum()
    }

    fn grad_log_prior(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|b| -b / (PRIOR_SD * PRIOR_SD)).collect()
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        self.eval(theta, false).0
    }

    fn log_likelihood_and_gradient(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some(self.eval(theta, true))
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn dataset(&self) -> Dataset {
        Dataset {
            columns: labels(&["x1", "x2", "x3", "x4", "y"]),
            rows: self
                .x
                .iter()
                .zip(&self.y)
                .map(|(r, y)| {
                    let mut v = r[1..].to_vec();
                    v.push(*y);
                    v
                })
                .collect(),
        }
    }
}

pub(super) fn build<R: Rng>(rng: &mut R, n: usize) -> Result<TargetInstance> {
    if n == 0 {
        return Err(Error::InvalidArgument("t5 needs at least one observation".into()));
    }
    let beta: Vec<f64> = (0..DIM).map(|_| rng.sample(StandardNormal)).collect();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = [1.0; DIM];
        for v in row.iter_mut().skip(1) {
            *v = rng.sample(StandardNormal);
        }
        let eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let u: f64 = rng.random();
        y.push(if u < sigmoid(eta) { 1.0 } else { 0.0 });
        x.push(row);
    }
    // posterior sd per coefficient is roughly 2/sqrt(n) at this data size
    let sd = 2.5 / (n as f64).sqrt();
    let tuning = TargetTuning {
        proposal_scales: vec![sd; DIM],
        mala_delta: 1.6,
        mala_precond: vec![sd * sd; DIM],
        start_half_width: vec![0.2; DIM],
    };
    TargetInstance::new("t5", beta, tuning, Box::new(Logistic { x, y }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_link_functions() {
        assert_eq!(softplus(0.0), core::f64::consts::LN_2);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
