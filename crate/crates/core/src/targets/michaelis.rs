//! Saturating regression `y = a·x/(x + b) + ε`, `ε ~ N(0, σ²)`, over
//! `θ = (a, b, σ)`.
//!
//! Priors: `a ~ N(3, 1)`, `b ~ N(30, 15²)`, `ln σ ~ N(−2, 1)` (the density on
//! σ carries the `1/σ` Jacobian).

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{labels, normal_log_pdf, Dataset, Model, TargetInstance, TargetTuning, LN_2PI};
use crate::error::Result;

const X: [f64; 7] = [28.0, 55.0, 83.0, 110.0, 138.0, 225.0, 375.0];
const TRUE: [f64; 3] = [0.14, 50.0, 0.1];

struct MichaelisMenten {
    y: Vec<f64>,
}

impl MichaelisMenten {
    fn eval(&self, theta: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (a, b, s) = (theta[0], theta[1], theta[2]);
        if !(s > 0.0) || X.iter().any(|x| !(x + b > 0.0)) {
            return (f64::NEG_INFINITY, Vec::new());
        }
        let n = X.len() as f64;
        let s2 = s * s;
        let mut ss = 0.0;
        let mut g = [0.0; 3];
        for (&x, &y) in X.iter().zip(&self.y) {
            let h = x / (x + b);
            let r = y - a * h;
            ss += r * r;
            if want_grad {
                g[0] += r * h / s2;
                g[1] -= r * a * h / (x + b) / s2;
            }
        }
        g[2] = ss / (s2 * s) - n / s;
        (-0.5 * ss / s2 - n * s.ln() - 0.5 * n * LN_2PI, g.to_vec())
    }
}

impl Model for MichaelisMenten {
    fn dim(&self) -> usize {
        3
    }

    fn param_names(&self) -> Vec<alloc::string::String> {
        labels(&["a", "b", "sigma"])
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let s = theta[2];
        if !(s > 0.0) {
            return f64::NEG_INFINITY;
        }
        normal_log_pdf(theta[0], 3.0, 1.0) + normal_log_pdf(theta[1], 30.0, 15.0) + normal_log_pdf(s.ln(), -2.0, 1.0)
            - s.ln()
    }

    fn grad_log_prior(&self, theta: &[f64]) -> Vec<f64> {
        let s = theta[2];
        vec![
            -(theta[0] - 3.0),
            -(theta[1] - 30.0) / 225.0,
            -(s.ln() + 2.0) / s - 1.0 / s,
        ]
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
            columns: labels(&["x", "y"]),
            rows: X.iter().zip(&self.y).map(|(x, y)| vec![*x, *y]).collect(),
        }
    }
}

pub(super) fn build<R: Rng>(rng: &mut R, noise_free: bool) -> Result<TargetInstance> {
    let [a, b, s] = TRUE;
    let y = X
        .iter()
        .map(|&x| {
            let eps: f64 = rng.sample(StandardNormal);
            a * x / (x + b) + if noise_free { 0.0 } else { s * eps }
        })
        .collect();
    let tuning = TargetTuning {
        proposal_scales: vec![0.07, 18.0, 0.04],
        mala_delta: 1.5,
        mala_precond: vec![0.07 * 0.07, 18.0 * 18.0, 0.04 * 0.04],
        start_half_width: vec![0.05, 10.0, 0.03],
    };
    TargetInstance::new("t2", TRUE.to_vec(), tuning, Box::new(MichaelisMenten { y }))
}
