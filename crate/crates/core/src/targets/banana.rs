//! Banana-shaped posterior over the twist parameters `(a, b)`.
//!
//! Observations follow a twisted Gaussian: `x1 ~ N(0, 1)` and
//! `x2 = a·(z − b·(x1² − 1))` with `z ~ N(0, 1)`, so `x2/a + b(x1² − 1)` is
//! standard normal. The prior is flat (log-prior identically zero); the
//! likelihood is `-inf` for `a ≤ 0`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{labels, Dataset, Model, TargetInstance, TargetTuning, LN_2PI};
use crate::error::Result;

const N_OBS: usize = 25;
const TRUE_A: f64 = 0.2;
const TRUE_B: f64 = 2.0;

struct Banana {
    x1: Vec<f64>,
    x2: Vec<f64>,
}

impl Banana {
    fn eval(&self, theta: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (a, b) = (theta[0], theta[1]);
        if !(a > 0.0) {
            return (f64::NEG_INFINITY, Vec::new());
        }
        let n = self.x1.len() as f64;
        let mut ll = -n * (LN_2PI + a.ln());
        let mut g = [-n / a, 0.0];
        for (&x1, &x2) in self.x1.iter().zip(&self.x2) {
            let bend = x1 * x1 - 1.0;
            let r = x2 / a + b * bend;
            ll -= 0.5 * (x1 * x1 + r * r);
            if want_grad {
                g[0] += r * x2 / (a * a);
                g[1] -= r * bend;
            }
        }
        (ll, g.to_vec())
    }
}

impl Model for Banana {
    fn dim(&self) -> usize {
        2
    }

    fn param_names(&self) -> Vec<alloc::string::String> {
        labels(&["a", "b"])
    }

    fn log_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn grad_log_prior(&self, _theta: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0]
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
            columns: labels(&["x1", "x2"]),
            rows: self.x1.iter().zip(&self.x2).map(|(a, b)| vec![*a, *b]).collect(),
        }
    }
}

pub(super) fn build<R: Rng>(rng: &mut R) -> Result<TargetInstance> {
    let mut x1 = Vec::with_capacity(N_OBS);
    let mut x2 = Vec::with_capacity(N_OBS);
    for _ in 0..N_OBS {
        let u: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        x1.push(u);
        x2.push(TRUE_A * (z - TRUE_B * (u * u - 1.0)));
    }
    let tuning = TargetTuning {
        proposal_scales: vec![0.04, 0.5],
        mala_delta: 0.5,
        mala_precond: vec![0.03 * 0.03, 0.4 * 0.4],
        start_half_width: vec![0.1, 1.0],
    };
    TargetInstance::new("t1", vec![TRUE_A, TRUE_B], tuning, Box::new(Banana { x1, x2 }))
}
