//! SIR epidemic ODE and a posterior over `(β, γ, σ_S, σ_I)` with lognormal
//! observations of the S and I fractions.
//!
//! Initial conditions are fixed at `S₀ = 0.99`, `I₀ = 0.01`. Priors:
//! `β ~ LogNormal(ln 2, 1)`, `γ ~ LogNormal(ln 2, 2)` and a unit half-Cauchy
//! on each noise scale.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{labels, Dataset, Model, TargetInstance, TargetTuning, LN_2PI};
use crate::error::{Error, Result};

/// Largest RK4 step used by [`sir_solve`].
pub const SIR_MAX_STEP: f64 = 0.0125;

const S0: f64 = 0.99;
const I0: f64 = 0.01;
const N_TIMES: usize = 20;
const DT_OBS: f64 = 0.25;
const TRUE: [f64; 4] = [4.0, 1.0, 0.2, 0.3];
const LN_2_OVER_PI: f64 = -0.451_582_705_289_454_9;

#[derive(Debug, Clone, PartialEq)]
pub struct SirTrajectory {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

/// Fixed-step RK4 solution of `S' = −βSI`, `I' = βSI − γI`, `R' = γI` from
/// `t = 0` (with `R₀ = 0`), reported at `times`.
pub fn sir_solve(beta: f64, gamma: f64, s0: f64, i0: f64, times: &[f64]) -> Result<SirTrajectory> {
    sir_solve_with_step(beta, gamma, s0, i0, times, SIR_MAX_STEP)
}

/// As [`sir_solve`] with an explicit upper bound on the step size.
pub fn sir_solve_with_step(
    beta: f64,
    gamma: f64,
    s0: f64,
    i0: f64,
    times: &[f64],
    max_step: f64,
) -> Result<SirTrajectory> {
    for (name, v) in [("beta", beta), ("gamma", gamma), ("s0", s0), ("i0", i0)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    if !(max_step > 0.0) {
        return Err(Error::InvalidArgument("step size must be positive".into()));
    }
    let mut prev = 0.0;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::InvalidArgument(
                "output times must be finite, >= 0 and increasing".into(),
            ));
        }
        prev = t;
    }

    let rhs = |y: [f64; 3]| {
        let inf = beta * y[0] * y[1];
        let rec = gamma * y[1];
        [-inf, inf - rec, rec]
    };
    let mut y = [s0, i0, 0.0];
    let mut t = 0.0;
    let mut out = SirTrajectory {
        times: times.to_vec(),
        s: Vec::with_capacity(times.len()),
        i: Vec::with_capacity(times.len()),
        r: Vec::with_capacity(times.len()),
    };
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / max_step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(y);
                let k2 = rhs(core::array::from_fn(|j| y[j] + 0.5 * h * k1[j]));
                let k3 = rhs(core::array::from_fn(|j| y[j] + 0.5 * h * k2[j]));
                let k4 = rhs(core::array::from_fn(|j| y[j] + h * k3[j]));
                for j in 0..3 {
                    y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Solver(format!("non-finite SIR state at t = {target}")));
            }
            t = target;
        }
        out.s.push(y[0]);
        out.i.push(y[1]);
        out.r.push(y[2]);
    }
    Ok(out)
}

fn lognormal_log_pdf(x: f64, mu_log: f64, sd: f64) -> f64 {
    let lx = x.ln();
    let z = (lx - mu_log) / sd;
    -lx - sd.ln() - 0.5 * LN_2PI - 0.5 * z * z
}

fn half_cauchy_log_pdf(x: f64) -> f64 {
    LN_2_OVER_PI - (x * x).ln_1p()
}

struct Sir {
    times: Vec<f64>,
    s_obs: Vec<f64>,
    i_obs: Vec<f64>,
}

impl Model for Sir {
    fn dim(&self) -> usize {
        4
    }

    fn param_names(&self) -> Vec<alloc::string::String> {
        labels(&["beta", "gamma", "sigma_s", "sigma_i"])
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        if theta.iter().any(|v| !(*v > 0.0)) {
            return f64::NEG_INFINITY;
        }
        lognormal_log_pdf(theta[0], core::f64::consts::LN_2, 1.0)
            + lognormal_log_pdf(theta[1], core::f64::consts::LN_2, 2.0)
            + half_cauchy_log_pdf(theta[2])
            + half_cauchy_log_pdf(theta[3])
    }

    fn grad_log_prior(&self, theta: &[f64]) -> Vec<f64> {
        let ln2 = core::f64::consts::LN_2;
        let lognormal = |x: f64, sd: f64| -(1.0 + (x.ln() - ln2) / (sd * sd)) / x;
        let cauchy = |x: f64| -2.0 * x / (1.0 + x * x);
        vec![
            lognormal(theta[0], 1.0),
            lognormal(theta[1], 2.0),
            cauchy(theta[2]),
            cauchy(theta[3]),
        ]
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        if theta.iter().any(|v| !(*v > 0.0)) {
            return f64::NEG_INFINITY;
        }
        let traj = match sir_solve(theta[0], theta[1], S0, I0, &self.times) {
            Ok(t) => t,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut ll = 0.0;
        for k in 0..self.times.len() {
            if !(traj.s[k] > 0.0 && traj.i[k] > 0.0) {
                return f64::NEG_INFINITY;
            }
            ll += lognormal_log_pdf(self.s_obs[k], traj.s[k].ln(), theta[2])
                + lognormal_log_pdf(self.i_obs[k], traj.i[k].ln(), theta[3]);
        }
        ll
    }

    fn dataset(&self) -> Dataset {
        Dataset {
            columns: labels(&["t", "s", "i"]),
            rows: (0..self.times.len())
                .map(|k| vec![self.times[k], self.s_obs[k], self.i_obs[k]])
                .collect(),
        }
    }
}

pub(super) fn build<R: Rng>(rng: &mut R, noise_free: bool) -> Result<TargetInstance> {
    let times: Vec<f64> = (1..=N_TIMES).map(|k| k as f64 * DT_OBS).collect();
    let traj = sir_solve(TRUE[0], TRUE[1], S0, I0, &times)?;
    let mut noisy = |v: f64, sd: f64| {
        let z: f64 = rng.sample(StandardNormal);
        if noise_free {
            v
        } else {
            v * (sd * z).exp()
        }
    };
    let s_obs = traj.s.iter().map(|&v| noisy(v, TRUE[2])).collect::<Vec<_>>();
    let i_obs = traj.i.iter().map(|&v| noisy(v, TRUE[3])).collect::<Vec<_>>();
    let tuning = TargetTuning {
        proposal_scales: vec![0.2, 0.05, 0.04, 0.06],
        mala_delta: 0.5,
        mala_precond: vec![0.04, 0.0025, 0.0016, 0.0036],
        start_half_width: vec![0.2, 0.05, 0.05, 0.05],
    };
    TargetInstance::new("t4", TRUE.to_vec(), tuning, Box::new(Sir { times, s_obs, i_obs }))
}
