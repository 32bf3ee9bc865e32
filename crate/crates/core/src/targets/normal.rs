use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::{names, Dataset, Model, TargetInstance, TargetTuning, LN_2PI};
use crate::error::{Error, Result};

/// Isotropic standard normal likelihood with a flat prior.
struct StandardNormal {
    dim: usize,
}

impl Model for StandardNormal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn param_names(&self) -> Vec<alloc::string::String> {
        names("x", self.dim)
    }

    fn log_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn grad_log_prior(&self, theta: &[f64]) -> Vec<f64> {
        vec![0.0; theta.len()]
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        -0.5 * theta.iter().map(|v| v * v).sum::<f64>() - 0.5 * self.dim as f64 * LN_2PI
    }

    fn log_likelihood_and_gradient(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some((self.log_likelihood(theta), theta.iter().map(|v| -v).collect()))
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn dataset(&self) -> Dataset {
        Dataset {
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }
}

pub(super) fn build(dim: usize) -> Result<TargetInstance> {
    if dim == 0 {
        return Err(Error::InvalidArgument("normal target needs dimension >= 1".into()));
    }
    let tuning = TargetTuning {
        proposal_scales: vec![2.4 / (dim as f64).sqrt(); dim],
        mala_delta: 1.0,
        mala_precond: vec![1.0; dim],
        start_half_width: vec![1.0; dim],
    };
    TargetInstance::new("normal", vec![0.0; dim], tuning, Box::new(StandardNormal { dim }))
}
