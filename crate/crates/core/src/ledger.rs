//! The evaluation ledger: every exact log-likelihood computed during a run.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One exact evaluation of the log-likelihood (and optionally its gradient).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub gradient: Option<Vec<f64>>,
}

impl Evaluation {
    pub fn new(theta: Vec<f64>, log_likelihood: f64) -> Self {
        Self {
            theta,
            log_likelihood,
            gradient: None,
        }
    }

    pub fn with_gradient(theta: Vec<f64>, log_likelihood: f64, gradient: Vec<f64>) -> Self {
        Self {
            theta,
            log_likelihood,
            gradient: Some(gradient),
        }
    }

    /// Finite value and, if present, finite gradient.
    pub fn is_finite(&self) -> bool {
        self.log_likelihood.is_finite() && self.gradient.as_ref().is_none_or(|g| g.iter().all(|v| v.is_finite()))
    }
}

/// Bit-exact key for a parameter vector. `-0.0` is folded into `0.0`.
pub(crate) fn theta_key(theta: &[f64]) -> Vec<u64> {
    theta
        .iter()
        .map(|v| if *v == 0.0 { 0u64 } else { v.to_bits() })
        .collect()
}

/// Append-only, duplicate-free record of exact evaluations in evaluation order.
#[derive(Debug, Clone, Default)]
pub struct EvaluationLedger {
    entries: Vec<Evaluation>,
    index: BTreeMap<Vec<u64>, usize>,
}

impl EvaluationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append an evaluation; exact duplicates of an existing θ are rejected.
    pub fn insert(&mut self, ev: Evaluation) -> Result<usize> {
        if let Some(first) = self.entries.first() {
            if first.theta.len() != ev.theta.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.theta.len(),
                    got: ev.theta.len(),
                });
            }
        }
        let key = theta_key(&ev.theta);
        if self.index.contains_key(&key) {
            return Err(Error::DuplicatePoint);
        }
        let pos = self.entries.len();
        self.index.insert(key, pos);
        self.entries.push(ev);
        Ok(pos)
    }

    pub fn get(&self, theta: &[f64]) -> Option<&Evaluation> {
        self.index.get(&theta_key(theta)).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.index.contains_key(&theta_key(theta))
    }

    pub fn entries(&self) -> &[Evaluation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Evaluation> {
        self.entries.iter()
    }
}

impl FromIterator<Evaluation> for EvaluationLedger {
    /// Collects evaluations, silently dropping duplicates.
    fn from_iter<I: IntoIterator<Item = Evaluation>>(iter: I) -> Self {
        let mut ledger = Self::new();
        for ev in iter {
            let _ = ledger.insert(ev);
        }
        ledger
    }
}
