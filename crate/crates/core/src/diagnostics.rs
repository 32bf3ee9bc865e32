//! Chain summaries: acceptance rate, effective sample size, expected squared
//! jumping distance, squared distance to the truth, evaluation percentage,
//! and the windowed gap between the two stages' acceptance probabilities.
//!
//! Everything except the evaluation percentage and the α-gap series uses
//! post-burn-in iterations only.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{check_dim, Error, Result};
use crate::samplers::ChainTrace;

/// Fraction of post-burn-in iterations whose final decision was accept.
pub fn acceptance_rate(trace: &ChainTrace) -> Result<f64> {
    let post = trace.post_burnin();
    if post.is_empty() {
        return Err(Error::InvalidArgument("no post-burn-in iterations".into()));
    }
    Ok(post.iter().filter(|r| r.accepted).count() as f64 / post.len() as f64)
}

/// Effective sample size `N / (1 + 2 Σ ρ̂_k)`, truncating the sum at the
/// first pair `ρ̂_{2m} + ρ̂_{2m+1}` that is not positive. Capped at `N`.
pub fn ess(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < 10 {
        return Err(Error::InvalidArgument("ESS needs at least 10 samples".into()));
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = chain.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    let scale = centered.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(mean.abs());
    if !(c0 > 0.0) || c0.sqrt() <= 1e-14 * scale {
        return Err(Error::DegenerateChain("zero variance"));
    }
    // tau = -1 + 2 * sum of positive pair sums, with rho_0 = 1
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    Ok((n as f64 / tau).min(n as f64))
}

/// Mean squared Euclidean distance between consecutive states.
pub fn esjd(chain: &[Vec<f64>]) -> Result<f64> {
    if chain.len() < 2 {
        return Err(Error::InvalidArgument("ESJD needs at least 2 states".into()));
    }
    let mut total = 0.0;
    for w in chain.windows(2) {
        check_dim(w[0].len(), w[1].len())?;
        total += sq_distance(&w[0], &w[1])?;
    }
    Ok(total / (chain.len() - 1) as f64)
}

/// `‖a − b‖²`.
pub fn sq_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Windowed means of `|α₁ − α₂|` over iterations that reached stage 2.
/// Windows are consecutive blocks of `window` iterations (burn-in included);
/// windows without a stage-2 decision are omitted.
pub fn alpha_gap_series(trace: &ChainTrace, window: usize) -> Result<Vec<(usize, f64)>> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be positive".into()));
    }
    let mut out: Vec<(usize, f64)> = Vec::new();
    let mut current: Option<(usize, f64, usize)> = None;
    for (k, r) in trace.records.iter().enumerate() {
        let Some(a2) = r.stage2_log_alpha.filter(|_| r.stage1_accepted) else {
            continue;
        };
        let gap = (r.stage1_log_alpha.exp() - a2.exp()).abs();
        let w = k / window;
        match &mut current {
            Some((cw, sum, count)) if *cw == w => {
                *sum += gap;
                *count += 1;
            }
            _ => {
                if let Some((cw, sum, count)) = current.take() {
                    out.push((cw, sum / count as f64));
                }
                current = Some((w, gap, 1));
            }
        }
    }
    if let Some((cw, sum, count)) = current {
        out.push((cw, sum / count as f64));
    }
    Ok(out)
}

/// `100 · full evaluations / iterations`, capped at 100. For the two-stage
/// samplers the surrogate's initialization evaluations count; a baseline's
/// evaluation at the starting point does not.
pub fn eval_pct(trace: &ChainTrace) -> Result<f64> {
    if trace.n_iters() == 0 {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let mut n = trace.records.iter().filter(|r| r.full_eval).count() as u64;
    if trace.algorithm.is_two_stage() {
        n += trace.init_evaluations;
    }
    Ok((100.0 * n as f64 / trace.n_iters() as f64).min(100.0))
}

/// Mean of the post-burn-in states.
pub fn posterior_mean(trace: &ChainTrace) -> Result<Vec<f64>> {
    let post = trace.post_burnin();
    if post.is_empty() {
        return Err(Error::InvalidArgument("no post-burn-in iterations".into()));
    }
    let mut mean = alloc::vec![0.0; trace.dim()];
    for r in post {
        for (m, v) in mean.iter_mut().zip(&r.theta) {
            *m += v;
        }
    }
    let n = post.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Post-burn-in samples of coordinate `j`.
pub fn coordinate(trace: &ChainTrace, j: usize) -> Vec<f64> {
    trace.post_burnin().iter().map(|r| r.theta[j]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub acceptance_rate: f64,
    /// Per-dimension ESS; a coordinate that never moved counts as 1.
    pub ess: Vec<f64>,
    pub ess_mean: f64,
    pub ess_min: f64,
    pub esjd: f64,
    pub eval_pct: f64,
    pub sd: f64,
    pub posterior_mean: Vec<f64>,
    pub full_evaluations: u64,
    pub n_iters: usize,
    pub n_burnin: usize,
    pub alpha_gap_series: Vec<(usize, f64)>,
}

/// All chain summaries; `window` sets the α-gap window length.
pub fn compute_metrics(trace: &ChainTrace, true_params: &[f64], window: usize) -> Result<MetricsReport> {
    check_dim(trace.dim(), true_params.len())?;
    let post = trace.post_burnin();
    let mut ess_dims = Vec::with_capacity(trace.dim());
    for j in 0..trace.dim() {
        let v = match ess(&coordinate(trace, j)) {
            Ok(v) => v,
            Err(Error::DegenerateChain(_)) => 1.0,
            Err(e) => return Err(e),
        };
        ess_dims.push(v);
    }
    let ess_mean = ess_dims.iter().sum::<f64>() / ess_dims.len() as f64;
    let ess_min = ess_dims.iter().copied().fold(f64::INFINITY, f64::min);
    let states: Vec<Vec<f64>> = post.iter().map(|r| r.theta.clone()).collect();
    let mean = posterior_mean(trace)?;
    Ok(MetricsReport {
        acceptance_rate: acceptance_rate(trace)?,
        ess: ess_dims,
        ess_mean,
        ess_min,
        esjd: esjd(&states)?,
        eval_pct: eval_pct(trace)?,
        sd: sq_distance(&mean, true_params)?,
        posterior_mean: mean,
        full_evaluations: trace.full_evaluations,
        n_iters: trace.n_iters(),
        n_burnin: trace.n_burnin,
        alpha_gap_series: alpha_gap_series(trace, window)?,
    })
}

/// Mean and median of one metric across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("nothing to summarize".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Ok(Self {
            mean: v.iter().sum::<f64>() / n as f64,
            median,
        })
    }
}

/// Replicate aggregate of the table metrics (ESS averaged over dimensions
/// first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateMetrics {
    pub replicates: usize,
    pub acceptance_rate: Summary,
    pub ess: Summary,
    pub ess_min: Summary,
    pub esjd: Summary,
    pub eval_pct: Summary,
    pub sd: Summary,
}

pub fn aggregate(reports: &[MetricsReport]) -> Result<AggregateMetrics> {
    let pick = |f: fn(&MetricsReport) -> f64| Summary::of(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(AggregateMetrics {
        replicates: reports.len(),
        acceptance_rate: pick(|r| r.acceptance_rate)?,
        ess: pick(|r| r.ess_mean)?,
        ess_min: pick(|r| r.ess_min)?,
        esjd: pick(|r| r.esjd)?,
        eval_pct: pick(|r| r.eval_pct)?,
        sd: pick(|r| r.sd)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::EvaluationLedger;
    use crate::samplers::{Algorithm, IterationRecord};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn trace(records: Vec<IterationRecord>, burnin: usize) -> ChainTrace {
        ChainTrace {
            algorithm: Algorithm::GpMh,
            theta0: records[0].theta.clone(),
            records,
            n_burnin: burnin,
            ledger: EvaluationLedger::new(),
            full_evaluations: 0,
            init_evaluations: 0,
            final_hyper: None,
            hyper_updates: 0,
            gp_skipped: 0,
        }
    }

    fn rec(x: f64, accepted: bool) -> IterationRecord {
        IterationRecord {
            theta: vec![x],
            stage1_log_alpha: 0.0,
            stage1_accepted: accepted,
            stage2_log_alpha: accepted.then_some(0.0),
            stage2_accepted: accepted.then_some(accepted),
            accepted,
            full_eval: accepted,
        }
    }

    #[test]
    fn acceptance_rate_counts() {
        let t = trace((0..2000).map(|i| rec(i as f64, i < 740)).collect(), 0);
        assert_abs_diff_eq!(acceptance_rate(&t).unwrap(), 0.37, epsilon = 1e-15);
        let t = trace(vec![rec(0.0, true); 5], 5);
        assert!(acceptance_rate(&t).is_err());
        let t = trace(vec![rec(0.0, false); 5], 1);
        assert_eq!(acceptance_rate(&t).unwrap(), 0.0);
    }

    #[test]
    fn esjd_examples() {
        assert_eq!(esjd(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap(), 0.0);
        let alt: Vec<Vec<f64>> = (0..10).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect();
        assert_eq!(esjd(&alt).unwrap(), 4.0);
        assert_eq!(esjd(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap(), 2.5);
    }

    #[test]
    fn sq_distance_examples() {
        assert_eq!(sq_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        assert_abs_diff_eq!(sq_distance(&[0.12], &[0.14]).unwrap(), 4e-4, epsilon = 1e-15);
        assert!(sq_distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn constant_chain_is_degenerate() {
        assert_eq!(ess(&[2.5; 50]), Err(Error::DegenerateChain("zero variance")));
        assert!(ess(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn alpha_gap_hand_example() {
        let mut a = rec(0.0, true);
        a.stage1_log_alpha = 0.0;
        a.stage2_log_alpha = Some(0.8f64.ln());
        let mut b = rec(0.0, true);
        b.stage1_log_alpha = 0.5f64.ln();
        b.stage2_log_alpha = Some(0.9f64.ln());
        let t = trace(vec![a, rec(0.0, false), b], 0);
        let s = alpha_gap_series(&t, 10).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].0, 0);
        assert_abs_diff_eq!(s[0].1, 0.3, epsilon = 1e-12);
        let none = trace(vec![rec(0.0, false); 3], 0);
        assert!(alpha_gap_series(&none, 10).unwrap().is_empty());
    }

    #[test]
    fn summary_median() {
        let s = Summary::of(&[3.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.mean, 4.0);
    }
}
