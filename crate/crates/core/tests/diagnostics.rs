use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use surrogate_mcmc_core::diagnostics::*;
use surrogate_mcmc_core::error::Error;
use surrogate_mcmc_core::ledger::EvaluationLedger;
use surrogate_mcmc_core::samplers::{Algorithm, ChainTrace, IterationRecord};

fn record(theta: f64, accepted: bool, stage: Option<(f64, f64)>) -> IterationRecord {
    IterationRecord {
        theta: vec![theta],
        stage1_log_alpha: stage.map_or(0.0, |s| s.0),
        stage1_accepted: stage.is_some() || accepted,
        stage2_log_alpha: stage.map(|s| s.1),
        stage2_accepted: stage.map(|_| accepted),
        accepted,
        full_eval: stage.is_some(),
    }
}

fn trace(records: Vec<IterationRecord>, burnin: usize, algorithm: Algorithm) -> ChainTrace {
    ChainTrace {
        algorithm,
        theta0: records[0].theta.clone(),
        records,
        n_burnin: burnin,
        ledger: EvaluationLedger::new(),
        full_evaluations: 0,
        init_evaluations: 3,
        final_hyper: None,
        hyper_updates: 0,
        gp_skipped: 0,
    }
}

#[test]
fn acceptance_rate_examples() {
    let recs: Vec<IterationRecord> = (0..2500)
        .map(|k| record(0.0, k >= 500 && (k - 500) < 740, None))
        .collect();
    assert_abs_diff_eq!(
        acceptance_rate(&trace(recs, 500, Algorithm::Mh)).unwrap(),
        0.37,
        epsilon = 1e-15
    );
    let all: Vec<IterationRecord> = (0..20).map(|_| record(0.0, true, None)).collect();
    assert_eq!(acceptance_rate(&trace(all.clone(), 5, Algorithm::Mh)).unwrap(), 1.0);
    let none: Vec<IterationRecord> = (0..20).map(|_| record(0.0, false, None)).collect();
    assert_eq!(acceptance_rate(&trace(none, 5, Algorithm::Mh)).unwrap(), 0.0);
    assert!(acceptance_rate(&trace(all, 20, Algorithm::Mh)).is_err());
}

#[test]
fn ess_of_independent_draws() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let e = ess(&xs).unwrap();
        assert!((1600.0..=2400.0).contains(&e), "seed {seed}: {e}");
    }
}

#[test]
fn ess_of_ar1_chain() {
    let rho: f64 = 0.5;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..5000)
            .map(|_| {
                x = rho * x + (1.0 - rho * rho).sqrt() * rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        let expected = 5000.0 * (1.0 - rho) / (1.0 + rho);
        let e = ess(&xs).unwrap();
        assert!((e / expected - 1.0).abs() <= 0.2, "seed {seed}: {e} vs {expected}");
    }
}

#[test]
fn ess_of_constant_chain_is_degenerate() {
    assert!(matches!(ess(&[1.5; 50]), Err(Error::DegenerateChain(_))));
    assert!(ess(&[1.0, 2.0]).is_err());
}

#[test]
fn esjd_and_sq_distance_examples() {
    assert_eq!(esjd(&[vec![2.0], vec![2.0], vec![2.0]]).unwrap(), 0.0);
    let alt: Vec<Vec<f64>> = (0..11).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect();
    assert_eq!(esjd(&alt).unwrap(), 4.0);
    assert_eq!(esjd(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap(), 2.5);
    assert!(esjd(&[vec![0.0]]).is_err());
    assert_eq!(sq_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
    assert_abs_diff_eq!(sq_distance(&[0.12], &[0.14]).unwrap(), 4e-4, epsilon = 1e-15);
    assert_eq!(sq_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert!(sq_distance(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn alpha_gap_examples() {
    let recs = vec![
        record(0.0, true, Some((0.8f64.ln(), 0.6f64.ln()))),
        record(0.0, false, None),
        record(0.0, true, Some((0.5f64.ln(), 0.9f64.ln()))),
    ];
    let s = alpha_gap_series(&trace(recs, 0, Algorithm::GpMh), 10).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].0, 0);
    assert_abs_diff_eq!(s[0].1, 0.3, epsilon = 1e-12);

    let equal: Vec<IterationRecord> = (0..50)
        .map(|k| record(0.0, true, Some((-0.1 * k as f64, -0.1 * k as f64))))
        .collect();
    assert!(alpha_gap_series(&trace(equal, 0, Algorithm::GpMh), 10)
        .unwrap()
        .iter()
        .all(|(_, g)| *g == 0.0));

    let none: Vec<IterationRecord> = (0..30).map(|_| record(0.0, false, None)).collect();
    assert!(alpha_gap_series(&trace(none, 0, Algorithm::GpMh), 10)
        .unwrap()
        .is_empty());
}

#[test]
fn eval_pct_conventions() {
    let recs: Vec<IterationRecord> = (0..100)
        .map(|k| record(0.0, true, if k < 20 { Some((0.0, 0.0)) } else { None }))
        .collect();
    assert_abs_diff_eq!(
        eval_pct(&trace(recs, 10, Algorithm::GpMh)).unwrap(),
        23.0,
        epsilon = 1e-12
    );
    let base: Vec<IterationRecord> = (0..100).map(|_| record(0.0, true, Some((0.0, 0.0)))).collect();
    assert_eq!(eval_pct(&trace(base, 10, Algorithm::Mh)).unwrap(), 100.0);
}

#[test]
fn metrics_count_frozen_coordinates_as_one() {
    let recs: Vec<IterationRecord> = (0..100).map(|_| record(0.5, false, None)).collect();
    let m = compute_metrics(&trace(recs, 10, Algorithm::Mh), &[0.0], 25).unwrap();
    assert_eq!(m.ess, vec![1.0]);
    assert_eq!(m.esjd, 0.0);
    assert_abs_diff_eq!(m.sd, 0.25, epsilon = 1e-15);
}

#[test]
fn aggregate_means_and_medians() {
    let s = Summary::of(&[1.0, 5.0, 3.0, 100.0]).unwrap();
    assert_eq!(s.mean, 27.25);
    assert_eq!(s.median, 4.0);
    assert!(Summary::of(&[]).is_err());
}

proptest! {
    #[test]
    fn ess_is_affine_invariant(seed in 0u64..500, a in 0.01..100.0f64, b in -50.0..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..300).map(|_| rng.sample(StandardNormal)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let (ex, ey) = (ess(&xs).unwrap(), ess(&ys).unwrap());
        prop_assert!((ex - ey).abs() <= 1e-6 * ex);
    }

    #[test]
    fn jumps_are_translation_invariant(seed in 0u64..500, shift in -100.0..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chain: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let moved: Vec<Vec<f64>> = chain.iter().map(|v| v.iter().map(|x| x + shift).collect()).collect();
        prop_assert!((esjd(&chain).unwrap() - esjd(&moved).unwrap()).abs() <= 1e-9);
        prop_assert!((sq_distance(&chain[0], &chain[1]).unwrap() - sq_distance(&moved[0], &moved[1]).unwrap()).abs() <= 1e-9);
    }
}
