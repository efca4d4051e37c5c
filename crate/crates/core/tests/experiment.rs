use std::collections::HashSet;

use netmiss_core::estimate::EstimationConfig;
use netmiss_core::experiment::{
    failure_rate, quantile, relative_metrics, run_replicates, spearman, tasks, Band, ExperimentPlan, NamedModel,
    Representation,
};
use netmiss_core::missmodels::MissModel;
use netmiss_core::sampler::{Proposal, SamplerConfig};
use netmiss_core::{fixtures, ModelSpec, Term};
use proptest::prelude::*;

fn plan(replicates: usize) -> ExperimentPlan {
    let n = 10;
    let mut estimation = EstimationConfig::for_vertices(n);
    estimation.sampler.burn_in = 5_000;
    estimation.final_draws = 2_000;
    ExperimentPlan {
        network_id: "toy".into(),
        spec: ModelSpec::new(vec![Term::Edges], vec![0.0]).unwrap(),
        models: vec![
            NamedModel { name: "hbern".into(), model: MissModel::HomBernoulli { p: 0.2 } },
            NamedModel { name: "hbern2".into(), model: MissModel::HomBernoulli { p: 0.4 } },
        ],
        fractions: vec![0.1, 0.5],
        representations: vec![Representation::Miss, Representation::Zero],
        replicates,
        base_seed: 42,
        estimation,
        miss_sampler: SamplerConfig {
            burn_in: 1_000,
            thin: 1,
            n_draws: 1,
            seed: 0,
            proposal: Proposal::Swap,
            keep_graphs: false,
        },
    }
}

/// Quantile by direct interpolation between order statistics.
fn quantile_oracle(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q * (s.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    s[lo] * (1.0 - (pos - lo as f64)) + s[hi] * (pos - lo as f64)
}

/// Pearson correlation of average ranks computed by counting.
fn spearman_oracle(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|x| {
                let below = v.iter().filter(|y| *y < x).count() as f64;
                let tied = v.iter().filter(|y| *y == x).count() as f64;
                below + (tied + 1.0) / 2.0
            })
            .collect()
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn tasks_cover_the_grid_once() {
    let p = plan(3);
    let t = tasks(&p);
    assert_eq!(t.len(), p.record_count());
    assert_eq!(t.len(), 2 * 2 * 2 * 3);
    let cells: HashSet<_> = t.iter().map(|t| (t.model, t.fraction, t.representation, t.replicate)).collect();
    assert_eq!(cells.len(), t.len());
    let seeds: HashSet<_> = t.iter().map(|t| t.seed).collect();
    assert_eq!(seeds.len(), t.len());
    let mut sorted = t.clone();
    sorted.sort_by_key(|t| (t.model, t.fraction, t.representation, t.replicate));
    assert_eq!(sorted, t);
    assert_eq!(tasks(&p), t);
}

#[test]
fn replicates_are_reproducible_and_labelled() {
    let p = plan(2);
    let x = fixtures::clustered(10, 5).unwrap();
    let a = run_replicates(&p, &x, None).unwrap();
    let b = run_replicates(&p, &x, None).unwrap();
    assert_eq!(a.len(), 16);
    for (r, s) in a.iter().zip(&b) {
        assert_eq!(r.seed, s.seed);
        assert_eq!(r.result.theta_hat, s.result.theta_hat);
        assert_eq!(r.missing_count, (r.fraction * 45.0_f64).round() as usize);
        let expected_na = if r.representation == Representation::Miss { r.missing_count } else { 0 };
        assert_eq!(r.input_missing, expected_na);
    }
    let rates = failure_rate(&a, |r| r.model.clone());
    assert_eq!(rates.len(), 2);
    assert!(rates.values().all(|c| c.total == 8));
}

#[test]
fn relative_metrics_against_baseline() {
    let p = plan(1);
    let x = fixtures::clustered(10, 5).unwrap();
    let recs = run_replicates(&p, &x, None).unwrap();
    let base = &recs[0].result;
    for r in recs.iter().filter(|r| r.result.converged && base.converged) {
        let m = relative_metrics(&r.result, base).unwrap();
        let want = (r.result.theta_hat[0] - base.theta_hat[0]) / base.theta_hat[0];
        assert!((m.rbias[0].unwrap() - want).abs() < 1e-12);
        assert!((m.rse[0].unwrap() - r.result.se[0] / base.se[0]).abs() < 1e-12);
    }
}

#[test]
fn invalid_plans_rejected() {
    let mut p = plan(1);
    p.fractions = vec![1.0];
    assert!(p.validate().is_err());
    let mut p = plan(1);
    p.replicates = 0;
    assert!(p.validate().is_err());
}

#[test]
fn band_ignores_non_finite() {
    let b = Band::from_values(&[1.0, f64::NAN, 3.0, f64::INFINITY]);
    assert_eq!(b.count, 2);
    assert_eq!(b.mean, 2.0);
    assert!(b.covers(2.0));
    assert_eq!(Band::from_values(&[]).count, 0);
}

proptest! {
    #[test]
    fn quantile_matches_oracle(v in proptest::collection::vec(-100.0f64..100.0, 1..60), q in 0.0f64..=1.0) {
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        prop_assert!((quantile(&s, q) - quantile_oracle(&v, q)).abs() < 1e-9);
    }

    #[test]
    fn spearman_matches_oracle(pairs in proptest::collection::vec((0u8..6, 0u8..6), 3..40)) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let want = spearman_oracle(&a, &b);
        let got = spearman(&a, &b);
        prop_assert!((got - want).abs() < 1e-12 || (got.is_nan() && want.is_nan()));
    }
}
