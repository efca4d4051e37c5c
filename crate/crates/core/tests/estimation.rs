mod common;

use common::{adjacency, edges, gwesp, structural};
use netmiss_core::estimate::{mcmcmle, mcmcmle_mar, mple, EstimationConfig, FailureKind, Method};
use netmiss_core::graph::{apply_mask, dyads};
use netmiss_core::missmodels::{gen_independent, MissModel};
use netmiss_core::{fixtures, Graph, ModelSpec, PartialGraph, Term};

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn quick(n: usize, seed: u64) -> EstimationConfig {
    let mut c = EstimationConfig::for_vertices(n);
    c.sampler.burn_in = 20_000;
    c.sampler.seed = seed;
    c.final_draws = 20_000;
    c
}

fn edges_only() -> ModelSpec {
    ModelSpec::new(vec![Term::Edges], vec![0.0]).unwrap()
}

#[test]
fn edges_mle_is_the_log_odds_of_density() {
    let g = fixtures::clustered(14, 3).unwrap();
    let target = logit(g.edge_count() as f64 / g.dyad_count() as f64);
    let fit = mcmcmle(&edges_only(), &g, &quick(14, 5), None).unwrap();
    assert!(fit.converged, "{:?}", fit.failure);
    assert_eq!(fit.method, Method::McmcMle);
    assert!((fit.theta_hat[0] - target).abs() < 4.0 * fit.mc_se[0] + 0.01, "{} vs {target}", fit.theta_hat[0]);
    // Fisher information of a Bernoulli graph
    let p = 1.0 / (1.0 + (-target).exp());
    let se = 1.0 / (g.dyad_count() as f64 * p * (1.0 - p)).sqrt();
    assert!((fit.se[0] / se - 1.0).abs() < 0.05, "{} vs {se}", fit.se[0]);
}

#[test]
fn face_value_edges_uses_observed_dyads_only() {
    let n = 16;
    let g = fixtures::clustered(n, 9).unwrap();
    let d = gen_independent(&MissModel::HomBernoulli { p: 0.3 }, n, 4, Some(0.3), None).unwrap();
    let p = apply_mask(&g, &d).unwrap();
    let target = logit(p.observed_edge_count() as f64 / p.observed_dyad_count() as f64);
    let fit = mcmcmle_mar(&edges_only(), &p, &quick(n, 8), None).unwrap();
    assert_eq!(fit.method, Method::FaceValue);
    assert!(fit.converged, "{:?}", fit.failure);
    assert!((fit.theta_hat[0] - target).abs() < 4.0 * fit.mc_se[0] + 0.01, "{} vs {target}", fit.theta_hat[0]);
}

#[test]
fn mple_solves_its_score_equations() {
    let g = fixtures::clustered(12, 4).unwrap();
    let spec = ModelSpec::new(vec![Term::Edges, Term::Gwesp(2f64.ln())], vec![0.0, 0.0]).unwrap();
    let fit = mple(&spec, &g, None).unwrap();
    let theta = &fit.theta_hat;
    let a = adjacency(&g);
    let mut score = [0.0; 2];
    for (i, j) in dyads(g.n()) {
        let (mut on, mut off) = (a.clone(), a.clone());
        on[i][j] = true;
        on[j][i] = true;
        off[i][j] = false;
        off[j][i] = false;
        let delta = [edges(&on) - edges(&off), gwesp(&on, 2f64.ln()) - gwesp(&off, 2f64.ln())];
        let eta = theta[0] * delta[0] + theta[1] * delta[1];
        let resid = a[i][j] as u8 as f64 - 1.0 / (1.0 + (-eta).exp());
        for k in 0..2 {
            score[k] += resid * delta[k];
        }
    }
    assert!(score.iter().all(|s| s.abs() < 1e-6), "{score:?}");
}

#[test]
fn no_observed_dyads_is_flat() {
    let n = 8;
    let states = dyads(n).map(|d| (d, netmiss_core::DyadState::Missing));
    let p = PartialGraph::from_states(n, states).unwrap();
    let fit = mcmcmle_mar(&structural(&[0.0, 0.0, 0.0]), &p, &quick(n, 1), None).unwrap();
    assert_eq!(fit.failure, Some(FailureKind::NonPositiveDefiniteInfo));
    assert!(fit.theta_hat.iter().all(|t| t.is_nan()));
}

#[test]
fn empty_graph_has_no_finite_estimate() {
    let fit = mcmcmle(&edges_only(), &Graph::empty(10), &quick(10, 2), None).unwrap();
    assert!(!fit.converged);
}

#[test]
fn collinear_statistics_are_flagged() {
    let mut data = netmiss_core::NodeData::new(12);
    data.add_numeric("one", vec![1.0; 12]).unwrap();
    let spec = ModelSpec::new(vec![Term::Edges, Term::NodeCovSum("one".into())], vec![0.0, 0.0]).unwrap();
    let g = fixtures::clustered(12, 1).unwrap();
    let fit = mcmcmle(&spec, &g, &quick(12, 3), Some(&data)).unwrap();
    assert!(matches!(fit.failure, Some(FailureKind::ExcessiveCorrelation | FailureKind::NonPositiveDefiniteInfo)));
}

#[test]
fn same_seed_same_fit() {
    let g = fixtures::clustered(12, 6).unwrap();
    let spec = structural(&[0.0, 0.0, 0.0]);
    let a = mcmcmle(&spec, &g, &quick(12, 77), None).unwrap();
    let b = mcmcmle(&spec, &g, &quick(12, 77), None).unwrap();
    assert_eq!(a.theta_hat, b.theta_hat);
    assert_eq!(a.se, b.se);
    assert_eq!(a.failure, b.failure);
}
