//! Metropolis–Hastings samplers over graph space and an exact enumerator
//! for tiny vertex sets.
//!
//! Three chains share one target, `P(g) ∝ exp(theta . z(g))`:
//!
//! * [`sample_free`]: uniform dyad toggles over all dyads;
//! * [`sample_fixed_count`]: swaps of one uniform edge with one uniform
//!   non-edge, so the edge count never changes;
//! * [`sample_conditional`]: toggles restricted to the NA dyads of a
//!   [`PartialGraph`], giving `X_mis | X_obs`.
//!
//! All proposals are symmetric, so the acceptance ratio is
//! `exp(theta . (z(g') - z(g)))`.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{dyad_count, dyads, Graph, NodeData, PartialGraph};
use crate::linalg::{self, Matrix};
use crate::math;
use crate::rng::{self, Rng};
use crate::stats::{CompiledSpec, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Proposal {
    Toggle,
    Swap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Proposals discarded before the first retained draw.
    pub burn_in: usize,
    /// Proposals between retained draws.
    pub thin: usize,
    pub n_draws: usize,
    pub seed: u64,
    pub proposal: Proposal,
    /// Keep the graphs themselves, not only their statistics.
    pub keep_graphs: bool,
}

impl SamplerConfig {
    /// Defaults for graphs on `n` vertices: burn-in of `10^4 * N` proposals,
    /// thinning `N`, where `N` is the dyad count.
    pub fn for_vertices(n: usize) -> Self {
        let dyads = dyad_count(n).max(1);
        SamplerConfig {
            burn_in: 10_000 * dyads,
            thin: dyads,
            n_draws: 1000,
            seed: 0,
            proposal: Proposal::Toggle,
            keep_graphs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.n_draws == 0 {
            return Err(Error::InvalidParameter("thin and n_draws must be at least 1".into()));
        }
        Ok(())
    }
}

/// Retained draws of one chain.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    /// Statistic vector of every retained draw.
    pub stats: Vec<Vec<f64>>,
    /// Retained graphs; empty unless `keep_graphs` was set.
    pub graphs: Vec<Graph>,
    /// Accepted fraction of post-burn-in proposals.
    pub acceptance_rate: f64,
    /// Effective sample size per statistic.
    pub ess: Vec<f64>,
    /// State of the chain after the last proposal.
    pub last: Graph,
}

impl SampleBatch {
    pub fn mean_cov(&self) -> (Vec<f64>, Matrix) {
        linalg::mean_cov(&self.stats)
    }

    pub fn min_ess(&self) -> f64 {
        self.ess.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }
}

/// Draws from the ERGM `spec` on `n` vertices, starting from the empty graph.
/// With [`Proposal::Swap`] the chain keeps the edge count of its start.
pub fn sample_free(spec: &ModelSpec, n: usize, cfg: &SamplerConfig, data: Option<&NodeData>) -> Result<SampleBatch> {
    sample_free_from(spec, Graph::empty(n), cfg, data)
}

pub fn sample_free_from(
    spec: &ModelSpec,
    initial: Graph,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<SampleBatch> {
    cfg.validate()?;
    let compiled = spec.compile(initial.n(), data)?;
    let mut rng = rng::rng(cfg.seed);
    match cfg.proposal {
        Proposal::Toggle => {
            let free: Vec<(u32, u32)> = dyads(initial.n()).map(|(i, j)| (i as u32, j as u32)).collect();
            Ok(toggle_chain(&compiled, spec.theta(), initial, &free, cfg, &mut rng))
        }
        Proposal::Swap => Ok(swap_chain(&compiled, spec.theta(), initial, cfg, &mut rng)),
    }
}

/// Draws from `spec` restricted to graphs with exactly `m` edges,
/// starting from a uniformly random `m`-edge graph.
pub fn sample_fixed_count(
    spec: &ModelSpec,
    n: usize,
    m: usize,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<SampleBatch> {
    let total = dyad_count(n);
    if m > total {
        return Err(Error::EdgeCountOutOfRange { m, max: total });
    }
    let mut rng = rng::rng(rng::derive_seed(cfg.seed, &[0x5eed]));
    let pairs: Vec<(usize, usize)> = dyads(n).collect();
    let mut initial = Graph::empty(n);
    for k in index::sample(&mut rng, total, m) {
        let (i, j) = pairs[k];
        initial.set(i, j, true);
    }
    sample_fixed_count_from(spec, initial, cfg, data)
}

pub fn sample_fixed_count_from(
    spec: &ModelSpec,
    initial: Graph,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<SampleBatch> {
    cfg.validate()?;
    let compiled = spec.compile(initial.n(), data)?;
    let mut rng = rng::rng(cfg.seed);
    Ok(swap_chain(&compiled, spec.theta(), initial, cfg, &mut rng))
}

/// Draws completions of `p` from `spec` conditional on its observed dyads.
/// The chain starts with NA dyads filled at the observed density.
pub fn sample_conditional(
    spec: &ModelSpec,
    p: &PartialGraph,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<SampleBatch> {
    let mut rng = rng::rng(rng::derive_seed(cfg.seed, &[0xf111]));
    let observed = p.observed_dyad_count();
    let fill = if observed == 0 { 0.5 } else { p.observed_edge_count() as f64 / observed as f64 };
    let mut initial = p.observed().clone();
    for (i, j) in p.missing_dyads() {
        if rng.random::<f64>() < fill {
            initial.set(i, j, true);
        }
    }
    sample_conditional_from(spec, p, initial, cfg, data)
}

/// As [`sample_conditional`] from a given completion of `p`.
pub fn sample_conditional_from(
    spec: &ModelSpec,
    p: &PartialGraph,
    initial: Graph,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<SampleBatch> {
    cfg.validate()?;
    if !p.is_completion(&initial) {
        return Err(Error::InvalidParameter("initial graph disagrees with observed dyads".into()));
    }
    let compiled = spec.compile(p.n(), data)?;
    let free: Vec<(u32, u32)> = p.missing_dyads().into_iter().map(|(i, j)| (i as u32, j as u32)).collect();
    let mut rng = rng::rng(cfg.seed);
    Ok(toggle_chain(&compiled, spec.theta(), initial, &free, cfg, &mut rng))
}

#[inline]
fn accept(rng: &mut Rng, log_ratio: f64) -> bool {
    log_ratio >= 0.0 || math::ln(rng.random::<f64>()) < log_ratio
}

struct Recorder<'a> {
    compiled: &'a CompiledSpec<'a>,
    keep_graphs: bool,
    stats: Vec<Vec<f64>>,
    graphs: Vec<Graph>,
}

impl<'a> Recorder<'a> {
    fn new(compiled: &'a CompiledSpec<'a>, cfg: &SamplerConfig) -> Self {
        Recorder { compiled, keep_graphs: cfg.keep_graphs, stats: Vec::with_capacity(cfg.n_draws), graphs: Vec::new() }
    }

    fn record(&mut self, g: &Graph) {
        self.stats.push(self.compiled.stats(g));
        if self.keep_graphs {
            self.graphs.push(g.clone());
        }
    }

    fn finish(self, accepted: usize, proposed: usize, last: Graph) -> SampleBatch {
        let ess = effective_sample_sizes(&self.stats);
        SampleBatch {
            stats: self.stats,
            graphs: self.graphs,
            acceptance_rate: if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 },
            ess,
            last,
        }
    }
}

fn toggle_chain(
    compiled: &CompiledSpec<'_>,
    theta: &[f64],
    mut g: Graph,
    free: &[(u32, u32)],
    cfg: &SamplerConfig,
    rng: &mut Rng,
) -> SampleBatch {
    let mut rec = Recorder::new(compiled, cfg);
    let step = |g: &mut Graph, rng: &mut Rng| -> bool {
        let (i, j) = free[rng.random_range(0..free.len())];
        let (i, j) = (i as usize, j as usize);
        let delta = compiled.weighted_change(theta, g, i, j);
        let log_ratio = if g.has_edge(i, j) { -delta } else { delta };
        if accept(rng, log_ratio) {
            g.toggle(i, j);
            true
        } else {
            false
        }
    };
    if free.is_empty() {
        for _ in 0..cfg.n_draws {
            rec.record(&g);
        }
        return rec.finish(0, 0, g);
    }
    for _ in 0..cfg.burn_in {
        step(&mut g, rng);
    }
    let mut accepted = 0;
    for _ in 0..cfg.n_draws {
        for _ in 0..cfg.thin {
            accepted += step(&mut g, rng) as usize;
        }
        rec.record(&g);
    }
    rec.finish(accepted, cfg.n_draws * cfg.thin, g)
}

fn swap_chain(
    compiled: &CompiledSpec<'_>,
    theta: &[f64],
    mut g: Graph,
    cfg: &SamplerConfig,
    rng: &mut Rng,
) -> SampleBatch {
    let pairs: Vec<(u32, u32)> = dyads(g.n()).map(|(i, j)| (i as u32, j as u32)).collect();
    let (mut on, mut off): (Vec<u32>, Vec<u32>) =
        (0..pairs.len() as u32).partition(|&k| g.has_edge(pairs[k as usize].0 as usize, pairs[k as usize].1 as usize));
    let mut rec = Recorder::new(compiled, cfg);
    if on.is_empty() || off.is_empty() {
        for _ in 0..cfg.n_draws {
            rec.record(&g);
        }
        return rec.finish(0, 0, g);
    }
    let mut step = |g: &mut Graph, rng: &mut Rng| -> bool {
        let a = rng.random_range(0..on.len());
        let b = rng.random_range(0..off.len());
        let (i, j) = pairs[on[a] as usize];
        let (k, l) = pairs[off[b] as usize];
        let (i, j, k, l) = (i as usize, j as usize, k as usize, l as usize);
        let removed = compiled.weighted_change(theta, g, i, j);
        g.set(i, j, false);
        let added = compiled.weighted_change(theta, g, k, l);
        if accept(rng, added - removed) {
            g.set(k, l, true);
            core::mem::swap(&mut on[a], &mut off[b]);
            true
        } else {
            g.set(i, j, true);
            false
        }
    };
    for _ in 0..cfg.burn_in {
        step(&mut g, rng);
    }
    let mut accepted = 0;
    for _ in 0..cfg.n_draws {
        for _ in 0..cfg.thin {
            accepted += step(&mut g, rng) as usize;
        }
        rec.record(&g);
    }
    rec.finish(accepted, cfg.n_draws * cfg.thin, g)
}

/// Effective sample size of every column of `rows`.
pub fn effective_sample_sizes(rows: &[Vec<f64>]) -> Vec<f64> {
    let p = rows.first().map_or(0, Vec::len);
    (0..p)
        .map(|k| {
            let series: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            effective_sample_size(&series)
        })
        .collect()
}

/// Effective sample size from the initial monotone positive sequence
/// estimate of the integrated autocorrelation time, capped at the series length.
/// A constant series has no autocorrelation and counts in full.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let m = series.len();
    if m < 4 {
        return m as f64;
    }
    let mean = series.iter().sum::<f64>() / m as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centred[..m - lag].iter().zip(&centred[lag..]).map(|(a, b)| a * b).sum::<f64>() / m as f64
    };
    let gamma0 = autocov(0);
    if !(gamma0 > 1e-12 * (1.0 + mean * mean)) {
        return m as f64;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut t = 0;
    while 2 * t + 1 < m {
        let pair = autocov(2 * t) + autocov(2 * t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        t += 1;
    }
    let tau = (2.0 * sum - gamma0) / gamma0;
    (m as f64 / tau.max(1e-12)).min(m as f64)
}

/// Exact moments of an ERGM by summation over every graph in its support.
#[derive(Clone, Debug)]
pub struct ExactMoments {
    pub mean: Vec<f64>,
    pub cov: Matrix,
    /// `log sum exp(theta . z(g))` over the support.
    pub log_normaliser: f64,
    /// Probability of every graph, indexed by its dyad bitmask (bit `k` = dyad `k`
    /// in canonical order); zero outside the support.
    pub probabilities: Vec<f64>,
}

const ENUMERATION_LIMIT: usize = 5;

/// Exact `E[z]`, `Cov[z]` and normalising constant for `n <= 5`.
pub fn enumerate_exact(spec: &ModelSpec, n: usize, data: Option<&NodeData>) -> Result<ExactMoments> {
    enumerate_where(spec, n, data, |_| true)
}

/// Exact moments restricted to graphs with `m` edges.
pub fn enumerate_fixed_count(spec: &ModelSpec, n: usize, m: usize, data: Option<&NodeData>) -> Result<ExactMoments> {
    if m > dyad_count(n) {
        return Err(Error::EdgeCountOutOfRange { m, max: dyad_count(n) });
    }
    enumerate_where(spec, n, data, |g| g.edge_count() == m)
}

/// Exact moments of the completions of `p`.
pub fn enumerate_conditional(spec: &ModelSpec, p: &PartialGraph, data: Option<&NodeData>) -> Result<ExactMoments> {
    enumerate_where(spec, p.n(), data, |g| p.is_completion(g))
}

fn enumerate_where(
    spec: &ModelSpec,
    n: usize,
    data: Option<&NodeData>,
    keep: impl Fn(&Graph) -> bool,
) -> Result<ExactMoments> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(n));
    }
    let compiled = spec.compile(n, data)?;
    let pairs: Vec<(usize, usize)> = dyads(n).collect();
    let count = 1usize << pairs.len();
    let mut logw = vec![f64::NEG_INFINITY; count];
    let mut stats = vec![Vec::new(); count];
    for (mask, (lw, st)) in logw.iter_mut().zip(stats.iter_mut()).enumerate() {
        let mut g = Graph::empty(n);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                g.set(i, j, true);
            }
        }
        if keep(&g) {
            let z = compiled.stats(&g);
            *lw = z.iter().zip(spec.theta()).map(|(a, b)| a * b).sum();
            *st = z;
        }
    }
    let log_normaliser = math::log_sum_exp(logw.iter().copied());
    if !log_normaliser.is_finite() {
        return Err(Error::Degenerate("empty support".into()));
    }
    let probabilities: Vec<f64> = logw.iter().map(|lw| math::exp(lw - log_normaliser)).collect();
    let support: Vec<Vec<f64>> = stats.iter().filter(|s| !s.is_empty()).cloned().collect();
    let weights: Vec<f64> = probabilities.iter().zip(&stats).filter(|(_, s)| !s.is_empty()).map(|(p, _)| *p).collect();
    let (mean, cov) =
        if spec.is_empty() { (Vec::new(), Matrix::zeros(0, 0)) } else { linalg::weighted_mean_cov(&support, &weights) };
    Ok(ExactMoments { mean, cov, log_normaliser, probabilities })
}

/// Dyad bitmask of `g` in the indexing used by [`ExactMoments::probabilities`].
pub fn graph_code(g: &Graph) -> usize {
    dyads(g.n()).enumerate().filter(|&(_, (i, j))| g.has_edge(i, j)).fold(0, |acc, (k, _)| acc | 1 << k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{apply_mask, MissMask};
    use crate::stats::Term;

    fn cfg(seed: u64, n_draws: usize) -> SamplerConfig {
        SamplerConfig { burn_in: 2000, thin: 10, n_draws, seed, proposal: Proposal::Toggle, keep_graphs: false }
    }

    #[test]
    fn uniform_at_zero_parameters() {
        let spec = ModelSpec::structural();
        let batch = sample_free(&spec, 4, &cfg(1, 20_000), None).unwrap();
        let mean_edges = batch.stats.iter().map(|s| s[0]).sum::<f64>() / batch.len() as f64;
        // sd of edges is sqrt(6 / 4); 20k draws with thin 10 are close to independent
        assert!((mean_edges - 3.0).abs() < 4.0 * (1.5f64 / 20_000.0).sqrt() * 2.0);
        assert_eq!(batch.acceptance_rate, 1.0);
    }

    #[test]
    fn strongly_negative_edges_gives_empty_graph() {
        let spec = ModelSpec::new(vec![Term::Edges], vec![-10.0]).unwrap();
        let batch = sample_free(&spec, 6, &cfg(3, 500), None).unwrap();
        let nonempty = batch.stats.iter().filter(|s| s[0] > 0.0).count();
        assert!(nonempty <= 5);
    }

    #[test]
    fn fixed_count_extremes_and_invariance() {
        let spec = ModelSpec::new(vec![Term::Edges, Term::Gwesp(0.7)], vec![0.0, 0.5]).unwrap();
        for m in [0, 10, 4] {
            let mut c = cfg(5, 200);
            c.keep_graphs = true;
            let b = sample_fixed_count(&spec, 5, m, &c, None).unwrap();
            assert!(b.graphs.iter().all(|g| g.edge_count() == m));
        }
        assert!(sample_fixed_count(&spec, 5, 11, &cfg(5, 10), None).is_err());
        let full = sample_fixed_count(&spec, 5, 10, &cfg(5, 3), None).unwrap();
        assert_eq!(full.last, Graph::complete(5));
    }

    #[test]
    fn conditional_never_touches_observed_dyads() {
        let x = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (0, 5)]).unwrap();
        let d = MissMask::from(Graph::from_edges(6, [(0, 1), (2, 3), (4, 5)]).unwrap());
        let p = apply_mask(&x, &d).unwrap();
        let spec = ModelSpec::new(vec![Term::Edges, Term::gwesp_log2()], vec![-0.5, 0.4]).unwrap();
        let mut c = cfg(9, 300);
        c.keep_graphs = true;
        let b = sample_conditional(&spec, &p, &c, None).unwrap();
        assert!(b.graphs.iter().all(|g| p.is_completion(g)));

        let none = apply_mask(&x, &MissMask::none(6)).unwrap();
        let b = sample_conditional(&spec, &none, &c, None).unwrap();
        assert!(b.graphs.iter().all(|g| *g == x));
    }

    #[test]
    fn same_seed_same_draws() {
        let spec = ModelSpec::new(vec![Term::Edges, Term::gwesp_log2()], vec![-1.0, 0.3]).unwrap();
        let a = sample_free(&spec, 8, &cfg(11, 50), None).unwrap();
        let b = sample_free(&spec, 8, &cfg(11, 50), None).unwrap();
        assert_eq!(a.stats, b.stats);
        let c = sample_free(&spec, 8, &cfg(12, 50), None).unwrap();
        assert_ne!(a.stats, c.stats);
    }

    #[test]
    fn enumeration_closed_forms() {
        let spec = ModelSpec::structural();
        let exact = enumerate_exact(&spec, 4, None).unwrap();
        assert!((exact.mean[0] - 3.0).abs() < 1e-12);
        assert!((exact.log_normaliser - 6.0 * core::f64::consts::LN_2).abs() < 1e-12);

        let theta = -0.8;
        let edges = ModelSpec::new(vec![Term::Edges], vec![theta]).unwrap();
        let exact = enumerate_exact(&edges, 3, None).unwrap();
        assert!((exact.mean[0] - 3.0 * math::logistic(theta)).abs() < 1e-12);
        assert!(matches!(enumerate_exact(&spec, 6, None), Err(Error::EnumerationTooLarge(6))));
    }

    #[test]
    fn ess_bounds() {
        let iid: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 1013) as f64).collect();
        let e = effective_sample_size(&iid);
        assert!(e > 300.0 && e <= 1000.0);
        let sticky: Vec<f64> = (0..1000).map(|k| (k / 100) as f64).collect();
        assert!(effective_sample_size(&sticky) < 50.0);
        assert_eq!(effective_sample_size(&[1.0; 50]), 50.0);
    }
}
