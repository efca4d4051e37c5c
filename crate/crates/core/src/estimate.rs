//! ERGM estimation: maximum pseudo-likelihood, Monte-Carlo maximum
//! likelihood on complete data, and face-value Monte-Carlo maximum
//! likelihood on partially observed data.
//!
//! Both MCMC estimators solve a moment equation by damped Newton steps.
//! Complete data: `E_theta[s(Y)] = s(x)`, information `Cov[s]`.
//! Partial data: `E_theta[s(Y)] = E_theta[s(Y) | X_obs]`, information
//! `Cov[s] - Cov[s | X_obs]`. A step is halved while importance weights on
//! the current sample predict a larger discrepancy or collapse.
//!
//! Failures are classified as
//! (c) non-positive-definite information or a flat likelihood,
//! (b) excessive correlation between statistics,
//! (a) moments or effective sample size not reached,
//! with that precedence.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{dyads, zero_impute, Graph, NodeData, PartialGraph};
use crate::linalg::{self, Matrix};
use crate::math;
use crate::rng;
use crate::sampler::{self, SampleBatch, SamplerConfig};
use crate::stats::{ModelSpec, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureKind {
    /// (a) the sampler did not reach the moments or the effective sample size.
    EssNotReached,
    /// (b) statistics too strongly correlated.
    ExcessiveCorrelation,
    /// (c) information matrix not positive definite, or no information at all.
    NonPositiveDefiniteInfo,
    /// The likelihood is maximised at infinity (separation).
    NonFiniteMle,
}

impl FailureKind {
    pub fn label(self) -> &'static str {
        match self {
            FailureKind::EssNotReached => "ess_not_reached",
            FailureKind::ExcessiveCorrelation => "excessive_correlation",
            FailureKind::NonPositiveDefiniteInfo => "non_pd_info",
            FailureKind::NonFiniteMle => "non_finite_mle",
        }
    }

    /// Letter of the failure mode, `-` for non-finite estimates.
    pub fn code(self) -> char {
        match self {
            FailureKind::EssNotReached => 'a',
            FailureKind::ExcessiveCorrelation => 'b',
            FailureKind::NonPositiveDefiniteInfo => 'c',
            FailureKind::NonFiniteMle => '-',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Mple,
    McmcMle,
    FaceValue,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Mple => "mple",
            Method::McmcMle => "mcmcmle",
            Method::FaceValue => "facevalue",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// Mean-value t-ratios at the last moment check.
    pub t_ratios: Vec<f64>,
    /// Smallest effective sample size per statistic over the final chains.
    pub ess: Vec<f64>,
    pub ess_target: f64,
    pub min_info_diag: f64,
    pub min_info_eigen: f64,
    /// Largest absolute eigenvalue of the information.
    pub info_scale: f64,
    /// Condition number of the correlation matrix of `Cov[s]`.
    pub cov_condition: f64,
    pub condition_limit: f64,
    /// No observed dyads, so no information about the parameters.
    pub flat_likelihood: bool,
    pub moments_converged: bool,
    /// Estimate diverged to infinity.
    pub non_finite: bool,
    pub acceptance_rate: f64,
}

impl Diagnostics {
    fn empty(p: usize, cfg: &EstimationConfig) -> Self {
        Diagnostics {
            t_ratios: vec![f64::NAN; p],
            ess: vec![0.0; p],
            ess_target: cfg.ess_target,
            min_info_diag: f64::NAN,
            min_info_eigen: f64::NAN,
            info_scale: f64::NAN,
            cov_condition: f64::NAN,
            condition_limit: cfg.condition_limit,
            flat_likelihood: false,
            moments_converged: false,
            non_finite: false,
            acceptance_rate: f64::NAN,
        }
    }

    pub fn min_ess(&self) -> f64 {
        self.ess.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
pub struct EstimationResult {
    pub method: Method,
    pub labels: Vec<alloc::string::String>,
    pub theta_hat: Vec<f64>,
    /// `sqrt(diag(info^-1))`, eigenvalues floored at `1e-8` when needed.
    pub se: Vec<f64>,
    /// Monte-Carlo standard error of `theta_hat`.
    pub mc_se: Vec<f64>,
    pub info: Matrix,
    pub n_iterations: usize,
    pub converged: bool,
    pub failure: Option<FailureKind>,
    pub diagnostics: Diagnostics,
}

impl EstimationResult {
    fn finish(mut self) -> Self {
        self.failure = classify_failure(&self.diagnostics);
        self.converged = self.failure.is_none();
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationConfig {
    /// Chains used during the iterations; the seed is the base seed of the run.
    pub sampler: SamplerConfig,
    /// Draws of the final chains used for the last correction and the errors.
    pub final_draws: usize,
    /// Most final large-sample Newton corrections; they stop once a step is
    /// within twice its Monte-Carlo standard error.
    pub final_rounds: usize,
    pub max_iterations: usize,
    /// Convergence when every `|t|` is below this.
    pub t_ratio_tol: f64,
    pub ess_target: f64,
    pub condition_limit: f64,
    /// Step multiplier applied while a step is rejected.
    pub damping: f64,
    /// Smallest importance-sampling effective fraction a step may leave.
    pub min_is_fraction: f64,
}

impl EstimationConfig {
    pub fn for_vertices(n: usize) -> Self {
        EstimationConfig {
            sampler: SamplerConfig::for_vertices(n),
            final_draws: 4000,
            final_rounds: 3,
            max_iterations: 60,
            t_ratio_tol: 0.1,
            ess_target: 200.0,
            condition_limit: 1e8,
            damping: 0.5,
            min_is_fraction: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if self.final_draws < 2 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter("final_draws >= 2 and max_iterations >= 1 required".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidParameter("damping must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Failure label from diagnostics, `(c)` before `(b)` before `(a)`.
pub fn classify_failure(d: &Diagnostics) -> Option<FailureKind> {
    if d.non_finite {
        return Some(FailureKind::NonFiniteMle);
    }
    let scale = if d.info_scale.is_finite() && d.info_scale > 0.0 { d.info_scale } else { 1.0 };
    if d.flat_likelihood || d.min_info_diag < 0.0 || d.min_info_eigen < -1e-9 * scale {
        return Some(FailureKind::NonPositiveDefiniteInfo);
    }
    if !(d.cov_condition <= d.condition_limit) {
        return Some(FailureKind::ExcessiveCorrelation);
    }
    if !d.moments_converged || !(d.min_ess() >= d.ess_target) {
        return Some(FailureKind::EssNotReached);
    }
    None
}

fn info_summary(d: &mut Diagnostics, info: &Matrix) {
    let p = info.nrows();
    d.min_info_diag = (0..p).map(|k| info[(k, k)]).fold(f64::INFINITY, f64::min);
    let ev = linalg::eigenvalues(info);
    d.min_info_eigen = ev.first().copied().unwrap_or(f64::NAN);
    d.info_scale = ev.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
}

fn standard_errors(info: &Matrix) -> (Matrix, Vec<f64>) {
    let scale = linalg::eigenvalues(info).iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let inv = linalg::spd_inverse(info).unwrap_or_else(|| linalg::floored_inverse(info, 1e-8 * scale.max(1e-300)));
    let se = (0..info.nrows()).map(|k| math::sqrt(inv[(k, k)].max(0.0))).collect();
    (inv, se)
}

/// Maximum pseudo-likelihood: logistic regression of dyad states on change statistics.
pub fn mple(spec: &ModelSpec, g: &Graph, data: Option<&NodeData>) -> Result<EstimationResult> {
    let compiled = spec.compile(g.n(), data)?;
    let p = spec.len();
    let mut rows: BTreeMap<Vec<u64>, (Vec<f64>, [f64; 2])> = BTreeMap::new();
    let mut buf = vec![0.0; p];
    for (i, j) in dyads(g.n()) {
        compiled.change_into(g, i, j, &mut buf);
        let key: Vec<u64> = buf.iter().map(|v| v.to_bits()).collect();
        let entry = rows.entry(key).or_insert_with(|| (buf.clone(), [0.0; 2]));
        entry.1[g.has_edge(i, j) as usize] += 1.0;
    }
    let rows: Vec<(Vec<f64>, [f64; 2])> = rows.into_values().collect();
    let cfg = EstimationConfig::for_vertices(g.n());
    let mut diag = Diagnostics::empty(p, &cfg);
    diag.moments_converged = true;
    diag.ess = vec![f64::INFINITY; p];
    diag.acceptance_rate = f64::NAN;

    let mut gram = Matrix::zeros(p, p);
    for (x, c) in &rows {
        let w = c[0] + c[1];
        for a in 0..p {
            for b in 0..p {
                gram[(a, b)] += w * x[a] * x[b];
            }
        }
    }
    diag.cov_condition = linalg::correlation_condition(&gram);

    let mut result = EstimationResult {
        method: Method::Mple,
        labels: spec.labels(),
        theta_hat: vec![0.0; p],
        se: vec![f64::NAN; p],
        mc_se: vec![0.0; p],
        info: Matrix::zeros(p, p),
        n_iterations: 0,
        converged: false,
        failure: None,
        diagnostics: diag,
    };
    if p == 0 || rows.is_empty() {
        result.diagnostics.flat_likelihood = true;
        return Ok(result.finish());
    }
    if !(result.diagnostics.cov_condition <= cfg.condition_limit) {
        return Ok(result.finish());
    }

    let loglik = |theta: &[f64]| -> f64 {
        rows.iter()
            .map(|(x, c)| {
                let eta: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
                c[1] * eta - (c[0] + c[1]) * math::softplus(eta)
            })
            .sum()
    };
    let grad_info = |theta: &[f64]| -> (Vec<f64>, Matrix) {
        let mut grad = vec![0.0; p];
        let mut info = Matrix::zeros(p, p);
        for (x, c) in &rows {
            let eta: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
            let mu = math::logistic(eta);
            let w = c[0] + c[1];
            let resid = c[1] - w * mu;
            let v = w * mu * (1.0 - mu);
            for a in 0..p {
                grad[a] += resid * x[a];
                for b in 0..p {
                    info[(a, b)] += v * x[a] * x[b];
                }
            }
        }
        (grad, info)
    };

    let (_, info0) = grad_info(&result.theta_hat);
    let info0_min = linalg::eigenvalues(&info0)[0];
    let mut theta = vec![0.0; p];
    let mut ll = loglik(&theta);
    let mut done = false;
    for it in 0..200 {
        result.n_iterations = it + 1;
        let (grad, info) = grad_info(&theta);
        let gnorm = math::sqrt(grad.iter().map(|g| g * g).sum());
        if gnorm < 1e-8 {
            done = true;
            break;
        }
        let inv = match linalg::spd_inverse(&info) {
            Some(inv) => inv,
            None => break,
        };
        let step = linalg::mat_vec(&inv, &grad);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let cl = loglik(&cand);
            if cl >= ll {
                theta = cand;
                ll = cl;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let (_, info) = grad_info(&theta);
    let min_eig = linalg::eigenvalues(&info)[0];
    let separated = !done || !(min_eig > 1e-6 * info0_min) || theta.iter().any(|v| !v.is_finite());
    let (_, se) = standard_errors(&info);
    result.theta_hat = theta;
    result.se = se;
    info_summary(&mut result.diagnostics, &info);
    result.info = info;
    result.diagnostics.t_ratios = vec![0.0; p];
    if separated {
        let constant_response = rows.iter().all(|(_, c)| c[0] == 0.0) || rows.iter().all(|(_, c)| c[1] == 0.0);
        if constant_response {
            result.diagnostics.non_finite = true;
        } else {
            // the design separates the states without a constant response
            result.diagnostics.cov_condition = f64::INFINITY;
        }
    }
    Ok(result.finish())
}

/// Starting point: MPLE when finite, else `logit(density)` on Edges and zero elsewhere.
fn initial_theta(spec: &ModelSpec, g: &Graph, data: Option<&NodeData>) -> Result<Option<Vec<f64>>> {
    let fit = mple(spec, g, data)?;
    if fit.failure.is_none() && fit.theta_hat.iter().all(|v| v.is_finite()) {
        return Ok(Some(fit.theta_hat));
    }
    let total = g.dyad_count();
    let m = g.edge_count();
    if total == 0 || m == 0 || m == total {
        return Ok(None);
    }
    let logit = math::logit(m as f64 / total as f64);
    Ok(Some(spec.terms().iter().map(|t| if *t == Term::Edges { logit } else { 0.0 }).collect()))
}

fn t_ratios(target: &[f64], mean: &[f64], cov: &Matrix) -> Vec<f64> {
    target
        .iter()
        .zip(mean)
        .enumerate()
        .map(|(k, (s, m))| {
            let sd = math::sqrt(cov[(k, k)]);
            let diff = m - s;
            if sd > 0.0 {
                diff / sd
            } else if diff.abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY * diff.signum()
            }
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, x| if x.is_nan() { f64::INFINITY } else { a.max(x.abs()) })
}

/// Importance-weighted mean of `stats` under `theta + delta`, and the
/// effective fraction of the weights.
fn reweighted_mean(stats: &[Vec<f64>], delta: &[f64]) -> (Vec<f64>, f64) {
    let p = delta.len();
    if stats.is_empty() {
        return (vec![0.0; p], 1.0);
    }
    let logw: Vec<f64> = stats.iter().map(|z| z.iter().zip(delta).map(|(a, b)| a * b).sum()).collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| math::exp(l - top)).collect();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let mut mean = vec![0.0; p];
    for (z, wi) in stats.iter().zip(&w) {
        for (m, v) in mean.iter_mut().zip(z) {
            *m += wi * v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= sw);
    (mean, sw * sw / sw2 / stats.len() as f64)
}

fn mahalanobis(inv: &Matrix, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    linalg::quad_form(inv, &d)
}

fn precision(cov: &Matrix) -> Matrix {
    linalg::spd_inverse(cov).unwrap_or_else(|| {
        let scale = linalg::eigenvalues(cov).iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        linalg::floored_inverse(cov, 1e-8 * scale.max(1e-12))
    })
}

const FINAL: u64 = u64::MAX;
const FREE_CHAIN: u64 = 0;
const COND_CHAIN: u64 = 1;

fn chain_cfg(cfg: &EstimationConfig, round: u64, chain: u64) -> SamplerConfig {
    let mut s = cfg.sampler.clone();
    s.seed = rng::derive_seed(cfg.sampler.seed, &[round, chain]);
    s.keep_graphs = false;
    s
}

fn final_cfg(cfg: &EstimationConfig, round: usize, chain: u64) -> SamplerConfig {
    let mut s = chain_cfg(cfg, FINAL - round as u64, chain);
    s.n_draws = cfg.final_draws;
    s
}

struct Moments {
    batch: SampleBatch,
    mean: Vec<f64>,
    cov: Matrix,
}

fn moments(batch: SampleBatch) -> Moments {
    let (mean, cov) = batch.mean_cov();
    Moments { batch, mean, cov }
}

fn free_chain(
    spec: &ModelSpec,
    theta: &[f64],
    start: &Graph,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<Moments> {
    Ok(moments(sampler::sample_free_from(&spec.with_theta(theta)?, start.clone(), cfg, data)?))
}

fn cond_chain(
    spec: &ModelSpec,
    theta: &[f64],
    p: &PartialGraph,
    start: &Graph,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<Moments> {
    Ok(moments(sampler::sample_conditional_from(&spec.with_theta(theta)?, p, start.clone(), cfg, data)?))
}

/// Observed-data information and moment targets at one parameter value.
struct Fit {
    free: Moments,
    /// `None` for complete data, where the target is the observed statistic.
    cond: Option<Moments>,
    target: Vec<f64>,
}

impl Fit {
    fn target(&self) -> &[f64] {
        match &self.cond {
            Some(c) => &c.mean,
            None => &self.target,
        }
    }

    fn info(&self) -> Matrix {
        match &self.cond {
            Some(c) => &self.free.cov - &c.cov,
            None => self.free.cov.clone(),
        }
    }

    fn t_ratios(&self) -> Vec<f64> {
        t_ratios(self.target(), &self.free.mean, &self.free.cov)
    }

    /// Newton direction; falls back to `Cov[s]^-1` when the information is not positive definite.
    fn direction(&self) -> Vec<f64> {
        let grad: Vec<f64> = self.target().iter().zip(&self.free.mean).map(|(t, m)| t - m).collect();
        let inv = linalg::spd_inverse(&self.info()).unwrap_or_else(|| precision(&self.free.cov));
        linalg::mat_vec(&inv, &grad)
    }

    /// Predicted discrepancy after moving by `delta`, with the importance fraction.
    fn predicted(&self, delta: &[f64], prec: &Matrix) -> (f64, f64) {
        let (free_mean, free_frac) = reweighted_mean(&self.free.batch.stats, delta);
        match &self.cond {
            Some(c) => {
                let (cond_mean, cond_frac) = reweighted_mean(&c.batch.stats, delta);
                (mahalanobis(prec, &cond_mean, &free_mean), free_frac.min(cond_frac))
            }
            None => (mahalanobis(prec, &self.target, &free_mean), free_frac),
        }
    }

    /// Damped step from the current sample.
    fn step(&self, cfg: &EstimationConfig) -> Vec<f64> {
        let prec = precision(&self.free.cov);
        let current = mahalanobis(&prec, self.target(), &self.free.mean);
        let mut delta = self.direction();
        for _ in 0..12 {
            let (pred, frac) = self.predicted(&delta, &prec);
            if frac >= cfg.min_is_fraction && pred <= current {
                break;
            }
            delta.iter_mut().for_each(|d| *d *= cfg.damping);
        }
        delta
    }

    fn mc_se(&self, info_inv: &Matrix) -> Vec<f64> {
        let ess_f = self.free.batch.min_ess().max(1.0);
        let mut v = &self.free.cov / ess_f;
        if let Some(c) = &self.cond {
            let ess_c = c.batch.min_ess().max(1.0);
            if c.batch.ess.iter().any(|e| e.is_finite()) {
                v += &c.cov / ess_c;
            }
        }
        let m = info_inv * v * info_inv;
        (0..m.nrows()).map(|k| math::sqrt(m[(k, k)].max(0.0))).collect()
    }

    fn ess(&self) -> Vec<f64> {
        let mut ess = self.free.batch.ess.clone();
        if let Some(c) = &self.cond {
            // statistics that cannot move in the conditional chain carry no ESS constraint
            for (k, e) in ess.iter_mut().enumerate() {
                if c.cov[(k, k)] > 0.0 {
                    *e = e.min(c.batch.ess[k]);
                }
            }
        }
        ess
    }

    fn acceptance(&self) -> f64 {
        self.free.batch.acceptance_rate
    }
}

struct Problem<'a> {
    spec: &'a ModelSpec,
    data: Option<&'a NodeData>,
    /// Partial data; `None` for complete data.
    partial: Option<&'a PartialGraph>,
    /// Observed graph or the zero-imputed partial graph.
    graph: Graph,
    observed_stats: Vec<f64>,
}

impl Problem<'_> {
    fn fit(&self, theta: &[f64], start: &Graph, free_cfg: &SamplerConfig, cond_cfg: &SamplerConfig) -> Result<Fit> {
        let free = free_chain(self.spec, theta, start, free_cfg, self.data)?;
        let cond = match self.partial {
            Some(p) => Some(cond_chain(self.spec, theta, p, start, cond_cfg, self.data)?),
            None => None,
        };
        Ok(Fit { free, cond, target: self.observed_stats.clone() })
    }

    fn next_start(&self, fit: &Fit) -> Graph {
        match &fit.cond {
            Some(c) => c.batch.last.clone(),
            None => self.graph.clone(),
        }
    }
}

/// Monte-Carlo MLE on a fully observed graph.
pub fn mcmcmle(
    spec: &ModelSpec,
    g: &Graph,
    cfg: &EstimationConfig,
    data: Option<&NodeData>,
) -> Result<EstimationResult> {
    let compiled = spec.compile(g.n(), data)?;
    let problem = Problem { spec, data, partial: None, graph: g.clone(), observed_stats: compiled.stats(g) };
    run(&problem, cfg, Method::McmcMle)
}

/// Face-value Monte-Carlo MLE on partially observed data, valid under MAR.
pub fn mcmcmle_mar(
    spec: &ModelSpec,
    p: &PartialGraph,
    cfg: &EstimationConfig,
    data: Option<&NodeData>,
) -> Result<EstimationResult> {
    let graph = zero_impute(p);
    let compiled = spec.compile(p.n(), data)?;
    let observed_stats = compiled.stats(&graph);
    let problem = Problem { spec, data, partial: Some(p), graph, observed_stats };
    if p.observed_dyad_count() == 0 {
        cfg.validate()?;
        let k = spec.len();
        let mut diag = Diagnostics::empty(k, cfg);
        diag.flat_likelihood = true;
        return Ok(EstimationResult {
            method: Method::FaceValue,
            labels: spec.labels(),
            theta_hat: vec![f64::NAN; k],
            se: vec![f64::NAN; k],
            mc_se: vec![f64::NAN; k],
            info: Matrix::zeros(k, k),
            n_iterations: 0,
            converged: false,
            failure: None,
            diagnostics: diag,
        }
        .finish());
    }
    run(&problem, cfg, Method::FaceValue)
}

fn run(problem: &Problem<'_>, cfg: &EstimationConfig, method: Method) -> Result<EstimationResult> {
    cfg.validate()?;
    let spec = problem.spec;
    let k = spec.len();
    let mut result = EstimationResult {
        method,
        labels: spec.labels(),
        theta_hat: vec![f64::NAN; k],
        se: vec![f64::NAN; k],
        mc_se: vec![f64::NAN; k],
        info: Matrix::zeros(k, k),
        n_iterations: 0,
        converged: false,
        failure: None,
        diagnostics: Diagnostics::empty(k, cfg),
    };
    let mut theta = match initial_theta(spec, &problem.graph, problem.data)? {
        Some(t) => t,
        None => {
            result.diagnostics.non_finite = true;
            return Ok(result.finish());
        }
    };

    let mut start = problem.graph.clone();
    let mut fit = None;
    for it in 0..cfg.max_iterations {
        result.n_iterations = it + 1;
        let round = it as u64;
        let current =
            problem.fit(&theta, &start, &chain_cfg(cfg, round, FREE_CHAIN), &chain_cfg(cfg, round, COND_CHAIN))?;
        start = problem.next_start(&current);
        let t = current.t_ratios();
        result.diagnostics.t_ratios = t.clone();
        if max_abs(&t) < cfg.t_ratio_tol {
            result.diagnostics.moments_converged = true;
            fit = Some(current);
            break;
        }
        let condition = linalg::correlation_condition(&current.free.cov);
        if !(condition <= cfg.condition_limit) {
            result.diagnostics.cov_condition = condition;
            result.theta_hat = theta;
            return Ok(result.finish());
        }
        let delta = current.step(cfg);
        theta.iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
        if theta.iter().any(|v| !v.is_finite()) {
            result.diagnostics.non_finite = true;
            return Ok(result.finish());
        }
        fit = Some(current);
    }
    let moments_converged = result.diagnostics.moments_converged;

    let mut last = fit.expect("at least one iteration");
    if moments_converged {
        for round in 0..cfg.final_rounds {
            let big =
                problem.fit(&theta, &start, &final_cfg(cfg, round, FREE_CHAIN), &final_cfg(cfg, round, COND_CHAIN))?;
            start = problem.next_start(&big);
            let mut settled = true;
            if linalg::correlation_condition(&big.free.cov) <= cfg.condition_limit {
                let delta = big.step(cfg);
                let (inv, _) = standard_errors(&big.info());
                let mc = big.mc_se(&inv);
                settled = delta.iter().zip(&mc).all(|(d, m)| d.abs() <= 2.0 * m);
                theta.iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
            }
            result.diagnostics.t_ratios = big.t_ratios();
            last = big;
            if settled {
                break;
            }
        }
    }

    let info = last.info();
    let (inv, se) = standard_errors(&info);
    result.mc_se = last.mc_se(&inv);
    result.se = se;
    result.diagnostics.ess = last.ess();
    result.diagnostics.cov_condition = linalg::correlation_condition(&last.free.cov);
    result.diagnostics.acceptance_rate = last.acceptance();
    info_summary(&mut result.diagnostics, &info);
    result.info = info;
    result.diagnostics.non_finite = theta.iter().any(|v| !v.is_finite());
    result.theta_hat = theta;
    Ok(result.finish())
}
