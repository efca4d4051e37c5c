//! Degradation and re-estimation experiments.
//!
//! A plan crosses missingness models, fractions, representations and
//! replicates. Every cell is an independent [`Task`] whose seed is derived
//! from its coordinates, so tasks can run in any order or in parallel and
//! still give identical records.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimate::{self, EstimationConfig, EstimationResult, FailureKind};
use crate::graph::{apply_mask, degree_centralisation, zero_impute, Graph, NodeData, PartialGraph};
use crate::missmodels::{self, classify_assumption, ErgmMiss, MissAssumption, MissModel, NetworkTerm};
use crate::rng;
use crate::sampler::SamplerConfig;
use crate::stats::{stat_vector, ModelSpec, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Representation {
    /// Missing dyads kept as NA and estimated by the face-value likelihood.
    Miss,
    /// Missing dyads set to 0.
    Zero,
}

impl Representation {
    pub fn label(self) -> &'static str {
        match self {
            Representation::Miss => "miss",
            Representation::Zero => "zero",
        }
    }

    fn code(self) -> u64 {
        match self {
            Representation::Miss => 0,
            Representation::Zero => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedModel {
    pub name: String,
    pub model: MissModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub network_id: String,
    /// Estimation model; its parameter values are ignored.
    pub spec: ModelSpec,
    pub models: Vec<NamedModel>,
    pub fractions: Vec<f64>,
    pub representations: Vec<Representation>,
    pub replicates: usize,
    pub base_seed: u64,
    pub estimation: EstimationConfig,
    /// Sampler for ERGM missingness draws; its seed is replaced per task.
    pub miss_sampler: SamplerConfig,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        if self.models.is_empty() || self.fractions.is_empty() || self.representations.is_empty() {
            return Err(Error::InvalidParameter("plan needs models, fractions and representations".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(Error::InfeasibleFraction(*f));
        }
        self.estimation.validate()?;
        self.miss_sampler.validate()
    }

    pub fn record_count(&self) -> usize {
        self.models.len() * self.fractions.len() * self.representations.len() * self.replicates
    }
}

/// Coordinates of one degradation and re-estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Task {
    pub model: usize,
    pub fraction: usize,
    pub representation: Representation,
    pub replicate: usize,
    pub seed: u64,
}

/// Every task of `plan`, ordered by model, fraction, representation and replicate.
pub fn tasks(plan: &ExperimentPlan) -> Vec<Task> {
    let mut out = Vec::with_capacity(plan.record_count());
    for model in 0..plan.models.len() {
        for fraction in 0..plan.fractions.len() {
            for &representation in &plan.representations {
                for replicate in 0..plan.replicates {
                    let seed = rng::derive_seed(
                        plan.base_seed,
                        &[model as u64, fraction as u64, representation.code(), replicate as u64],
                    );
                    out.push(Task { model, fraction, representation, replicate, seed });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub network: String,
    pub model: String,
    pub assumption: MissAssumption,
    pub fraction: f64,
    pub representation: Representation,
    pub replicate: usize,
    pub seed: u64,
    pub missing_count: usize,
    /// NA dyads handed to the estimator.
    pub input_missing: usize,
    pub observed_edges: usize,
    pub result: EstimationResult,
    /// Statistics of the zero-imputed graph.
    pub mean_value_zero: Vec<f64>,
    pub centralisation: f64,
    /// Seconds spent on the task, filled in by runners that measure time.
    pub wall_time: Option<f64>,
}

/// Degrades `x` with the model of `task` and re-estimates.
pub fn run_task(plan: &ExperimentPlan, x: &Graph, data: Option<&NodeData>, task: &Task) -> Result<RunRecord> {
    let named = &plan.models[task.model];
    let fraction = plan.fractions[task.fraction];
    let mut miss_cfg = plan.miss_sampler.clone();
    miss_cfg.seed = rng::derive_seed(task.seed, &[1]);
    let d = missmodels::generate(&named.model, x.n(), Some(fraction), &miss_cfg, data)?;
    let p = apply_mask(x, &d)?;
    let mut est = plan.estimation.clone();
    est.sampler.seed = rng::derive_seed(task.seed, &[2]);
    let zero = zero_impute(&p);
    let (result, input_missing) = match task.representation {
        Representation::Miss => (estimate::mcmcmle_mar(&plan.spec, &p, &est, data)?, p.missing_count()),
        Representation::Zero => (estimate::mcmcmle(&plan.spec, &zero, &est, data)?, 0),
    };
    Ok(RunRecord {
        network: plan.network_id.clone(),
        model: named.name.clone(),
        assumption: classify_assumption(&named.model),
        fraction,
        representation: task.representation,
        replicate: task.replicate,
        seed: task.seed,
        missing_count: d.missing_count(),
        input_missing,
        observed_edges: p.observed_edge_count(),
        result,
        mean_value_zero: stat_vector(&plan.spec, &zero, data)?,
        centralisation: centralisation_or_nan(&zero),
        wall_time: None,
    })
}

fn centralisation_or_nan(g: &Graph) -> f64 {
    degree_centralisation(g).unwrap_or(f64::NAN)
}

/// All records of `plan`, sequentially, in task order.
pub fn run_replicates(plan: &ExperimentPlan, x: &Graph, data: Option<&NodeData>) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    tasks(plan).iter().map(|t| run_task(plan, x, data, t)).collect()
}

/// Complete-data fit used as the reference for relative metrics.
pub fn run_baseline(
    spec: &ModelSpec,
    g: &Graph,
    cfg: &EstimationConfig,
    data: Option<&NodeData>,
) -> Result<EstimationResult> {
    let fit = estimate::mcmcmle(spec, g, cfg, data)?;
    match fit.failure {
        None => Ok(fit),
        Some(kind) => Err(Error::BaselineFailed(kind.label())),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FailureCount {
    pub total: usize,
    pub failures: usize,
}

impl FailureCount {
    pub fn successes(&self) -> usize {
        self.total - self.failures
    }

    /// Failures over total.
    pub fn rate(&self) -> f64 {
        self.failures as f64 / self.total as f64
    }
}

/// Failure counts of `records` grouped by `key`.
pub fn failure_rate<K: Ord>(records: &[RunRecord], key: impl Fn(&RunRecord) -> K) -> BTreeMap<K, FailureCount> {
    let mut out: BTreeMap<K, FailureCount> = BTreeMap::new();
    for r in records {
        let c = out.entry(key(r)).or_default();
        c.total += 1;
        c.failures += r.result.failure.is_some() as usize;
    }
    out
}

/// Failure counts by kind for one group of records.
pub fn failure_breakdown(records: &[RunRecord]) -> BTreeMap<FailureKind, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        if let Some(k) = r.result.failure {
            *out.entry(k).or_insert(0) += 1;
        }
    }
    out
}

/// Componentwise `(est - base) / base` and `se / se_base`; `None` where undefined.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativeMetrics {
    pub rbias: Vec<Option<f64>>,
    pub rse: Vec<Option<f64>>,
}

/// Relative bias and standard error of `fit` against `baseline`, or `None`
/// unless both converged.
pub fn relative_metrics(fit: &EstimationResult, baseline: &EstimationResult) -> Option<RelativeMetrics> {
    if !fit.converged || !baseline.converged || fit.theta_hat.len() != baseline.theta_hat.len() {
        return None;
    }
    let ratio = |a: f64, b: f64| if b != 0.0 && b.is_finite() && a.is_finite() { Some(a / b) } else { None };
    Some(RelativeMetrics {
        rbias: fit.theta_hat.iter().zip(&baseline.theta_hat).map(|(e, b)| ratio(e - b, *b)).collect(),
        rse: fit.se.iter().zip(&baseline.se).map(|(s, b)| ratio(*s, *b)).collect(),
    })
}

/// Statistics of `p` with every NA dyad set to 0.
pub fn mean_value_zero(spec: &ModelSpec, p: &PartialGraph, data: Option<&NodeData>) -> Result<Vec<f64>> {
    stat_vector(spec, &zero_impute(p), data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    /// Entrainment `sum d_ij x_ij`.
    Theta1Entrainment,
    /// Degree covariate `sum d_ij (deg(i) + deg(j))`.
    Theta2DegreeCov,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Theta1Entrainment => "theta1",
            SweepParam::Theta2DegreeCov => "theta2",
        }
    }

    fn term(self) -> NetworkTerm {
        match self {
            SweepParam::Theta1Entrainment => NetworkTerm::Entrainment,
            SweepParam::Theta2DegreeCov => NetworkTerm::DegreeCovariate,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub param: SweepParam,
    pub levels: Vec<f64>,
    pub fraction: f64,
    pub replicates: usize,
    pub base_seed: u64,
    pub estimation: EstimationConfig,
    pub miss_sampler: SamplerConfig,
}

impl SweepPlan {
    pub fn new(param: SweepParam, n: usize) -> Self {
        SweepPlan {
            param,
            levels: alloc::vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            fraction: 0.35,
            replicates: 50,
            base_seed: 0,
            estimation: EstimationConfig::for_vertices(n),
            miss_sampler: SamplerConfig::for_vertices(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.replicates == 0 {
            return Err(Error::InvalidParameter("sweep needs levels and replicates".into()));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::InfeasibleFraction(self.fraction));
        }
        self.estimation.validate()?;
        self.miss_sampler.validate()
    }

    /// Missingness model at one level: only the swept network term is nonzero.
    pub fn model(&self, level: f64, x: &Graph) -> Result<ErgmMiss> {
        Ok(ErgmMiss {
            psi: ModelSpec::new(alloc::vec![Term::Edges], alloc::vec![0.0])?,
            beta: ModelSpec::new(Vec::new(), Vec::new())?,
            theta: alloc::vec![(self.param.term(), level)],
            network: Some(x.clone()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SweepTask {
    pub level: usize,
    pub replicate: usize,
    pub seed: u64,
}

pub fn sweep_tasks(plan: &SweepPlan) -> Vec<SweepTask> {
    let mut out = Vec::with_capacity(plan.levels.len() * plan.replicates);
    for level in 0..plan.levels.len() {
        for replicate in 0..plan.replicates {
            let seed = rng::derive_seed(plan.base_seed, &[0x5ee9, level as u64, replicate as u64]);
            out.push(SweepTask { level, replicate, seed });
        }
    }
    out
}

/// One replicate of a sweep level.
#[derive(Clone, Debug)]
pub struct SweepRun {
    pub task: SweepTask,
    pub result: EstimationResult,
    pub mean_value_zero: Vec<f64>,
    pub observed_edges: usize,
    pub centralisation: f64,
}

pub fn run_sweep_task(
    plan: &SweepPlan,
    x: &Graph,
    spec: &ModelSpec,
    data: Option<&NodeData>,
    task: &SweepTask,
) -> Result<SweepRun> {
    let model = plan.model(plan.levels[task.level], x)?;
    let mut miss_cfg = plan.miss_sampler.clone();
    miss_cfg.seed = rng::derive_seed(task.seed, &[1]);
    let d = missmodels::gen_ergm_miss(&model, x.n(), Some(plan.fraction), &miss_cfg, data)?;
    let p = apply_mask(x, &d)?;
    let mut est = plan.estimation.clone();
    est.sampler.seed = rng::derive_seed(task.seed, &[2]);
    let result = estimate::mcmcmle_mar(spec, &p, &est, data)?;
    let zero = zero_impute(&p);
    Ok(SweepRun {
        task: *task,
        result,
        mean_value_zero: stat_vector(spec, &zero, data)?,
        observed_edges: p.observed_edge_count(),
        centralisation: centralisation_or_nan(&zero),
    })
}

/// Mean and empirical 2.5% / 97.5% percentiles of a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Band {
    pub fn from_values(values: &[f64]) -> Band {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Band { mean: f64::NAN, lo: f64::NAN, hi: f64::NAN, count: 0 };
        }
        v.sort_by(f64::total_cmp);
        Band {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            lo: quantile(&v, 0.025),
            hi: quantile(&v, 0.975),
            count: v.len(),
        }
    }

    pub fn covers(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Linear-interpolation quantile of sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepLevel {
    pub level: f64,
    pub assumption: MissAssumption,
    pub replicates: usize,
    pub failures: usize,
    /// Bands of the estimates over converged replicates.
    pub estimate: Vec<Band>,
    /// Bands of the zero-imputed statistics over all replicates.
    pub mean_value_zero: Vec<Band>,
    pub observed_edges: Band,
    pub centralisation: Band,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub fraction: f64,
    pub labels: Vec<String>,
    pub levels: Vec<SweepLevel>,
}

/// Aggregates sweep runs by level; runs may arrive in any order.
pub fn aggregate_sweep(plan: &SweepPlan, x: &Graph, spec: &ModelSpec, runs: &[SweepRun]) -> Result<SweepTable> {
    let p = spec.len();
    let mut levels = Vec::with_capacity(plan.levels.len());
    for (li, &level) in plan.levels.iter().enumerate() {
        let mut at: Vec<&SweepRun> = runs.iter().filter(|r| r.task.level == li).collect();
        at.sort_by_key(|r| r.task);
        let ok: Vec<&&SweepRun> = at.iter().filter(|r| r.result.converged).collect();
        let column = |rs: &[&&SweepRun], k: usize| -> Vec<f64> { rs.iter().map(|r| r.result.theta_hat[k]).collect() };
        let all: Vec<&&SweepRun> = at.iter().collect();
        levels.push(SweepLevel {
            level,
            assumption: classify_assumption(&MissModel::ErgmMiss(plan.model(level, x)?)),
            replicates: at.len(),
            failures: at.len() - ok.len(),
            estimate: (0..p).map(|k| Band::from_values(&column(&ok, k))).collect(),
            mean_value_zero: (0..p)
                .map(|k| Band::from_values(&all.iter().map(|r| r.mean_value_zero[k]).collect::<Vec<_>>()))
                .collect(),
            observed_edges: Band::from_values(&all.iter().map(|r| r.observed_edges as f64).collect::<Vec<_>>()),
            centralisation: Band::from_values(&all.iter().map(|r| r.centralisation).collect::<Vec<_>>()),
        });
    }
    Ok(SweepTable { param: plan.param, fraction: plan.fraction, labels: spec.labels(), levels })
}

/// Runs a whole sweep sequentially.
pub fn mnar_sweep(plan: &SweepPlan, x: &Graph, spec: &ModelSpec, data: Option<&NodeData>) -> Result<SweepTable> {
    plan.validate()?;
    let runs = sweep_tasks(plan).iter().map(|t| run_sweep_task(plan, x, spec, data, t)).collect::<Result<Vec<_>>>()?;
    aggregate_sweep(plan, x, spec, &runs)
}

/// Spearman rank correlation, average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / crate::math::sqrt(va * vb)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = alloc::vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MissMask;

    #[test]
    fn failure_rate_arithmetic() {
        let c = FailureCount { total: 50, failures: 12 };
        assert!((c.rate() - 0.24).abs() < 1e-15);
        assert_eq!(c.successes(), 38);
        assert_eq!(FailureCount { total: 50, failures: 0 }.rate(), 0.0);
        assert_eq!(FailureCount { total: 50, failures: 50 }.rate(), 1.0);
    }

    #[test]
    fn mean_value_zero_cases() {
        let spec = ModelSpec::with_terms(alloc::vec![Term::Edges, Term::gwesp_log2()]).unwrap();
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let p = apply_mask(&g, &MissMask::from(g.clone())).unwrap();
        assert_eq!(mean_value_zero(&spec, &p, None).unwrap(), [0.0, 0.0]);
        let full = apply_mask(&g, &MissMask::none(4)).unwrap();
        assert_eq!(mean_value_zero(&spec, &full, None).unwrap(), stat_vector(&spec, &g, None).unwrap());
    }

    #[test]
    fn quantiles_and_spearman() {
        let b = Band::from_values(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(b.mean, 3.0);
        assert!((b.lo - 1.1).abs() < 1e-12 && (b.hi - 4.9).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[9.0, 5.0, 1.0]) + 1.0).abs() < 1e-12);
    }
}
