//! Generators for missingness indicators `D`.
//!
//! Dyad-independent families draw each `d_ij` from its own probability
//! `p_ij`. With a target fraction `f` they instead pick exactly
//! `round(f * N)` dyads by weighted sampling without replacement, weights
//! `p_ij`; logit-scale families first shift their intercept so that the mean
//! of `p_ij` equals `f`.
//!
//! [`ErgmMiss`] draws `D` from an ERGM whose statistics may involve the true
//! network through entrainment and a degree covariate.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{dyad_count, dyads, Graph, MissMask, NodeData};
use crate::math;
use crate::rng;
use crate::sampler::{self, SamplerConfig};
use crate::stats::{ModelSpec, Term};

/// Network-dependent terms of a missingness ERGM.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkTerm {
    /// `sum_{i<j} d_ij x_ij`
    Entrainment,
    /// `sum_{i<j} d_ij (deg_x(i) + deg_x(j))`
    DegreeCovariate,
}

/// ERGM for `D` with parameter groups `psi` (endogenous), `beta`
/// (node or dyad covariates) and `theta` (terms involving `X`).
#[derive(Clone, Debug, PartialEq)]
pub struct ErgmMiss {
    pub psi: ModelSpec,
    pub beta: ModelSpec,
    pub theta: Vec<(NetworkTerm, f64)>,
    /// Network the `theta` terms condition on.
    pub network: Option<Graph>,
}

impl ErgmMiss {
    pub fn endogenous(psi: ModelSpec) -> Self {
        ErgmMiss { psi, beta: empty_spec(), theta: Vec::new(), network: None }
    }

    /// Full model specification on `D`.
    pub fn spec(&self) -> Result<ModelSpec> {
        let mut terms: Vec<Term> = self.psi.terms().to_vec();
        let mut theta: Vec<f64> = self.psi.theta().to_vec();
        terms.extend_from_slice(self.beta.terms());
        theta.extend_from_slice(self.beta.theta());
        if !self.theta.is_empty() {
            let x = self.network.as_ref().ok_or(Error::MissingNetwork)?;
            for &(term, value) in &self.theta {
                terms.push(match term {
                    NetworkTerm::Entrainment => Term::EdgeCov(x.clone()),
                    NetworkTerm::DegreeCovariate => Term::DegreeCovSum(x.clone()),
                });
                theta.push(value);
            }
        }
        ModelSpec::new(terms, theta)
    }
}

fn empty_spec() -> ModelSpec {
    ModelSpec::new(Vec::new(), Vec::new()).expect("empty spec is valid")
}

#[derive(Clone, Debug, PartialEq)]
pub enum MissModel {
    HomBernoulli {
        p: f64,
    },
    /// `logit p_ij = intercept + sum_k coef_k c_k(i, j)` with dyad-independent
    /// covariate terms carried by `covariates`.
    CovariateLogit {
        intercept: f64,
        covariates: ModelSpec,
    },
    /// `logit p_ij = beta_i + beta_j`.
    BetaModel {
        beta: Vec<f64>,
    },
    /// `logit p_ij = alpha + gamma * |u_i - u_j|`; `positions[i]` is `u_i`.
    LatentSpace {
        positions: Vec<Vec<f64>>,
        alpha: f64,
        gamma: f64,
    },
    /// `block[i]` labels the block of vertex `i`.
    BlockStructure {
        block: Vec<usize>,
        p_within: f64,
        p_between: f64,
    },
    ErgmMiss(ErgmMiss),
}

/// Missingness assumption implied by a model's parameter groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MissAssumption {
    HomogeneousMCAR,
    HeterogeneousMCAR,
    MCAR,
    MAR,
    MNAR,
}

impl MissAssumption {
    pub fn label(self) -> &'static str {
        match self {
            MissAssumption::HomogeneousMCAR => "homogeneous-mcar",
            MissAssumption::HeterogeneousMCAR => "heterogeneous-mcar",
            MissAssumption::MCAR => "mcar",
            MissAssumption::MAR => "mar",
            MissAssumption::MNAR => "mnar",
        }
    }
}

pub const PRESETS: [&str; 6] = ["hbern", "beta", "latent", "block", "ergm_mcar_t3", "ergm_mnar_t3"];

/// Settings for the randomised parts of presets.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetOptions {
    pub hbern_p: f64,
    /// Standard deviation of the simulated beta-model effects.
    pub beta_sd: f64,
    pub latent_dim: usize,
    pub latent_alpha: f64,
    pub latent_gamma: f64,
    pub blocks: usize,
    pub p_within: f64,
    pub p_between: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions {
            hbern_p: 0.35,
            beta_sd: 1.0,
            latent_dim: 2,
            latent_alpha: 0.0,
            latent_gamma: 1.0,
            blocks: 2,
            p_within: 0.2,
            p_between: 0.5,
        }
    }
}

impl MissModel {
    /// Named preset for graphs on `n` vertices. `ergm_mnar_t3` needs the true network.
    pub fn preset(name: &str, n: usize, network: Option<&Graph>, seed: u64, opts: &PresetOptions) -> Result<MissModel> {
        let mut rng = rng::rng(rng::derive_seed(seed, &[rng::label_hash(name)]));
        Ok(match name {
            "hbern" => MissModel::HomBernoulli { p: opts.hbern_p },
            "beta" => MissModel::BetaModel { beta: (0..n).map(|_| opts.beta_sd * normal(&mut rng)).collect() },
            "latent" => MissModel::LatentSpace {
                positions: (0..n).map(|_| (0..opts.latent_dim).map(|_| normal(&mut rng)).collect()).collect(),
                alpha: opts.latent_alpha,
                gamma: opts.latent_gamma,
            },
            "block" => MissModel::BlockStructure {
                block: (0..n).map(|i| i * opts.blocks.max(1) / n.max(1)).collect(),
                p_within: opts.p_within,
                p_between: opts.p_between,
            },
            "ergm_mcar_t3" => MissModel::ErgmMiss(ErgmMiss::endogenous(ModelSpec::new(
                alloc::vec![Term::Edges, Term::GwDegree(LN_2), Term::Gwesp(LN_2)],
                alloc::vec![0.0, 2.0, 2.0],
            )?)),
            "ergm_mnar_t3" => {
                let x = network.ok_or(Error::MissingNetwork)?;
                if x.n() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: x.n() });
                }
                MissModel::ErgmMiss(ErgmMiss {
                    psi: ModelSpec::new(
                        alloc::vec![Term::Edges, Term::GwDegree(LN_2), Term::Gwesp(LN_2)],
                        alloc::vec![0.0, 0.4, 0.5],
                    )?,
                    beta: empty_spec(),
                    theta: alloc::vec![(NetworkTerm::Entrainment, 0.8), (NetworkTerm::DegreeCovariate, 0.2)],
                    network: Some(x.clone()),
                })
            }
            other => return Err(Error::InvalidMechanism(alloc::format!("unknown preset {other:?}"))),
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let prob = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(alloc::format!("{what} = {p} outside [0, 1]")))
            }
        };
        let finite = |v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter("non-finite missingness parameter".into()))
            }
        };
        match self {
            MissModel::HomBernoulli { p } => prob(*p, "p"),
            MissModel::CovariateLogit { intercept, covariates } => {
                finite(*intercept)?;
                if !covariates.is_dyad_independent() {
                    return Err(Error::InvalidMechanism("covariate terms must be dyad independent".into()));
                }
                Ok(())
            }
            MissModel::BetaModel { beta } => {
                check_len(beta.len(), n)?;
                beta.iter().try_for_each(|b| finite(*b))
            }
            MissModel::LatentSpace { positions, alpha, gamma } => {
                check_len(positions.len(), n)?;
                finite(*alpha)?;
                finite(*gamma)?;
                positions.iter().flatten().try_for_each(|u| finite(*u))
            }
            MissModel::BlockStructure { block, p_within, p_between } => {
                check_len(block.len(), n)?;
                prob(*p_within, "p_within")?;
                prob(*p_between, "p_between")
            }
            MissModel::ErgmMiss(m) => {
                if let Some(x) = &m.network {
                    if x.n() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: x.n() });
                    }
                }
                m.spec().map(|_| ())
            }
        }
    }
}

fn check_len(found: usize, n: usize) -> Result<()> {
    if found != n {
        return Err(Error::DimensionMismatch { expected: n, found });
    }
    Ok(())
}

fn normal(rng: &mut rng::Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Assumption implied by which parameter groups are nonzero.
pub fn classify_assumption(model: &MissModel) -> MissAssumption {
    let nonzero = |v: &[f64]| v.iter().any(|x| *x != 0.0);
    match model {
        MissModel::HomBernoulli { .. } => MissAssumption::HomogeneousMCAR,
        MissModel::CovariateLogit { covariates, .. } => {
            if nonzero(covariates.theta()) {
                MissAssumption::MAR
            } else {
                MissAssumption::HomogeneousMCAR
            }
        }
        MissModel::BetaModel { .. } | MissModel::LatentSpace { .. } | MissModel::BlockStructure { .. } => {
            MissAssumption::HeterogeneousMCAR
        }
        MissModel::ErgmMiss(m) => {
            let theta: Vec<f64> = m.theta.iter().map(|t| t.1).collect();
            if nonzero(&theta) {
                MissAssumption::MNAR
            } else if nonzero(m.beta.theta()) {
                MissAssumption::MAR
            } else if m.psi.terms().iter().zip(m.psi.theta()).any(|(t, v)| *v != 0.0 && *t != Term::Edges) {
                MissAssumption::MCAR
            } else {
                MissAssumption::HomogeneousMCAR
            }
        }
    }
}

/// Per-dyad missingness logits of the logit-scale families, in canonical dyad order.
fn dyad_logits(model: &MissModel, n: usize, data: Option<&NodeData>) -> Result<Option<Vec<f64>>> {
    Ok(match model {
        MissModel::CovariateLogit { intercept, covariates } => {
            let compiled = covariates.compile(n, data)?;
            let empty = Graph::empty(n);
            Some(
                dyads(n).map(|(i, j)| intercept + compiled.weighted_change(covariates.theta(), &empty, i, j)).collect(),
            )
        }
        MissModel::BetaModel { beta } => Some(dyads(n).map(|(i, j)| beta[i] + beta[j]).collect()),
        MissModel::LatentSpace { positions, alpha, gamma } => Some(
            dyads(n)
                .map(|(i, j)| {
                    let d2: f64 = positions[i].iter().zip(&positions[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    alpha + gamma * math::sqrt(d2)
                })
                .collect(),
        ),
        _ => None,
    })
}

/// Shift `c` with `mean(logistic(logits + c)) = f`, by bisection.
fn calibrate_shift(logits: &[f64], f: f64) -> f64 {
    let mean = |c: f64| logits.iter().map(|l| math::logistic(l + c)).sum::<f64>() / logits.len() as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draws `D` from a dyad-independent model. With `target_fraction`, exactly
/// `round(f * N)` dyads are missing.
pub fn gen_independent(
    model: &MissModel,
    n: usize,
    seed: u64,
    target_fraction: Option<f64>,
    data: Option<&NodeData>,
) -> Result<MissMask> {
    if matches!(model, MissModel::ErgmMiss(_)) {
        return Err(Error::InvalidMechanism("ERGM missingness needs gen_ergm_miss".into()));
    }
    model.validate(n)?;
    if let Some(f) = target_fraction {
        check_fraction(f)?;
    }
    let total = dyad_count(n);
    let pairs: Vec<(usize, usize)> = dyads(n).collect();
    let probs: Vec<f64> = match dyad_logits(model, n, data)? {
        Some(logits) => {
            let shift = match target_fraction {
                Some(f) if total > 0 && f > 0.0 && f < 1.0 => calibrate_shift(&logits, f),
                _ => 0.0,
            };
            logits.iter().map(|l| math::logistic(l + shift)).collect()
        }
        None => match model {
            MissModel::HomBernoulli { p } => alloc::vec![*p; total],
            MissModel::BlockStructure { block, p_within, p_between } => {
                pairs.iter().map(|&(i, j)| if block[i] == block[j] { *p_within } else { *p_between }).collect()
            }
            _ => unreachable!("all independent families covered"),
        },
    };
    let mut rng = rng::rng(seed);
    let mut d = Graph::empty(n);
    match target_fraction {
        None => {
            for (&(i, j), &p) in pairs.iter().zip(&probs) {
                if rng.random::<f64>() < p {
                    d.set(i, j, true);
                }
            }
        }
        Some(f) => {
            let m = math::round_count(f, total);
            for k in weighted_sample(&probs, m, &mut rng) {
                let (i, j) = pairs[k];
                d.set(i, j, true);
            }
        }
    }
    Ok(MissMask::from(d))
}

/// Indices of `m` items drawn without replacement with probability
/// proportional to `weights` (exponential keys). Zero-weight items are
/// only chosen once every positive-weight item is taken, uniformly.
pub fn weighted_sample(weights: &[f64], m: usize, rng: &mut rng::Rng) -> Vec<usize> {
    let mut keys: Vec<(bool, f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let u: f64 = rng.random::<f64>();
            if w > 0.0 {
                (true, math::ln(u) / w, k)
            } else {
                (false, u, k)
            }
        })
        .collect();
    keys.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    let mut chosen: Vec<usize> = keys.into_iter().take(m).map(|k| k.2).collect();
    chosen.sort_unstable();
    chosen
}

fn check_fraction(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InfeasibleFraction(f));
    }
    Ok(())
}

/// One draw of `D` from an ERGM missingness model on `n` vertices. With
/// `fraction`, the chain runs on the slice of masks with exactly
/// `round(fraction * N)` missing dyads, where any Edges parameter is inert.
pub fn gen_ergm_miss(
    model: &ErgmMiss,
    n: usize,
    fraction: Option<f64>,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<MissMask> {
    if let Some(x) = &model.network {
        if x.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.n() });
        }
    }
    let spec = model.spec()?;
    let cfg = SamplerConfig { n_draws: 1, keep_graphs: false, ..cfg.clone() };
    let batch = match fraction {
        Some(f) => {
            check_fraction(f)?;
            let m = math::round_count(f, dyad_count(n));
            sampler::sample_fixed_count(&spec, n, m, &cfg, data)?
        }
        None => sampler::sample_free(&spec, n, &cfg, data)?,
    };
    Ok(MissMask::from(batch.last))
}

/// Draws `D` from any family, dispatching ERGMs to [`gen_ergm_miss`].
pub fn generate(
    model: &MissModel,
    n: usize,
    fraction: Option<f64>,
    cfg: &SamplerConfig,
    data: Option<&NodeData>,
) -> Result<MissMask> {
    match model {
        MissModel::ErgmMiss(m) => gen_ergm_miss(m, n, fraction, cfg, data),
        other => gen_independent(other, n, cfg.seed, fraction, data),
    }
}

/// Short name of a model's family.
pub fn family_name(model: &MissModel) -> String {
    String::from(match model {
        MissModel::HomBernoulli { .. } => "hbern",
        MissModel::CovariateLogit { .. } => "covlogit",
        MissModel::BetaModel { .. } => "beta",
        MissModel::LatentSpace { .. } => "latent",
        MissModel::BlockStructure { .. } => "block",
        MissModel::ErgmMiss(_) => "ergm",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(seed: u64) -> SamplerConfig {
        SamplerConfig {
            burn_in: 2000,
            thin: 1,
            n_draws: 1,
            seed,
            proposal: sampler::Proposal::Toggle,
            keep_graphs: false,
        }
    }

    #[test]
    fn hbern_extremes() {
        let d = gen_independent(&MissModel::HomBernoulli { p: 0.0 }, 8, 1, None, None).unwrap();
        assert_eq!(d.missing_count(), 0);
        let d = gen_independent(&MissModel::HomBernoulli { p: 1.0 }, 8, 1, None, None).unwrap();
        assert_eq!(d.missing_count(), 28);
    }

    #[test]
    fn exact_counts_for_every_family() {
        let x = Graph::from_edges(10, [(0, 1), (1, 2), (2, 3), (0, 4)]).unwrap();
        for name in PRESETS {
            let model = MissModel::preset(name, 10, Some(&x), 3, &PresetOptions::default()).unwrap();
            for (f, m) in [(0.10, 5), (0.35, 16), (0.60, 27)] {
                let d = generate(&model, 10, Some(f), &quick(4), None).unwrap();
                assert_eq!(d.missing_count(), m, "{name} at {f}");
            }
        }
    }

    #[test]
    fn infeasible_fraction_rejected() {
        let r = gen_independent(&MissModel::HomBernoulli { p: 0.3 }, 5, 1, Some(1.5), None);
        assert!(matches!(r, Err(Error::InfeasibleFraction(_))));
    }

    #[test]
    fn mnar_preset_needs_network() {
        let r = MissModel::preset("ergm_mnar_t3", 5, None, 0, &PresetOptions::default());
        assert!(matches!(r, Err(Error::MissingNetwork)));
    }

    #[test]
    fn classification_of_presets() {
        let x = Graph::complete(5);
        let opts = PresetOptions::default();
        let get = |name| classify_assumption(&MissModel::preset(name, 5, Some(&x), 0, &opts).unwrap());
        assert_eq!(get("ergm_mnar_t3"), MissAssumption::MNAR);
        assert_eq!(get("ergm_mcar_t3"), MissAssumption::MCAR);
        assert_eq!(get("hbern"), MissAssumption::HomogeneousMCAR);
        assert_eq!(get("latent"), MissAssumption::HeterogeneousMCAR);
    }

    #[test]
    fn weighted_sample_prefers_heavy_items() {
        let mut rng = rng::rng(9);
        let weights = [0.01, 0.01, 10.0, 0.0];
        let mut hits = [0usize; 4];
        for _ in 0..500 {
            for k in weighted_sample(&weights, 1, &mut rng) {
                hits[k] += 1;
            }
        }
        assert!(hits[2] > 480);
        assert_eq!(hits[3], 0);
        assert_eq!(weighted_sample(&weights, 4, &mut rng), [0, 1, 2, 3]);
    }
}
