//! Model terms, global statistic vectors and change statistics.
//!
//! The same machinery serves the data model (statistics of `X`) and the
//! missingness model (statistics of `D`, possibly interacting with `X`
//! through [`Term::EdgeCov`] and [`Term::DegreeCovSum`]).
//!
//! Geometrically weighted terms use decay `alpha` with ratio
//! `r = 1 - exp(-alpha)`:
//!
//! * GWDegree: `exp(alpha) * sum_i (1 - r^deg(i))`
//! * GWESP: `exp(alpha) * sum_{edges ij} (1 - r^sp(ij))`
//! * Alternating k-star with `lambda`: `sum_k (-1)^k S_k / lambda^(k-2)`,
//!   evaluated as `lambda^2 * sum_i ((1 - 1/lambda)^deg(i) + deg(i)/lambda - 1)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Graph, MissMask, NodeData};
use crate::math;

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Edges,
    /// Alternating k-star with weight `lambda > 1`.
    AltKStar(f64),
    /// Geometrically weighted degree with decay `alpha > 0`.
    GwDegree(f64),
    /// Geometrically weighted edgewise shared partners with decay `alpha > 0`.
    Gwesp(f64),
    /// `sum_{edges} c_i + c_j` for a numeric node attribute.
    NodeCovSum(String),
    /// `sum_{edges} |c_i - c_j|` for a numeric node attribute.
    AbsDiff(String),
    /// Number of edges joining nodes with equal categorical attribute.
    NodeMatch(String),
    /// `sum_{i<j} g_ij x_ij` for a covariate graph `x`; entrainment when `x` is the true network.
    EdgeCov(Graph),
    /// `sum_{i<j} g_ij (deg_x(i) + deg_x(j))` for a covariate graph `x`.
    DegreeCovSum(Graph),
}

impl Term {
    pub fn gwesp_log2() -> Term {
        Term::Gwesp(core::f64::consts::LN_2)
    }

    pub fn gwdegree_log2() -> Term {
        Term::GwDegree(core::f64::consts::LN_2)
    }

    pub fn label(&self) -> String {
        match self {
            Term::Edges => "edges".into(),
            Term::AltKStar(l) => format!("altkstar({})", trim_float(*l)),
            Term::GwDegree(a) => format!("gwdegree({})", trim_float(*a)),
            Term::Gwesp(a) => format!("gwesp({})", trim_float(*a)),
            Term::NodeCovSum(a) => format!("nodecov({a})"),
            Term::AbsDiff(a) => format!("absdiff({a})"),
            Term::NodeMatch(a) => format!("nodematch({a})"),
            Term::EdgeCov(_) => "edgecov".into(),
            Term::DegreeCovSum(_) => "degreecov".into(),
        }
    }

    /// Terms whose statistic depends on more than one dyad at a time.
    pub fn is_dyad_dependent(&self) -> bool {
        matches!(self, Term::AltKStar(_) | Term::GwDegree(_) | Term::Gwesp(_))
    }
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.into()
}

/// Ordered terms with one parameter each.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    terms: Vec<Term>,
    theta: Vec<f64>,
}

impl ModelSpec {
    pub fn new(terms: Vec<Term>, theta: Vec<f64>) -> Result<Self> {
        if terms.len() != theta.len() {
            return Err(Error::InvalidParameter(format!("{} terms but {} parameters", terms.len(), theta.len())));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        for t in &terms {
            match t {
                Term::AltKStar(l) if !(*l > 1.0 && l.is_finite()) => {
                    return Err(Error::InvalidParameter(format!("altkstar lambda {l} must exceed 1")))
                }
                Term::GwDegree(a) | Term::Gwesp(a) if !(*a > 0.0 && a.is_finite()) => {
                    return Err(Error::InvalidParameter(format!("decay {a} must be positive")))
                }
                _ => {}
            }
        }
        Ok(ModelSpec { terms, theta })
    }

    /// Terms with every parameter at zero.
    pub fn with_terms(terms: Vec<Term>) -> Result<Self> {
        let p = terms.len();
        Self::new(terms, vec![0.0; p])
    }

    /// Edges, alternating k-star(2) and GWESP(log 2).
    pub fn structural() -> Self {
        Self::with_terms(vec![Term::Edges, Term::AltKStar(2.0), Term::gwesp_log2()]).unwrap()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(Term::label).collect()
    }

    pub fn with_theta(&self, theta: &[f64]) -> Result<Self> {
        Self::new(self.terms.clone(), theta.to_vec())
    }

    pub fn is_dyad_independent(&self) -> bool {
        !self.terms.iter().any(Term::is_dyad_dependent)
    }

    /// Resolves attribute names and precomputes weight tables for graphs on `n` vertices.
    pub fn compile<'a>(&'a self, n: usize, data: Option<&'a NodeData>) -> Result<CompiledSpec<'a>> {
        let numeric = |name: &str| -> Result<&'a [f64]> {
            let d = data.ok_or_else(|| Error::UnknownAttribute(name.into()))?;
            check_len(d, n)?;
            d.numeric(name).ok_or_else(|| Error::UnknownAttribute(name.into()))
        };
        let kernels = self
            .terms
            .iter()
            .map(|t| {
                Ok(match t {
                    Term::Edges => Kernel::Edges,
                    Term::AltKStar(l) => Kernel::AltKStar { lambda: *l, pow: math::power_table(1.0 - 1.0 / l, n) },
                    Term::GwDegree(a) => {
                        Kernel::GwDegree { scale: math::exp(*a), pow: math::power_table(1.0 - math::exp(-a), n) }
                    }
                    Term::Gwesp(a) => {
                        Kernel::Gwesp { scale: math::exp(*a), pow: math::power_table(1.0 - math::exp(-a), n) }
                    }
                    Term::NodeCovSum(name) => Kernel::NodeCov(numeric(name)?),
                    Term::AbsDiff(name) => Kernel::AbsDiff(numeric(name)?),
                    Term::NodeMatch(name) => {
                        let d = data.ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
                        check_len(d, n)?;
                        let col = d.categorical(name).ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
                        Kernel::NodeMatch(encode_levels(col))
                    }
                    Term::EdgeCov(x) => {
                        check_graph(x, n)?;
                        Kernel::EdgeCov(x)
                    }
                    Term::DegreeCovSum(x) => {
                        check_graph(x, n)?;
                        Kernel::DegreeCov(x)
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledSpec { n, kernels })
    }
}

fn check_len(d: &NodeData, n: usize) -> Result<()> {
    if d.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d.n() });
    }
    Ok(())
}

fn check_graph(x: &Graph, n: usize) -> Result<()> {
    if x.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.n() });
    }
    Ok(())
}

fn encode_levels(col: &[String]) -> Vec<u32> {
    let mut levels: Vec<&str> = col.iter().map(String::as_str).collect();
    levels.sort_unstable();
    levels.dedup();
    col.iter().map(|v| levels.binary_search(&v.as_str()).unwrap() as u32).collect()
}

#[derive(Clone, Debug)]
enum Kernel<'a> {
    Edges,
    AltKStar { lambda: f64, pow: Vec<f64> },
    GwDegree { scale: f64, pow: Vec<f64> },
    Gwesp { scale: f64, pow: Vec<f64> },
    NodeCov(&'a [f64]),
    AbsDiff(&'a [f64]),
    NodeMatch(Vec<u32>),
    EdgeCov(&'a Graph),
    DegreeCov(&'a Graph),
}

/// A [`ModelSpec`] resolved against a vertex count and node data.
#[derive(Clone, Debug)]
pub struct CompiledSpec<'a> {
    n: usize,
    kernels: Vec<Kernel<'a>>,
}

impl CompiledSpec<'_> {
    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Global statistic vector of `g`.
    pub fn stats(&self, g: &Graph) -> Vec<f64> {
        debug_assert_eq!(g.n(), self.n);
        self.kernels.iter().map(|k| kernel_stat(k, g)).collect()
    }

    /// `z(g + ij) - z(g - ij)` written into `out`, whatever the current state of `ij`.
    pub fn change_into(&self, g: &Graph, i: usize, j: usize, out: &mut [f64]) {
        for (k, o) in self.kernels.iter().zip(out.iter_mut()) {
            *o = kernel_change(k, g, i, j);
        }
    }

    pub fn change(&self, g: &Graph, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.change_into(g, i, j, &mut out);
        out
    }

    /// `theta . (z(g + ij) - z(g - ij))`, skipping terms with zero weight.
    #[inline]
    pub fn weighted_change(&self, theta: &[f64], g: &Graph, i: usize, j: usize) -> f64 {
        let mut acc = 0.0;
        for (k, &t) in self.kernels.iter().zip(theta) {
            if t != 0.0 {
                acc += t * kernel_change(k, g, i, j);
            }
        }
        acc
    }
}

fn kernel_stat(k: &Kernel<'_>, g: &Graph) -> f64 {
    match k {
        Kernel::Edges => g.edge_count() as f64,
        Kernel::AltKStar { lambda, pow } => {
            let s: f64 = g.degrees().iter().map(|&d| pow[d as usize] + d as f64 / lambda - 1.0).sum();
            lambda * lambda * s
        }
        Kernel::GwDegree { scale, pow } => scale * g.degrees().iter().map(|&d| 1.0 - pow[d as usize]).sum::<f64>(),
        Kernel::Gwesp { scale, pow } => scale * g.edges().map(|(i, j)| 1.0 - pow[g.shared_partners(i, j)]).sum::<f64>(),
        Kernel::NodeCov(c) => g.edges().map(|(i, j)| c[i] + c[j]).sum(),
        Kernel::AbsDiff(c) => g.edges().map(|(i, j)| (c[i] - c[j]).abs()).sum(),
        Kernel::NodeMatch(c) => g.edges().filter(|&(i, j)| c[i] == c[j]).count() as f64,
        Kernel::EdgeCov(x) => g.edges().filter(|&(i, j)| x.has_edge(i, j)).count() as f64,
        Kernel::DegreeCov(x) => g.edges().map(|(i, j)| (x.degree(i) + x.degree(j)) as f64).sum(),
    }
}

#[inline]
fn kernel_change(k: &Kernel<'_>, g: &Graph, i: usize, j: usize) -> f64 {
    match k {
        Kernel::Edges => 1.0,
        Kernel::AltKStar { lambda, pow } => {
            let x = g.has_edge(i, j) as usize;
            let (di, dj) = (g.degree(i) - x, g.degree(j) - x);
            lambda * (2.0 - pow[di] - pow[dj])
        }
        Kernel::GwDegree { pow, .. } => {
            let x = g.has_edge(i, j) as usize;
            pow[g.degree(i) - x] + pow[g.degree(j) - x]
        }
        Kernel::Gwesp { scale, pow } => {
            let x = g.has_edge(i, j) as usize;
            let mut delta = scale * (1.0 - pow[g.shared_partners(i, j)]);
            for k in g.common_neighbors(i, j) {
                delta += pow[g.shared_partners(i, k) - x] + pow[g.shared_partners(j, k) - x];
            }
            delta
        }
        Kernel::NodeCov(c) => c[i] + c[j],
        Kernel::AbsDiff(c) => (c[i] - c[j]).abs(),
        Kernel::NodeMatch(c) => (c[i] == c[j]) as u8 as f64,
        Kernel::EdgeCov(x) => x.has_edge(i, j) as u8 as f64,
        Kernel::DegreeCov(x) => (x.degree(i) + x.degree(j)) as f64,
    }
}

/// Global statistic vector `z(g)` of `spec` on `g`.
pub fn stat_vector(spec: &ModelSpec, g: &Graph, data: Option<&NodeData>) -> Result<Vec<f64>> {
    Ok(spec.compile(g.n(), data)?.stats(g))
}

/// Change statistic of dyad `(i, j)` on `g`.
pub fn change_stat(spec: &ModelSpec, g: &Graph, dyad: (usize, usize), data: Option<&NodeData>) -> Result<Vec<f64>> {
    let (i, j) = dyad;
    if i == j || i >= g.n() || j >= g.n() {
        return Err(Error::InvalidParameter(format!("invalid dyad ({i}, {j})")));
    }
    Ok(spec.compile(g.n(), data)?.change(g, i, j))
}

/// Degree covariate `sum_{i<j} d_ij (deg_x(i) + deg_x(j))`.
pub fn degree_cov_stat(d: &MissMask, x: &Graph) -> Result<f64> {
    check_graph(x, d.n())?;
    Ok(kernel_stat(&Kernel::DegreeCov(x), d.as_graph()))
}
