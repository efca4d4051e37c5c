//! Brute-force oracles on a plain adjacency matrix, independent of the
//! library's graph representation and change-statistic code.
#![allow(dead_code)]

use netmiss_core::{Graph, ModelSpec, Term};

pub type Adj = Vec<Vec<bool>>;

pub fn adjacency(g: &Graph) -> Adj {
    let n = g.n();
    (0..n).map(|i| (0..n).map(|j| i != j && g.has_edge(i, j)).collect()).collect()
}

/// Graph whose dyads in lexicographic order are the bits of `code`.
pub fn graph_from_code(n: usize, code: usize) -> Graph {
    let mut g = Graph::empty(n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if code >> k & 1 == 1 {
                g.set(i, j, true);
            }
            k += 1;
        }
    }
    g
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

fn degrees(a: &Adj) -> Vec<usize> {
    a.iter().map(|row| row.iter().filter(|x| **x).count()).collect()
}

fn shared(a: &Adj, i: usize, j: usize) -> usize {
    (0..a.len()).filter(|&k| a[i][k] && a[j][k]).count()
}

/// Alternating k-star as the signed series of k-star counts.
pub fn alt_kstar(a: &Adj, lambda: f64) -> f64 {
    let d = degrees(a);
    let n = a.len();
    (2..n)
        .map(|k| {
            let s_k: f64 = d.iter().map(|&di| binom(di, k)).sum();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * s_k / lambda.powi(k as i32 - 2)
        })
        .sum()
}

/// Geometrically weighted degree from the degree distribution.
pub fn gwdegree(a: &Adj, alpha: f64) -> f64 {
    let d = degrees(a);
    let r = 1.0 - (-alpha).exp();
    (1..a.len()).map(|k| (1.0 - r.powi(k as i32)) * d.iter().filter(|&&x| x == k).count() as f64).sum::<f64>()
        * alpha.exp()
}

/// GWESP from the edgewise shared-partner distribution.
pub fn gwesp(a: &Adj, alpha: f64) -> f64 {
    let n = a.len();
    let mut ep = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if a[i][j] {
                ep[shared(a, i, j)] += 1;
            }
        }
    }
    let r = 1.0 - (-alpha).exp();
    alpha.exp() * (1..n).map(|k| (1.0 - r.powi(k as i32)) * ep[k] as f64).sum::<f64>()
}

pub fn edges(a: &Adj) -> f64 {
    degrees(a).iter().sum::<usize>() as f64 / 2.0
}

/// Statistics of structural terms; other terms are not covered.
pub fn naive_stats(spec: &ModelSpec, g: &Graph) -> Vec<f64> {
    let a = adjacency(g);
    spec.terms()
        .iter()
        .map(|t| match t {
            Term::Edges => edges(&a),
            Term::AltKStar(l) => alt_kstar(&a, *l),
            Term::GwDegree(al) => gwdegree(&a, *al),
            Term::Gwesp(al) => gwesp(&a, *al),
            other => panic!("no oracle for {other:?}"),
        })
        .collect()
}

/// Exact distribution over all graphs on `n` vertices accepted by `keep`,
/// computed by the oracle statistics: `(probabilities by code, mean)`.
pub fn naive_exact(spec: &ModelSpec, n: usize, keep: impl Fn(&Graph) -> bool) -> (Vec<f64>, Vec<f64>) {
    let dyads = n * (n - 1) / 2;
    let p = spec.len();
    let mut logw = vec![f64::NEG_INFINITY; 1 << dyads];
    let mut stats = vec![vec![0.0; p]; 1 << dyads];
    for code in 0..1usize << dyads {
        let g = graph_from_code(n, code);
        if keep(&g) {
            let z = naive_stats(spec, &g);
            logw[code] = z.iter().zip(spec.theta()).map(|(a, b)| a * b).sum();
            stats[code] = z;
        }
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
    let mean = (0..p).map(|k| probs.iter().zip(&stats).map(|(pr, z)| pr * z[k]).sum()).collect();
    (probs, mean)
}

/// Code of `g` in the same dyad order as [`graph_from_code`].
pub fn code_of(g: &Graph) -> usize {
    let n = g.n();
    let mut code = 0;
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if g.has_edge(i, j) {
                code |= 1 << k;
            }
            k += 1;
        }
    }
    code
}

/// Total-variation distance between an empirical distribution and `probs`.
pub fn tv_distance(graphs: &[Graph], probs: &[f64]) -> f64 {
    let mut counts = vec![0.0; probs.len()];
    for g in graphs {
        counts[code_of(g)] += 1.0;
    }
    let m = graphs.len() as f64;
    0.5 * counts.iter().zip(probs).map(|(c, p)| (c / m - p).abs()).sum::<f64>()
}

pub fn structural(theta: &[f64]) -> ModelSpec {
    ModelSpec::structural().with_theta(theta).unwrap()
}
