mod common;

use common::{adjacency, alt_kstar, gwesp, naive_stats};
use netmiss_core::stats::{change_stat, stat_vector};
use netmiss_core::{Graph, ModelSpec, NodeData, Term};
use proptest::prelude::*;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut g = Graph::empty(n);
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    g.set(i, j, bits[k]);
                    k += 1;
                }
            }
            g
        })
    })
}

fn spec(lambda: f64, alpha: f64) -> ModelSpec {
    ModelSpec::with_terms(vec![Term::Edges, Term::AltKStar(lambda), Term::GwDegree(alpha), Term::Gwesp(alpha)]).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn statistics_match_series_forms(g in arb_graph(9), lambda in 1.1f64..4.0, alpha in 0.1f64..2.0) {
        let s = spec(lambda, alpha);
        let got = stat_vector(&s, &g, None).unwrap();
        let want = naive_stats(&s, &g);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!(close(*a, *b), "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn change_is_toggle_difference(g in arb_graph(9), lambda in 1.1f64..4.0, alpha in 0.1f64..2.0, pick in any::<u32>()) {
        let s = spec(lambda, alpha);
        let n = g.n();
        let dyads: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let (i, j) = dyads[pick as usize % dyads.len()];
        let mut on = g.clone();
        on.set(i, j, true);
        let mut off = g.clone();
        off.set(i, j, false);
        let delta = change_stat(&s, &g, (i, j), None).unwrap();
        let brute: Vec<f64> = naive_stats(&s, &on).iter().zip(naive_stats(&s, &off)).map(|(a, b)| a - b).collect();
        for (a, b) in delta.iter().zip(&brute) {
            prop_assert!(close(*a, *b), "{delta:?} vs {brute:?}");
        }
    }

    #[test]
    fn invariant_under_relabelling(g in arb_graph(8), seed in any::<u64>()) {
        let n = g.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for k in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(k, (s >> 33) as usize % (k + 1));
        }
        let sp = spec(2.0, std::f64::consts::LN_2);
        let a = stat_vector(&sp, &g, None).unwrap();
        let b = stat_vector(&sp, &g.permuted(&perm), None).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(close(*x, *y));
        }
    }

    #[test]
    fn covariate_terms(g in arb_graph(8), vals in proptest::collection::vec(-3.0f64..3.0, 8)) {
        let n = g.n();
        let mut data = NodeData::new(n);
        data.add_numeric("c", vals[..n].to_vec()).unwrap();
        data.add_categorical("k", (0..n).map(|i| if vals[i] > 0.0 { "p" } else { "n" }.to_string()).collect()).unwrap();
        let s = ModelSpec::with_terms(vec![
            Term::NodeCovSum("c".into()),
            Term::AbsDiff("c".into()),
            Term::NodeMatch("k".into()),
        ]).unwrap();
        let got = stat_vector(&s, &g, Some(&data)).unwrap();
        let a = adjacency(&g);
        let mut want = [0.0; 3];
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j] {
                    want[0] += vals[i] + vals[j];
                    want[1] += (vals[i] - vals[j]).abs();
                    want[2] += ((vals[i] > 0.0) == (vals[j] > 0.0)) as u8 as f64;
                }
            }
        }
        for (x, y) in got.iter().zip(&want) {
            prop_assert!(close(*x, *y));
        }
    }
}

#[test]
fn star_and_triangle_values() {
    // star on 4 leaves: S2 = 6, S3 = 4, S4 = 1
    let star = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    let a = adjacency(&star);
    assert!(close(alt_kstar(&a, 2.0), 6.0 - 4.0 / 2.0 + 1.0 / 4.0));
    let s = ModelSpec::with_terms(vec![Term::AltKStar(2.0)]).unwrap();
    assert!(close(stat_vector(&s, &star, None).unwrap()[0], 4.25));
    // triangle: every edge has one shared partner, so GWESP = 3
    let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    assert!(close(gwesp(&adjacency(&tri), 0.7), 3.0));
    let s = ModelSpec::with_terms(vec![Term::Gwesp(0.7)]).unwrap();
    assert!(close(stat_vector(&s, &tri, None).unwrap()[0], 3.0));
}

#[test]
fn unknown_attribute_is_reported() {
    let g = Graph::empty(3);
    let s = ModelSpec::with_terms(vec![Term::NodeCovSum("age".into())]).unwrap();
    assert!(matches!(stat_vector(&s, &g, None), Err(netmiss_core::Error::UnknownAttribute(_))));
}
