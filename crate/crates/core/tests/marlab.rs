use netmiss_core::marlab::{build_mar_pair, check_mar, marginals, product_pair, PairClass, PairMechanism};
use proptest::prelude::*;

type Table = [[f64; 2]; 2];

/// Direct reading of the definition: each pattern's probability may depend
/// only on the tie variables it leaves observed.
fn oracle(g10: &Table, g01: &Table, g11: &Table) -> PairClass {
    let g00: Table = [
        [0, 1].map(|b| 1.0 - g10[0][b] - g01[0][b] - g11[0][b]),
        [0, 1].map(|b| 1.0 - g10[1][b] - g01[1][b] - g11[1][b]),
    ];
    let same = |x: f64, y: f64| (x - y).abs() < 1e-9;
    let all_equal = |t: &Table| t.iter().flatten().all(|v| same(*v, t[0][0]));
    if [g00, *g10, *g01, *g11].iter().all(all_equal) {
        return PairClass::Mcar;
    }
    let g10_ok = same(g10[0][0], g10[1][0]) && same(g10[0][1], g10[1][1]);
    let g01_ok = same(g01[0][0], g01[0][1]) && same(g01[1][0], g01[1][1]);
    if g10_ok && g01_ok && all_equal(g11) {
        PairClass::MarConsistent
    } else {
        PairClass::Mnar
    }
}

fn lattice_table() -> impl Strategy<Value = Table> {
    // few distinct values so equal cells occur often
    proptest::array::uniform2(proptest::array::uniform2(prop::sample::select(vec![0.0, 0.1, 0.2])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn classifier_matches_definition(g10 in lattice_table(), g01 in lattice_table(), g11 in lattice_table()) {
        let m = PairMechanism::from_tables(g10, g01, g11).unwrap();
        prop_assert_eq!(check_mar(&m), oracle(&g10, &g01, &g11));
        prop_assert!(m.complement_error() < 1e-12);
    }

    #[test]
    fn built_pairs_are_mar(a in 0.0f64..0.3, b in 0.0f64..0.3, c in 0.0f64..0.3, d in 0.0f64..0.3, e in 0.0f64..0.3) {
        let m = build_mar_pair([a, b], [c, d], e).unwrap();
        let class = check_mar(&m);
        prop_assert!(class == PairClass::MarConsistent || class == PairClass::Mcar);
        prop_assert!(m.complement_error() < 1e-12);
    }

    #[test]
    fn product_pairs(p in proptest::array::uniform2(0.0f64..1.0), q in proptest::array::uniform2(0.0f64..1.0)) {
        let m = product_pair(p, q).unwrap();
        prop_assert!(m.complement_error() < 1e-12);
        let (row, col) = marginals(&m);
        for a in 0..2 {
            for b in 0..2 {
                prop_assert!((row[a][b] - p[a]).abs() < 1e-12);
                prop_assert!((col[a][b] - q[b]).abs() < 1e-12);
            }
        }
        let constant = (p[0] - p[1]).abs() < 1e-12 && (q[0] - q[1]).abs() < 1e-12;
        prop_assert_eq!(check_mar(&m), if constant { PairClass::Mcar } else { PairClass::Mnar });
    }

    #[test]
    fn over_full_tables_rejected(x in 0.35f64..0.6) {
        let t = [[x; 2]; 2];
        prop_assert!(PairMechanism::from_tables(t, t, t).is_err());
    }
}

#[test]
fn constant_product_is_mcar() {
    assert_eq!(check_mar(&product_pair([0.3, 0.3], [0.2, 0.2]).unwrap()), PairClass::Mcar);
    assert!(PairMechanism::from_tables([[-0.1; 2]; 2], [[0.0; 2]; 2], [[0.0; 2]; 2]).is_err());
}
