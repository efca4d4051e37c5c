//! Bivariate missingness mechanisms for two tie variables sharing a node.
//!
//! A mechanism gives `g_rs(x_ij, x_ik) = Pr(d_ij = r, d_ik = s | x_ij, x_ik)`
//! as a table over the four cells `(x_ij, x_ik)` and four outcomes `(r, s)`.

use core::fmt;

use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

/// Probability tables indexed `[x_ij][x_ik]`.
pub type CellTable = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMechanism {
    g00: CellTable,
    g01: CellTable,
    g10: CellTable,
    g11: CellTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairClass {
    Mcar,
    MarConsistent,
    Mnar,
}

impl PairClass {
    pub fn label(self) -> &'static str {
        match self {
            PairClass::Mcar => "MCAR",
            PairClass::MarConsistent => "MAR-consistent",
            PairClass::Mnar => "MNAR",
        }
    }
}

impl PairMechanism {
    /// Builds a mechanism from `g10`, `g01`, `g11`; `g00` is their complement.
    pub fn from_tables(g10: CellTable, g01: CellTable, g11: CellTable) -> Result<Self> {
        let mut g00 = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let parts = [g10[a][b], g01[a][b], g11[a][b]];
                if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::InvalidMechanism(alloc::format!(
                        "probability outside [0, 1] at cell ({a}, {b})"
                    )));
                }
                let rest = 1.0 - parts.iter().sum::<f64>();
                if rest < -TOL {
                    return Err(Error::InvalidMechanism(alloc::format!(
                        "g10 + g01 + g11 = {} exceeds 1 at cell ({a}, {b})",
                        1.0 - rest
                    )));
                }
                g00[a][b] = rest.max(0.0);
            }
        }
        Ok(PairMechanism { g00, g01, g10, g11 })
    }

    pub fn g00(&self) -> CellTable {
        self.g00
    }

    pub fn g01(&self) -> CellTable {
        self.g01
    }

    pub fn g10(&self) -> CellTable {
        self.g10
    }

    pub fn g11(&self) -> CellTable {
        self.g11
    }

    /// Largest deviation from `g00 + g01 + g10 + g11 = 1` over the cells.
    pub fn complement_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let s = self.g00[a][b] + self.g01[a][b] + self.g10[a][b] + self.g11[a][b];
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }
}

/// Mechanism with `g10` depending on `x_ik` only, `g01` on `x_ij` only and
/// constant `g11`. Arrays are indexed by the value of that variable.
pub fn build_mar_pair(g10: [f64; 2], g01: [f64; 2], g11: f64) -> Result<PairMechanism> {
    let mut t10 = [[0.0; 2]; 2];
    let mut t01 = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            t10[a][b] = g10[b];
            t01[a][b] = g01[a];
        }
    }
    PairMechanism::from_tables(t10, t01, [[g11; 2]; 2])
}

/// Independent per-variable construction: `d_ij` is missing with
/// probability `p[x_ij]` and `d_ik` with probability `q[x_ik]`, independently.
pub fn product_pair(p: [f64; 2], q: [f64; 2]) -> Result<PairMechanism> {
    let mut g10 = [[0.0; 2]; 2];
    let mut g01 = [[0.0; 2]; 2];
    let mut g11 = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            g11[a][b] = p[a] * q[b];
            g10[a][b] = p[a] * (1.0 - q[b]);
            g01[a][b] = (1.0 - p[a]) * q[b];
        }
    }
    PairMechanism::from_tables(g10, g01, g11)
}

fn constant(t: &CellTable) -> bool {
    t.iter().flatten().all(|v| (v - t[0][0]).abs() <= TOL)
}

fn only_ik(t: &CellTable) -> bool {
    (0..2).all(|b| (t[0][b] - t[1][b]).abs() <= TOL)
}

fn only_ij(t: &CellTable) -> bool {
    (0..2).all(|a| (t[a][0] - t[a][1]).abs() <= TOL)
}

pub fn check_mar(mech: &PairMechanism) -> PairClass {
    if [mech.g00, mech.g01, mech.g10, mech.g11].iter().all(constant) {
        PairClass::Mcar
    } else if only_ik(&mech.g10) && only_ij(&mech.g01) && constant(&mech.g11) {
        PairClass::MarConsistent
    } else {
        PairClass::Mnar
    }
}

/// `(g1+, g+1)`: marginal probabilities that `d_ij`, respectively `d_ik`, is missing.
pub fn marginals(mech: &PairMechanism) -> (CellTable, CellTable) {
    let mut row = [[0.0; 2]; 2];
    let mut col = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            row[a][b] = mech.g11[a][b] + mech.g10[a][b];
            col[a][b] = mech.g11[a][b] + mech.g01[a][b];
        }
    }
    (row, col)
}

impl fmt::Display for PairMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x_ij x_ik      g00      g01      g10      g11")?;
        for a in 0..2 {
            for b in 0..2 {
                writeln!(
                    f,
                    "{a:>4} {b:>4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                    self.g00[a][b], self.g01[a][b], self.g10[a][b], self.g11[a][b]
                )?;
            }
        }
        Ok(())
    }
}
