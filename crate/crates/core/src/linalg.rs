//! Small dense linear algebra on top of `nalgebra`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;

/// Sample mean and (n - 1)-normalised covariance of row vectors.
pub fn mean_cov(rows: &[Vec<f64>]) -> (Vec<f64>, Matrix) {
    let p = rows.first().map_or(0, Vec::len);
    let m = rows.len();
    let mut mean = alloc::vec![0.0; p];
    for r in rows {
        for (a, x) in mean.iter_mut().zip(r) {
            *a += x;
        }
    }
    if m > 0 {
        mean.iter_mut().for_each(|a| *a /= m as f64);
    }
    let mut cov = Matrix::zeros(p, p);
    for r in rows {
        for a in 0..p {
            let da = r[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += da * (r[b] - mean[b]);
            }
        }
    }
    let denom = (m.max(2) - 1) as f64;
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

/// Weighted mean and covariance; weights need not be normalised.
pub fn weighted_mean_cov(rows: &[Vec<f64>], weights: &[f64]) -> (Vec<f64>, Matrix) {
    let p = rows.first().map_or(0, Vec::len);
    let total: f64 = weights.iter().sum();
    let mut mean = alloc::vec![0.0; p];
    for (r, w) in rows.iter().zip(weights) {
        for (a, x) in mean.iter_mut().zip(r) {
            *a += w * x;
        }
    }
    mean.iter_mut().for_each(|a| *a /= total);
    let mut cov = Matrix::zeros(p, p);
    for (r, w) in rows.iter().zip(weights) {
        for a in 0..p {
            for b in a..p {
                cov[(a, b)] += w * (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / total;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

pub fn eigenvalues(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Inverse of a symmetric positive definite matrix, `None` otherwise.
pub fn spd_inverse(m: &Matrix) -> Option<Matrix> {
    let inv = m.clone().cholesky()?.inverse();
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Inverse after flooring every eigenvalue at `floor`.
pub fn floored_inverse(m: &Matrix, floor: f64) -> Matrix {
    let eig = m.clone().symmetric_eigen();
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v.max(floor));
    &eig.eigenvectors * Matrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose()
}

/// Condition number of the correlation matrix implied by `cov`;
/// infinite when a variance is zero or the matrix is singular.
pub fn correlation_condition(cov: &Matrix) -> f64 {
    let p = cov.nrows();
    if p == 0 {
        return 1.0;
    }
    let d: Vec<f64> = (0..p).map(|i| cov[(i, i)]).collect();
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return f64::INFINITY;
    }
    let corr = Matrix::from_fn(p, p, |a, b| cov[(a, b)] / crate::math::sqrt(d[a] * d[b]));
    let ev = eigenvalues(&corr);
    let (lo, hi) = (ev[0], ev[p - 1]);
    if !(lo > 0.0) {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

pub fn quad_form(m: &Matrix, v: &[f64]) -> f64 {
    let x = DVector::from_column_slice(v);
    (x.transpose() * m * &x)[(0, 0)]
}

pub fn from_rows(p: usize, data: &[f64]) -> Matrix {
    Matrix::from_row_slice(p, p, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn covariance_of_known_rows() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 10.0]];
        let (mean, cov) = mean_cov(&rows);
        assert_eq!(mean, [3.0, 6.0]);
        assert_eq!(cov[(0, 0)], 4.0);
        assert_eq!(cov[(0, 1)], 8.0);
        assert_eq!(correlation_condition(&cov), f64::INFINITY);
    }

    #[test]
    fn inverses() {
        let m = from_rows(2, &[2.0, 1.0, 1.0, 2.0]);
        let inv = spd_inverse(&m).unwrap();
        assert!((inv[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
        assert!(spd_inverse(&from_rows(2, &[1.0, 2.0, 2.0, 1.0])).is_none());
        let fl = floored_inverse(&m, 1e-8);
        assert!((fl[(0, 1)] + 1.0 / 3.0).abs() < 1e-12);
        assert!((correlation_condition(&m) - 3.0).abs() < 1e-12);
    }
}
