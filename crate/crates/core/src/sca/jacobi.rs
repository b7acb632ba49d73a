//! Cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Rotations sweep the upper triangle in row order until the off-diagonal
//! Frobenius norm falls below 1e-12 (capped at 100 sweeps). Eigenpairs are
//! returned sorted by descending eigenvalue.

use crate::error::{Error, Result};

pub const OFF_DIAG_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix: `values[k]` with column
/// eigenvector `vectors[k]`, descending by value.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn off_diag_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i][j] * a[i][j];
            }
        }
    }
    s.sqrt()
}

pub fn eigh(matrix: &[Vec<f64>]) -> Result<Eigen> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    // Accumulated rotations: v[i][k] = i-th component of eigenvector k.
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diag_norm(&a) < OFF_DIAG_TOL {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                // Standard symmetric Schur rotation.
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    if !converged && off_diag_norm(&a) >= OFF_DIAG_TOL {
        return Err(Error::EigenSolver { residual: off_diag_norm(&a) });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| a[k][k]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    Ok(Eigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &[Vec<f64>], e: &Eigen) -> f64 {
        let n = m.len();
        let mut worst: f64 = 0.0;
        for (k, vec) in e.vectors.iter().enumerate() {
            for i in 0..n {
                let mv: f64 = (0..n).map(|j| m[i][j] * vec[j]).sum();
                worst = worst.max((mv - e.values[k] * vec[i]).abs());
            }
        }
        worst
    }

    #[test]
    fn two_by_two() {
        let m = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let e = eigh(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] + 1.0).abs() < 1e-12);
        assert!(residual(&m, &e) < 1e-12);
    }

    #[test]
    fn diagonal_is_fixed_point() {
        let m = vec![
            vec![3.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ];
        let e = eigh(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, -1.0]);
    }

    #[test]
    fn orthonormal_vectors() {
        let m = vec![
            vec![2.0, -1.0, 0.5],
            vec![-1.0, 1.5, 0.25],
            vec![0.5, 0.25, -0.75],
        ];
        let e = eigh(&m).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..3).map(|i| e.vectors[a][i] * e.vectors[b][i]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9, "({a},{b}) dot={dot}");
            }
        }
        assert!(residual(&m, &e) < 1e-9);
    }

    #[test]
    fn descending_order() {
        let m = vec![
            vec![0.0, 0.3, 0.1, 0.2],
            vec![0.3, 0.0, 0.4, 0.1],
            vec![0.1, 0.4, 0.0, 0.5],
            vec![0.2, 0.1, 0.5, 0.0],
        ];
        let e = eigh(&m).unwrap();
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(residual(&m, &e) < 1e-9);
    }
}
