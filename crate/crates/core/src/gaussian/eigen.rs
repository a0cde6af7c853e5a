//! Cyclic Jacobi eigendecomposition for dense symmetric matrices.

use nalgebra::{DMatrix, DVector};

use super::matrix::SymMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Ascending,
    Descending,
}

/// Eigenvalues with their orthonormal eigenvectors stored as columns of
/// `vectors`, so that `A = V diag(values) Vᵀ`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPair {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose()
    }
}

/// Full spectral factorization of `a`, sorted by `order`. Equal eigenvalues
/// keep the order in which the sweep left them on the diagonal.
pub fn eig_sym(a: &SymMatrix, order: Order) -> Result<EigenPair> {
    let n = a.order();
    let mut w = a.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);

    let norm = w.norm();
    let target = f64::EPSILON * norm.max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&w) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }
    if !converged {
        let residual = off_diagonal_norm(&w);
        if residual > 1e-12 * norm {
            return Err(Error::NoConvergence {
                sweeps: MAX_SWEEPS,
                residual,
            });
        }
    }

    let raw: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    match order {
        Order::Ascending => idx.sort_by(|&i, &j| raw[i].total_cmp(&raw[j])),
        Order::Descending => idx.sort_by(|&i, &j| raw[j].total_cmp(&raw[i])),
    }

    let values = DVector::from_iterator(n, idx.iter().map(|&i| raw[i]));
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok(EigenPair { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues_ascending(a: &SymMatrix) -> Result<Vec<f64>> {
    Ok(eig_sym(a, Order::Ascending)?
        .values
        .iter()
        .copied()
        .collect())
}

fn off_diagonal_norm(w: &DMatrix<f64>) -> f64 {
    let n = w.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += w[(i, j)] * w[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `w[p, q]`: `W ← JᵀWJ`, `V ← VJ`.
fn rotate(w: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = w[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = w[(p, p)];
    let aqq = w[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.0
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + theta.hypot(1.0))
    };
    if t == 0.0 {
        // |apq| is negligible against the diagonal gap.
        w[(p, q)] = 0.0;
        w[(q, p)] = 0.0;
        return;
    }
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let n = w.nrows();

    for k in 0..n {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = c * wkp - s * wkq;
        w[(k, q)] = s * wkp + c * wkq;
    }
    for k in 0..n {
        let wpk = w[(p, k)];
        let wqk = w[(q, k)];
        w[(p, k)] = c * wpk - s * wqk;
        w[(q, k)] = s * wpk + c * wqk;
    }
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{random_symmetric, RngStream};

    fn check_factorization(a: &SymMatrix, e: &EigenPair) {
        let n = a.order();
        let scale = a.as_matrix().norm().max(1.0);
        assert!((e.reconstruct() - a.as_matrix()).norm() <= 1e-10 * scale);
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - DMatrix::<f64>::identity(n, n)).norm() <= 1e-10);
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let a = SymMatrix::identity(3);
        let e = eig_sym(&a, Order::Ascending).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);
        check_factorization(&a, &e);
    }

    #[test]
    fn diagonal_descending() {
        let a = SymMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let e = eig_sym(&a, Order::Descending).unwrap();
        assert_eq!(e.values.as_slice(), &[2.0, 1.0]);
        // permutation-signed identity
        assert_eq!(e.vectors[(1, 0)].abs(), 1.0);
        assert_eq!(e.vectors[(0, 1)].abs(), 1.0);
        assert_eq!(e.vectors[(0, 0)], 0.0);
    }

    #[test]
    fn ties_keep_original_index_order() {
        let a = SymMatrix::from_diagonal(&[3.0, 1.0, 3.0, 1.0]).unwrap();
        let e = eig_sym(&a, Order::Ascending).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 3.0, 3.0]);
        assert_eq!(e.vectors[(1, 0)], 1.0);
        assert_eq!(e.vectors[(3, 1)], 1.0);
        assert_eq!(e.vectors[(0, 2)], 1.0);
        assert_eq!(e.vectors[(2, 3)], 1.0);
    }

    #[test]
    fn random_8x8_reconstructs() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..20 {
            let a = random_symmetric(8, &mut rng);
            for order in [Order::Ascending, Order::Descending] {
                let e = eig_sym(&a, order).unwrap();
                check_factorization(&a, &e);
                let sorted = e.values.as_slice().windows(2).all(|w| match order {
                    Order::Ascending => w[0] <= w[1],
                    Order::Descending => w[0] >= w[1],
                });
                assert!(sorted);
            }
        }
    }

    #[test]
    fn ill_scaled_entries() {
        let a = SymMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[1e8, 1.0, 0.0, 1.0, 1e-8, 1e-9, 0.0, 1e-9, 1.0],
        ))
        .unwrap();
        let e = eig_sym(&a, Order::Ascending).unwrap();
        check_factorization(&a, &e);
    }

    #[test]
    fn trace_is_preserved() {
        let mut rng = RngStream::new(5, 3);
        let a = random_symmetric(12, &mut rng);
        let e = eig_sym(&a, Order::Ascending).unwrap();
        assert!((e.values.sum() - a.trace()).abs() < 1e-12 * a.as_matrix().norm().max(1.0));
    }
}
