//! Dense symmetric matrices and the Cholesky-based helpers built on them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance used when validating symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A finite, symmetric, square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates `m` and wraps it. Symmetry is checked relative to the largest
    /// absolute entry; the stored matrix is the exact average `(m + mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Argument("matrix order must be positive".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes without validation. Used for products that are symmetric
    /// in exact arithmetic, such as `A Σ Aᵀ`.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymMatrix(&self.0 * factor)
    }

    /// Leading `k × k` principal submatrix.
    pub fn leading(&self, k: usize) -> Self {
        SymMatrix(self.0.view((0, 0), (k, k)).into_owned())
    }

    /// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
    pub fn cholesky(&self) -> Result<DMatrix<f64>> {
        cholesky_lower(&self.0)
    }

    /// True when every Cholesky pivot is strictly positive.
    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    /// Inverse through the Cholesky factor. Fails when not positive definite.
    pub fn inverse_spd(&self) -> Result<SymMatrix> {
        let l = self.cholesky()?;
        let l_inv = lower_inverse(&l);
        Ok(SymMatrix::symmetrize(l_inv.transpose() * l_inv))
    }
}

impl std::ops::Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

/// Plain Cholesky–Banachiewicz factorization. The error names the first
/// pivot that is not strictly positive.
pub fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a nonsingular lower-triangular matrix by forward substitution.
pub fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

/// Solves `A X = B` for symmetric positive definite `A`.
pub fn spd_solve(a: &SymMatrix, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = a.cholesky()?;
    let y = l
        .solve_lower_triangular(b)
        .ok_or_else(|| Error::Consistency("singular Cholesky factor".into()))?;
    l.transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Consistency("singular Cholesky factor".into()))
}

/// `‖MᵀM − I‖_max`, the departure of `M` from orthonormal columns.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    (gram - DMatrix::<f64>::identity(m.ncols(), m.ncols())).amax()
}

/// Singular values of a general matrix, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(Error::NonFinite)));
    }

    #[test]
    fn cholesky_names_failing_pivot() {
        let a = SymMatrix::from_diagonal(&[1.0, 2.0, -1.0, 4.0]).unwrap();
        match a.cholesky() {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = SymMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[4.0, 2.0, 0.4, 2.0, 3.0, 0.5, 0.4, 0.5, 2.0],
        ))
        .unwrap();
        let l = a.cholesky().unwrap();
        assert!((&l * l.transpose() - a.as_matrix()).amax() < 1e-14);
        let inv = a.inverse_spd().unwrap();
        let eye = inv.as_matrix() * a.as_matrix();
        assert!((eye - DMatrix::<f64>::identity(3, 3)).amax() < 1e-13);
    }

    #[test]
    fn spd_solve_matches_inverse() {
        let a = SymMatrix::from_diagonal(&[2.0, 4.0]).unwrap();
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let x = spd_solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((x[(1, 0)] - 0.25).abs() < 1e-15);
    }
}
