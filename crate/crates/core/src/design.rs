//! Closed-form construction of reduction transforms that minimize the
//! expected Chernoff bound.
//!
//! With `Σx = F Λ² Fᵀ`, whiten the total covariance into
//! `P = Λ⁻¹ Fᵀ (Σx + Σe) F Λ⁻¹ = U_p Λ_p U_pᵀ` and set `Λ̂_p = I − Λ_p⁻¹`.
//! Every full-rank `T` can be written `T = E D Mᵀ U_pᵀ Λ⁻¹ Fᵀ` with `E`
//! orthogonal, `D` positive diagonal and `M` an `n × m` matrix with
//! orthonormal columns, and then
//!
//! ```text
//! J(T) = det(I_m + W/2) = G(M) = 2^{-m} ∏ᵢ [1 + 1/λᵢ(Mᵀ Λ̂_p M)].
//! ```
//!
//! By eigenvalue interlacing, `G` is maximized by any `M` spanning the
//! eigenvectors of the `m` smallest entries of `Λ̂_p`.
//!
//! Two scalings of the optimum appear: the bare product `∏ [1 + 1/λ]` (kept
//! as [`TransformFactors::optimal_value`]) and `J`-units, which carry the
//! extra `2^{-m}`. Convert only through [`product_to_j`] / [`j_to_product`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{eig_sym, orthonormality_defect, Order, RngStream, SymMatrix};
use crate::model::{check_full_row_rank, expected_chernoff_bound, ProblemInstance};

const UNITARY_TOL: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-8;
const ATTAINED_REL_TOL: f64 = 1e-6;

/// `2^{-m} · product`.
pub fn product_to_j(product: f64, m: usize) -> f64 {
    product * 0.5_f64.powi(m as i32)
}

/// `2^{m} · j`.
pub fn j_to_product(j: f64, m: usize) -> f64 {
    j * 2.0_f64.powi(m as i32)
}

/// The factorizations that drive transform design for a given `(Σx, Σe, m)`.
#[derive(Debug, Clone)]
pub struct TransformFactors {
    sigma_x: SymMatrix,
    sigma_e: SymMatrix,
    m: usize,
    /// Eigenvectors of `Σx` (columns), eigenvalues descending.
    pub f: DMatrix<f64>,
    /// Diagonal of `Λ`: square roots of the eigenvalues of `Σx`.
    pub lambda: DVector<f64>,
    pub p: SymMatrix,
    /// Eigenvectors of `P` (columns), eigenvalues ascending.
    pub u_p: DMatrix<f64>,
    pub lambda_p: DVector<f64>,
    /// Diagonal of `Λ̂_p = I − Λ_p⁻¹`.
    pub lambda_hat: DVector<f64>,
    /// Stable ascending argsort of `lambda_hat`: `lambda_hat[perm[k]]` is the
    /// `k`-th smallest entry.
    pub perm: Vec<usize>,
    /// The `m` indices of the smallest `lambda_hat` entries, in `perm` order.
    pub selection: Vec<usize>,
}

impl TransformFactors {
    pub fn n(&self) -> usize {
        self.sigma_x.order()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma_x(&self) -> &SymMatrix {
        &self.sigma_x
    }

    pub fn sigma_e(&self) -> &SymMatrix {
        &self.sigma_e
    }

    /// `U_pᵀ Λ⁻¹ Fᵀ`, the fixed right-hand factor of every design.
    pub fn whitening_map(&self) -> DMatrix<f64> {
        let lambda_inv = DMatrix::from_diagonal(&self.lambda.map(|l| 1.0 / l));
        self.u_p.transpose() * lambda_inv * self.f.transpose()
    }

    /// Bare-product optimum `∏_{i ∈ selection} [1 + 1/λ̂ᵢ]`.
    pub fn optimal_value(&self) -> f64 {
        optimal_value(self)
    }

    /// Optimum in `J`-units.
    pub fn optimal_j(&self) -> f64 {
        product_to_j(self.optimal_value(), self.m)
    }

    /// `T = E D Mᵀ U_pᵀ Λ⁻¹ Fᵀ`.
    pub fn transform_from(
        &self,
        m_mat: &DMatrix<f64>,
        e: &DMatrix<f64>,
        d: &DVector<f64>,
    ) -> DMatrix<f64> {
        e * DMatrix::from_diagonal(d) * m_mat.transpose() * self.whitening_map()
    }

    /// `M = Qᵀ [Γ; 0]`: row `perm[k]` of `M` is row `k` of `Γ`.
    pub fn selection_matrix(&self, gamma: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m_mat = DMatrix::<f64>::zeros(self.n(), self.m);
        for (k, &row) in self.selection.iter().enumerate() {
            m_mat.set_row(row, &gamma.row(k));
        }
        m_mat
    }

    /// `Mᵀ Λ̂_p M`.
    pub fn reduced_spectrum_matrix(&self, m_mat: &DMatrix<f64>) -> SymMatrix {
        let hat = DMatrix::from_diagonal(&self.lambda_hat);
        SymMatrix::symmetrize(m_mat.transpose() * hat * m_mat)
    }
}

/// Eigenfactorizations of `Σx` and `P`, the `Λ̂_p` spectrum, its sorting
/// permutation and the `m`-smallest selection.
pub fn factorize(sigma_x: &SymMatrix, sigma_e: &SymMatrix, m: usize) -> Result<TransformFactors> {
    let n = sigma_x.order();
    if sigma_e.order() != n {
        return Err(Error::Dimension(format!(
            "signal covariance is {n}x{n} but noise covariance is {0}x{0}",
            sigma_e.order()
        )));
    }
    if m == 0 || m >= n {
        return Err(Error::Argument(format!(
            "partial information length must satisfy 0 < m < n, got m={m}, n={n}"
        )));
    }
    let sx = eig_sym(sigma_x, Order::Descending)?;
    let smallest = sx.values[n - 1];
    if !(smallest > 0.0) {
        return Err(Error::NotPositiveDefiniteSpectrum { smallest });
    }
    sigma_e.cholesky()?;

    let f = sx.vectors;
    let lambda = sx.values.map(f64::sqrt);
    let lambda_inv = DMatrix::from_diagonal(&lambda.map(|l| 1.0 / l));
    let left = &lambda_inv * f.transpose();
    let p = SymMatrix::symmetrize(&left * (sigma_x + sigma_e).as_matrix() * left.transpose());

    let pe = eig_sym(&p, Order::Ascending)?;
    let lambda_p = pe.values;
    let lambda_hat = lambda_p.map(|v| 1.0 - 1.0 / v);
    if let Some((i, v)) = lambda_hat
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && **v < 1.0))
    {
        return Err(Error::Consistency(format!(
            "whitened spectrum entry {i} is {v:.3e}, outside (0, 1); noise covariance is numerically singular relative to the signal"
        )));
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| lambda_hat[a].total_cmp(&lambda_hat[b]));
    let selection = perm[..m].to_vec();

    Ok(TransformFactors {
        sigma_x: sigma_x.clone(),
        sigma_e: sigma_e.clone(),
        m,
        f,
        lambda,
        p,
        u_p: pe.vectors,
        lambda_p,
        lambda_hat,
        perm,
        selection,
    })
}

/// `∏_{i ∈ I} [1 + 1/λᵢ(Λ̂_p)]` over the `m` smallest entries.
pub fn optimal_value(factors: &TransformFactors) -> f64 {
    factors
        .selection
        .iter()
        .map(|&i| 1.0 + 1.0 / factors.lambda_hat[i])
        .product()
}

/// `G(M) = 2^{-m} ∏ᵢ [1 + 1/λᵢ(Mᵀ Λ̂_p M)]`.
pub fn g_of_m(factors: &TransformFactors, m_mat: &DMatrix<f64>) -> Result<f64> {
    if m_mat.shape() != (factors.n(), factors.m()) {
        return Err(Error::Dimension(format!(
            "M must be {}x{}, got {}x{}",
            factors.n(),
            factors.m(),
            m_mat.nrows(),
            m_mat.ncols()
        )));
    }
    let defect = orthonormality_defect(m_mat);
    if defect > ORTHONORMAL_TOL {
        return Err(Error::Argument(format!(
            "M does not have orthonormal columns (defect {defect:.3e})"
        )));
    }
    let reduced = eig_sym(&factors.reduced_spectrum_matrix(m_mat), Order::Ascending)?;
    let product: f64 = reduced.values.iter().map(|l| 1.0 + 1.0 / l).product();
    Ok(product_to_j(product, factors.m()))
}

/// `J(T) = det(I_m + W/2)`.
pub fn j_of_t(inst: &ProblemInstance) -> Result<f64> {
    Ok(expected_chernoff_bound(inst)?.j_value)
}

/// Free parameters of the optimal family. `None` means identity.
#[derive(Debug, Clone, Default)]
pub struct FamilyMember {
    pub e: Option<DMatrix<f64>>,
    pub d: Option<DVector<f64>>,
    pub gamma: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct OptimalTransform {
    pub t: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub d: DVector<f64>,
    pub gamma: DMatrix<f64>,
    /// The `M` used in the assembly.
    pub m_mat: DMatrix<f64>,
    /// `J(T)` evaluated through the expected Chernoff bound.
    pub attained_j: f64,
    /// Bare-product optimum; `attained_j == product_to_j(optimal_value, m)`.
    pub optimal_value: f64,
}

impl OptimalTransform {
    pub fn instance(&self, factors: &TransformFactors) -> Result<ProblemInstance> {
        ProblemInstance::new(
            factors.sigma_x().clone(),
            factors.sigma_e().clone(),
            self.t.clone(),
        )
    }
}

fn check_orthogonal(name: &str, a: &DMatrix<f64>, m: usize) -> Result<()> {
    if a.shape() != (m, m) {
        return Err(Error::Argument(format!(
            "{name} must be {m}x{m}, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = orthonormality_defect(a);
    if defect > UNITARY_TOL {
        return Err(Error::Argument(format!(
            "{name} is not orthogonal (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Assembles `T = E D Mᵀ U_pᵀ Λ⁻¹ Fᵀ` with `M = Qᵀ [Γ; 0]` and checks that
/// the attained `J(T)` equals the closed-form optimum.
pub fn build_optimal(
    factors: &TransformFactors,
    member: &FamilyMember,
) -> Result<OptimalTransform> {
    let m = factors.m();
    let e = member.e.clone().unwrap_or_else(|| DMatrix::identity(m, m));
    let gamma = member
        .gamma
        .clone()
        .unwrap_or_else(|| DMatrix::identity(m, m));
    let d = member
        .d
        .clone()
        .unwrap_or_else(|| DVector::from_element(m, 1.0));
    check_orthogonal("E", &e, m)?;
    check_orthogonal("Gamma", &gamma, m)?;
    if d.len() != m {
        return Err(Error::Argument(format!(
            "D must have {m} entries, got {}",
            d.len()
        )));
    }
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Argument(
            "D must have finite positive entries".into(),
        ));
    }

    let m_mat = factors.selection_matrix(&gamma);
    let t = factors.transform_from(&m_mat, &e, &d);
    let inst = ProblemInstance::new(
        factors.sigma_x().clone(),
        factors.sigma_e().clone(),
        t.clone(),
    )?;
    let attained_j = j_of_t(&inst)?;
    let optimal_value = factors.optimal_value();
    let expected = product_to_j(optimal_value, m);
    let rel = ((attained_j - expected) / expected).abs();
    if rel > ATTAINED_REL_TOL {
        return Err(Error::Consistency(format!(
            "assembled transform attains J = {attained_j}, closed form gives {expected} (relative gap {rel:.3e})"
        )));
    }
    Ok(OptimalTransform {
        t,
        e,
        d,
        gamma,
        m_mat,
        attained_j,
        optimal_value,
    })
}

/// Decomposition of an arbitrary full-rank `T` as `Ẽ D̃ Mᵀ U_pᵀ Λ⁻¹ Fᵀ`.
#[derive(Debug, Clone)]
pub struct Lift {
    pub m_mat: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub d: DVector<f64>,
}

/// Writes `T Σx Tᵀ = Ẽ D̃² Ẽᵀ` (singular values descending, first row of `Ẽ`
/// non-negative) and returns `M = U_pᵀ Λ Fᵀ Tᵀ Ẽ D̃⁻¹` together with `Ẽ, D̃`.
pub fn lift_transform(inst: &ProblemInstance, factors: &TransformFactors) -> Result<Lift> {
    if inst.n() != factors.n() || inst.m() != factors.m() {
        return Err(Error::Dimension(
            "instance and factors disagree on (n, m)".into(),
        ));
    }
    let eig = eig_sym(&inst.sigma_z(), Order::Descending)?;
    let mut e = eig.vectors;
    for j in 0..e.ncols() {
        if e[(0, j)] < 0.0 {
            e.column_mut(j).neg_mut();
        }
    }
    if let Some(bad) = eig.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::NotPositiveDefiniteSpectrum { smallest: *bad });
    }
    let d = eig.values.map(f64::sqrt);
    let d_inv = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
    let lambda = DMatrix::from_diagonal(&factors.lambda);
    let m_mat = factors.u_p.transpose()
        * lambda
        * factors.f.transpose()
        * inst.transform().transpose()
        * &e
        * d_inv;
    Ok(Lift { m_mat, e, d })
}

/// i.i.d. standard normal `m × n` matrix, redrawn until full row rank.
pub fn random_full_rank_t(n: usize, m: usize, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    if m == 0 || m >= n {
        return Err(Error::Argument(format!("need 0 < m < n, got m={m}, n={n}")));
    }
    loop {
        let t = rng.standard_normal_matrix(m, n);
        if check_full_row_rank(&t).is_ok() {
            return Ok(t);
        }
    }
}
