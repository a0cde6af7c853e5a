//! The statistical model: problem instances, conditional Gaussian statistics
//! given the partial information, the MAP rule and its error probabilities.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{
    lower_inverse, q_chernoff, q_function, singular_values, spd_solve, GaussianSampler, RngStream,
    SymMatrix,
};

/// Smallest admissible ratio of extreme singular values of `T`.
pub const RANK_TOL: f64 = 1e-10;

/// Squared-distance margin under which the MAP rule decides `H0`.
pub const TIE_TOL: f64 = 1e-12;

/// Full statistical description of one detection problem: signal covariance
/// `Σx`, noise covariance `Σe` (both `n × n`) and the reduction `T` (`m × n`).
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    sigma_x: SymMatrix,
    sigma_e: SymMatrix,
    transform: DMatrix<f64>,
}

impl ProblemInstance {
    pub fn new(sigma_x: SymMatrix, sigma_e: SymMatrix, transform: DMatrix<f64>) -> Result<Self> {
        let n = sigma_x.order();
        if sigma_e.order() != n {
            return Err(Error::Dimension(format!(
                "signal covariance is {n}x{n} but noise covariance is {0}x{0}",
                sigma_e.order()
            )));
        }
        if transform.ncols() != n {
            return Err(Error::Dimension(format!(
                "transform has {} columns, expected {n}",
                transform.ncols()
            )));
        }
        let m = transform.nrows();
        if m == 0 || m >= n {
            return Err(Error::Argument(format!(
                "partial information length must satisfy 0 < m < n, got m={m}, n={n}"
            )));
        }
        check_full_row_rank(&transform)?;
        sigma_x.cholesky()?;
        sigma_e.cholesky()?;
        Ok(Self {
            sigma_x,
            sigma_e,
            transform,
        })
    }

    /// Same covariances, different transform.
    pub fn with_transform(&self, transform: DMatrix<f64>) -> Result<Self> {
        Self::new(self.sigma_x.clone(), self.sigma_e.clone(), transform)
    }

    pub fn n(&self) -> usize {
        self.sigma_x.order()
    }

    pub fn m(&self) -> usize {
        self.transform.nrows()
    }

    pub fn sigma_x(&self) -> &SymMatrix {
        &self.sigma_x
    }

    pub fn sigma_e(&self) -> &SymMatrix {
        &self.sigma_e
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    /// `Σz = T Σx Tᵀ`, the covariance of each `z_i`.
    pub fn sigma_z(&self) -> SymMatrix {
        SymMatrix::symmetrize(
            &self.transform * self.sigma_x.as_matrix() * self.transform.transpose(),
        )
    }
}

/// Rejects `T` whose smallest singular value is below `RANK_TOL` times the
/// largest.
pub fn check_full_row_rank(t: &DMatrix<f64>) -> Result<()> {
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let s = singular_values(t);
    let largest = s.first().copied().unwrap_or(0.0);
    let smallest = s.last().copied().unwrap_or(0.0);
    if s.len() < t.nrows() || !(largest > 0.0) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let ratio = smallest / largest;
    if ratio < RANK_TOL {
        return Err(Error::RankDeficient { ratio });
    }
    Ok(())
}

/// Transmitter codewords and the receiver's partial information.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    x0: DVector<f64>,
    x1: DVector<f64>,
    z0: DVector<f64>,
    z1: DVector<f64>,
}

impl Codebook {
    pub fn new(transform: &DMatrix<f64>, x0: DVector<f64>, x1: DVector<f64>) -> Result<Self> {
        if x0.len() != transform.ncols() || x1.len() != transform.ncols() {
            return Err(Error::Dimension(
                "codeword length does not match transform".into(),
            ));
        }
        let z0 = transform * &x0;
        let z1 = transform * &x1;
        Ok(Self { x0, x1, z0, z1 })
    }

    pub fn x(&self, h: Hypothesis) -> &DVector<f64> {
        match h {
            Hypothesis::H0 => &self.x0,
            Hypothesis::H1 => &self.x1,
        }
    }

    pub fn z0(&self) -> &DVector<f64> {
        &self.z0
    }

    pub fn z1(&self) -> &DVector<f64> {
        &self.z1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn index(self) -> usize {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        }
    }
}

/// Everything the detector needs: `Σ_{y|z}`, the gain `Σx Tᵀ (T Σx Tᵀ)⁻¹`
/// that maps `z_i` to `μ_{y_i|z_i}`, and a whitener `L⁻¹` with
/// `L Lᵀ = Σ_{y|z}`, so that `whitenerᵀ whitener = Σ_{y|z}⁻¹`.
///
/// `Σ_{y|z}` does not depend on the hypothesis, so one factorization serves
/// every trial.
#[derive(Debug, Clone)]
pub struct ConditionalStats {
    cond_cov: SymMatrix,
    cond_chol: DMatrix<f64>,
    gain: DMatrix<f64>,
    whitener: DMatrix<f64>,
}

impl ConditionalStats {
    pub fn n(&self) -> usize {
        self.gain.nrows()
    }

    pub fn m(&self) -> usize {
        self.gain.ncols()
    }

    pub fn cond_cov(&self) -> &SymMatrix {
        &self.cond_cov
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn whitener(&self) -> &DMatrix<f64> {
        &self.whitener
    }

    /// Lower Cholesky factor of `Σ_{y|z}`.
    pub fn cond_chol(&self) -> &DMatrix<f64> {
        &self.cond_chol
    }

    /// `μ_{y|z} = gain · z`.
    pub fn conditional_mean(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_z(z)?;
        Ok(&self.gain * z)
    }

    /// `‖Σ_{y|z}^{-1/2} v‖²`.
    pub fn whitened_norm_sq(&self, v: &DVector<f64>) -> f64 {
        (&self.whitener * v).norm_squared()
    }

    /// Squared whitened separation of the two conditional means.
    pub fn separation_sq(&self, z0: &DVector<f64>, z1: &DVector<f64>) -> Result<f64> {
        self.check_z(z0)?;
        self.check_z(z1)?;
        let dz = z0 - z1;
        Ok(self.whitened_norm_sq(&(&self.gain * dz)))
    }

    fn check_z(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.m() {
            return Err(Error::Dimension(format!(
                "partial information has length {}, expected {}",
                z.len(),
                self.m()
            )));
        }
        Ok(())
    }
}

/// Conditional covariance and gain of `y_i = x_i + e` given `z_i = T x_i`.
pub fn conditional_stats(inst: &ProblemInstance) -> Result<ConditionalStats> {
    let sx = inst.sigma_x().as_matrix();
    let t = inst.transform();
    let sigma_z = inst.sigma_z();
    let sx_tt = sx * t.transpose();
    // gain = Σx Tᵀ Σz⁻¹  ⇔  Σz gainᵀ = T Σx
    let gain_t = spd_solve(&sigma_z, &sx_tt.transpose()).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::RankDeficient { ratio: 0.0 },
        other => other,
    })?;
    let gain = gain_t.transpose();
    let explained = &gain * sx_tt.transpose();
    let cond_cov = SymMatrix::symmetrize(sx + inst.sigma_e().as_matrix() - explained);
    let cond_chol = cond_cov.cholesky()?;
    let whitener = lower_inverse(&cond_chol);
    Ok(ConditionalStats {
        cond_cov,
        cond_chol,
        gain,
        whitener,
    })
}

/// MAP (equal priors, uniform costs) decision: the hypothesis whose
/// conditional mean is nearer to `y` in the whitened metric. Differences of
/// squared distance within `TIE_TOL` go to `H0`.
pub fn map_decide(
    stats: &ConditionalStats,
    z0: &DVector<f64>,
    z1: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<Hypothesis> {
    if y.len() != stats.n() {
        return Err(Error::Dimension(format!(
            "observation has length {}, expected {}",
            y.len(),
            stats.n()
        )));
    }
    let mu0 = stats.conditional_mean(z0)?;
    let mu1 = stats.conditional_mean(z1)?;
    let d0 = stats.whitened_norm_sq(&(y - mu0));
    let d1 = stats.whitened_norm_sq(&(y - mu1));
    Ok(decide_from_distances(d0, d1))
}

pub(crate) fn decide_from_distances(d0: f64, d1: f64) -> Hypothesis {
    if d0 - d1 > TIE_TOL {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// `Q(‖Σ_{y|z}^{-1/2}(μ0 − μ1)‖ / 2)`. Identical partial information gives
/// exactly one half.
pub fn conditional_error_prob(
    stats: &ConditionalStats,
    z0: &DVector<f64>,
    z1: &DVector<f64>,
) -> Result<f64> {
    if z0 == z1 {
        stats.check_z(z0)?;
        return Ok(0.5);
    }
    Ok(q_function(stats.separation_sq(z0, z1)?.sqrt() / 2.0))
}

/// `½ exp(−‖Σ_{y|z}^{-1/2}(μ0 − μ1)‖² / 8)`.
pub fn chernoff_conditional(
    stats: &ConditionalStats,
    z0: &DVector<f64>,
    z1: &DVector<f64>,
) -> Result<f64> {
    if z0 == z1 {
        stats.check_z(z0)?;
        return Ok(0.5);
    }
    Ok(q_chernoff(stats.separation_sq(z0, z1)?.sqrt() / 2.0))
}

/// Expected Chernoff bound of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `det(I_m + W/2)`.
    pub j_value: f64,
    /// `½ j_value^{-1/2}`.
    pub expected_chernoff: f64,
}

impl BoundReport {
    pub fn from_j(j_value: f64) -> Self {
        Self {
            j_value,
            expected_chernoff: 0.5 / j_value.sqrt(),
        }
    }

    pub fn reciprocal(&self) -> f64 {
        1.0 / self.expected_chernoff
    }
}

/// `W = T Σx Σ_{y|z}⁻¹ Σx Tᵀ (T Σx Tᵀ)⁻¹`.
pub fn w_matrix(inst: &ProblemInstance, stats: &ConditionalStats) -> Result<DMatrix<f64>> {
    let sx_tt = inst.sigma_x().as_matrix() * inst.transform().transpose();
    let whitened = stats.whitener() * &sx_tt;
    let k = whitened.transpose() * whitened;
    let sigma_z = inst.sigma_z();
    // W = K Σz⁻¹ = (Σz⁻¹ K)ᵀ since both factors are symmetric
    Ok(spd_solve(&sigma_z, &k)?.transpose())
}

/// `½ det(I_m + W/2)^{-1/2}`, the expectation over `(z0, z1)` of the
/// conditional Chernoff bound.
///
/// Before trusting the determinant, checks that `(2Σz)⁻¹ + AᵀB⁻¹A/4` with
/// `A` the gain and `B = Σ_{y|z}` is positive definite, i.e. that the
/// Gaussian integral behind the bound converges.
pub fn expected_chernoff_bound(inst: &ProblemInstance) -> Result<BoundReport> {
    let stats = conditional_stats(inst)?;
    expected_chernoff_bound_with(inst, &stats)
}

pub fn expected_chernoff_bound_with(
    inst: &ProblemInstance,
    stats: &ConditionalStats,
) -> Result<BoundReport> {
    let m = inst.m();
    let sigma_z = inst.sigma_z();
    let whitened_gain = stats.whitener() * stats.gain();
    let a_b_a = whitened_gain.transpose() * whitened_gain;
    let sz_inv = sigma_z.inverse_spd()?;
    let precision = SymMatrix::symmetrize(sz_inv.as_matrix() * 0.5 + a_b_a * 0.25);
    if let Err(e) = precision.cholesky() {
        return Err(Error::Consistency(format!(
            "integrand precision of the expected bound is not positive definite ({e})"
        )));
    }

    let w = w_matrix(inst, stats)?;
    let j = (DMatrix::<f64>::identity(m, m) + w * 0.5).determinant();
    if !(j >= 1.0 - 1e-9) || !j.is_finite() {
        return Err(Error::Consistency(format!(
            "det(I + W/2) = {j} is below one"
        )));
    }
    Ok(BoundReport::from_j(j))
}

/// Bound with the full codebook at the detector (`T` square invertible):
/// `Σ_{y|z} = Σe` and `W` is similar to `Σx Σe⁻¹`, so
/// `J = det(I + ½ Σx Σe⁻¹)`.
pub fn full_information_bound(sigma_x: &SymMatrix, sigma_e: &SymMatrix) -> Result<BoundReport> {
    let n = sigma_x.order();
    if sigma_e.order() != n {
        return Err(Error::Dimension("covariance orders differ".into()));
    }
    let se_inv_sx = spd_solve(sigma_e, sigma_x.as_matrix())?;
    let j = (DMatrix::<f64>::identity(n, n) + se_inv_sx.transpose() * 0.5).determinant();
    Ok(BoundReport::from_j(j))
}

/// One realization of the system: the transmitted bit, both codewords with
/// their partial information, and the channel output.
#[derive(Debug, Clone)]
pub struct Trial {
    pub bit: Hypothesis,
    pub codebook: Codebook,
    pub noise: DVector<f64>,
    pub y: DVector<f64>,
}

/// Draws trials for a fixed instance; covariance factors are computed once.
#[derive(Debug, Clone)]
pub struct TrialSampler {
    transform: DMatrix<f64>,
    signal: GaussianSampler,
    noise: GaussianSampler,
}

impl TrialSampler {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        let n = inst.n();
        Ok(Self {
            transform: inst.transform().clone(),
            signal: GaussianSampler::new(DVector::zeros(n), inst.sigma_x())?,
            noise: GaussianSampler::new(DVector::zeros(n), inst.sigma_e())?,
        })
    }

    /// Draw order: bit, `x0`, `x1`, `e`.
    pub fn sample(&self, rng: &mut RngStream) -> Trial {
        let bit = Hypothesis::from_bit(rng.fair_bit());
        let x0 = self.signal.sample(rng);
        let x1 = self.signal.sample(rng);
        let noise = self.noise.sample(rng);
        let y = match bit {
            Hypothesis::H0 => &x0 + &noise,
            Hypothesis::H1 => &x1 + &noise,
        };
        let codebook =
            Codebook::new(&self.transform, x0, x1).expect("dimensions fixed by instance");
        Trial {
            bit,
            codebook,
            noise,
            y,
        }
    }
}

/// `x0, x1 ~ N(0, Σx)`, `e ~ N(0, Σe)` independent, fair bit, `y = x_bit + e`.
pub fn sample_trial(inst: &ProblemInstance, rng: &mut RngStream) -> Result<Trial> {
    Ok(TrialSampler::new(inst)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{eigenvalues_ascending, random_psd};

    fn worked_instance(t: &[f64]) -> ProblemInstance {
        ProblemInstance::new(
            SymMatrix::from_diagonal(&[2.0, 1.0]).unwrap(),
            SymMatrix::identity(2),
            DMatrix::from_row_slice(1, 2, t),
        )
        .unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn random_instance(n: usize, m: usize, rng: &mut RngStream) -> ProblemInstance {
        let sx = random_psd(n, 0.1, 2.0, rng).unwrap();
        let se = random_psd(n, 0.1, 2.0, rng).unwrap();
        let t = rng.standard_normal_matrix(m, n);
        ProblemInstance::new(sx, se, t).unwrap()
    }

    #[test]
    fn worked_example_stats() {
        let stats = conditional_stats(&worked_instance(&[1.0, 0.0])).unwrap();
        assert!((stats.gain() - DMatrix::from_row_slice(2, 1, &[1.0, 0.0])).amax() < 1e-15);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert!((stats.cond_cov().as_matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn orthonormal_rows_identity_signal() {
        let mut rng = RngStream::new(2, 0);
        let n = 5;
        let q = crate::gaussian::random_orthonormal_columns(n, 2, &mut rng).unwrap();
        let t = q.transpose();
        let se = random_psd(n, 0.5, 1.5, &mut rng).unwrap();
        let inst = ProblemInstance::new(SymMatrix::identity(n), se.clone(), t.clone()).unwrap();
        let stats = conditional_stats(&inst).unwrap();
        let expected = DMatrix::<f64>::identity(n, n) + se.as_matrix() - t.transpose() * &t;
        assert!((stats.cond_cov().as_matrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn zero_partial_information_maps_to_zero_mean() {
        let mut rng = RngStream::new(3, 0);
        let inst = random_instance(6, 2, &mut rng);
        let stats = conditional_stats(&inst).unwrap();
        assert_eq!(
            stats.conditional_mean(&DVector::zeros(2)).unwrap(),
            DVector::zeros(6)
        );
    }

    #[test]
    fn rejects_rank_deficient_transform() {
        let t = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 1e-12, 0.0, 0.0]);
        let err =
            ProblemInstance::new(SymMatrix::identity(3), SymMatrix::identity(3), t).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
        let square = DMatrix::<f64>::identity(3, 3);
        assert!(
            ProblemInstance::new(SymMatrix::identity(3), SymMatrix::identity(3), square).is_err()
        );
    }

    #[test]
    fn decision_at_conditional_mean_is_that_hypothesis() {
        let stats = conditional_stats(&worked_instance(&[1.0, 0.0])).unwrap();
        let (z0, z1) = (v(&[2.0]), v(&[-2.0]));
        let mu0 = stats.conditional_mean(&z0).unwrap();
        assert_eq!(map_decide(&stats, &z0, &z1, &mu0).unwrap(), Hypothesis::H0);
        let mu1 = stats.conditional_mean(&z1).unwrap();
        assert_eq!(map_decide(&stats, &z0, &z1, &mu1).unwrap(), Hypothesis::H1);
    }

    #[test]
    fn equal_partial_information_always_decides_zero() {
        let stats = conditional_stats(&worked_instance(&[1.0, 0.0])).unwrap();
        let z = v(&[0.7]);
        let mut rng = RngStream::new(0, 0);
        for _ in 0..100 {
            let y = v(&[rng.standard_normal(), rng.standard_normal()]);
            assert_eq!(map_decide(&stats, &z, &z, &y).unwrap(), Hypothesis::H0);
        }
        assert_eq!(conditional_error_prob(&stats, &z, &z).unwrap(), 0.5);
        assert_eq!(chernoff_conditional(&stats, &z, &z).unwrap(), 0.5);
    }

    #[test]
    fn decision_picks_smaller_whitened_distance() {
        // Σ_{y|z} = diag(1, 2); μ0 = (2,0), μ1 = (-2,0).
        // y = (a, b): d0² = (a−2)² + b²/2, d1² = (a+2)² + b²/2.
        // d0² − d1² = −8a; with d1 = 2, d0 = 3 → a = −5/8, b² = 2(4 − (a+2)²).
        let stats = conditional_stats(&worked_instance(&[1.0, 0.0])).unwrap();
        let a: f64 = -5.0 / 8.0;
        let b = (2.0 * (4.0 - (a + 2.0) * (a + 2.0))).sqrt();
        let y = v(&[a, b]);
        let (z0, z1) = (v(&[2.0]), v(&[-2.0]));
        let mu0 = stats.conditional_mean(&z0).unwrap();
        let mu1 = stats.conditional_mean(&z1).unwrap();
        let cov_inv = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        let quad = |d: DVector<f64>| (d.transpose() * &cov_inv * &d)[(0, 0)];
        assert!((quad(&y - &mu0).sqrt() - 3.0).abs() < 1e-12);
        assert!((quad(&y - &mu1).sqrt() - 2.0).abs() < 1e-12);
        assert_eq!(map_decide(&stats, &z0, &z1, &y).unwrap(), Hypothesis::H1);
    }

    #[test]
    fn worked_example_error_probability() {
        let stats = conditional_stats(&worked_instance(&[1.0, 0.0])).unwrap();
        let (z0, z1) = (v(&[2.0]), v(&[-2.0]));
        assert!((stats.separation_sq(&z0, &z1).unwrap() - 16.0).abs() < 1e-12);
        let p = conditional_error_prob(&stats, &z0, &z1).unwrap();
        assert!((p - 0.022_750_131_948_179_21).abs() < 1e-14);
        let c = chernoff_conditional(&stats, &z0, &z1).unwrap();
        assert!((c - 0.5 * (-2.0_f64).exp()).abs() < 1e-15);
        assert!(c >= p);
        let c2 = chernoff_conditional(&stats, &v(&[4.0]), &v(&[-4.0])).unwrap();
        assert!(c2 < c);
    }

    #[test]
    fn worked_example_expected_bound() {
        let inst = worked_instance(&[std::f64::consts::FRAC_1_SQRT_2, 0.0]);
        let b = expected_chernoff_bound(&inst).unwrap();
        assert!((b.j_value - 2.0).abs() < 1e-12);
        assert!((b.expected_chernoff - 0.5 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn left_multiplication_leaves_j_unchanged() {
        let mut rng = RngStream::new(31, 0);
        for _ in 0..20 {
            let inst = random_instance(7, 3, &mut rng);
            let a = rng.standard_normal_matrix(3, 3);
            let moved = inst.with_transform(&a * inst.transform()).unwrap();
            let j0 = expected_chernoff_bound(&inst).unwrap().j_value;
            let j1 = expected_chernoff_bound(&moved).unwrap().j_value;
            assert!(((j0 - j1) / j0).abs() < 1e-8, "{j0} vs {j1}");
        }
    }

    #[test]
    fn conditional_covariance_is_positive_definite() {
        let mut rng = RngStream::new(37, 0);
        for i in 0..1000 {
            let n = 2 + i % 8;
            let m = 1 + i % (n - 1);
            let inst = random_instance(n, m, &mut rng);
            let stats = conditional_stats(&inst).unwrap();
            assert!(eigenvalues_ascending(stats.cond_cov()).unwrap()[0] > 0.0);
        }
    }

    #[test]
    fn full_information_matches_identity_transform_limit() {
        // diag(2,1)/I: J = (1 + 1)(1 + 1/2) = 3
        let b = full_information_bound(
            &SymMatrix::from_diagonal(&[2.0, 1.0]).unwrap(),
            &SymMatrix::identity(2),
        )
        .unwrap();
        assert!((b.j_value - 3.0).abs() < 1e-14);
    }

    #[test]
    fn sample_trial_is_deterministic() {
        let mut rng = RngStream::new(5, 0);
        let inst = random_instance(4, 2, &mut rng);
        let a = sample_trial(&inst, &mut RngStream::new(77, 3)).unwrap();
        let b = sample_trial(&inst, &mut RngStream::new(77, 3)).unwrap();
        assert_eq!(a.bit, b.bit);
        assert_eq!(a.codebook, b.codebook);
        assert_eq!(a.noise, b.noise);
        assert_eq!(a.y, b.y);
        assert_eq!(
            a.codebook.z0(),
            &(inst.transform() * a.codebook.x(Hypothesis::H0))
        );
    }

    #[test]
    fn trial_statistics() {
        let mut rng = RngStream::new(6, 0);
        let inst = random_instance(3, 1, &mut rng);
        let sampler = TrialSampler::new(&inst).unwrap();
        let mut stream = RngStream::new(6, 1);
        let n_trials = 100_000;
        let mut ones = 0usize;
        let mut acc = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..n_trials {
            let t = sampler.sample(&mut stream);
            if t.bit == Hypothesis::H1 {
                ones += 1;
            }
            let x0 = t.codebook.x(Hypothesis::H0);
            acc += x0 * x0.transpose();
        }
        let freq = ones as f64 / n_trials as f64;
        let sd = (0.25 / n_trials as f64).sqrt();
        assert!((freq - 0.5).abs() <= 3.0 * sd, "bit frequency {freq}");
        acc /= n_trials as f64;
        let sx = inst.sigma_x().as_matrix();
        let scale = sx.amax();
        assert!((acc - sx).amax() <= 0.05 * scale);
    }
}
