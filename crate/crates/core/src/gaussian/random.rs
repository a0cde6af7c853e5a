//! Seeded random streams and the Gaussian / Haar samplers built on them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::SymMatrix;
use crate::error::{Error, Result};

/// A ChaCha20 stream addressed by `(seed, stream_id)`.
///
/// ChaCha20 output is specified bit-for-bit, so two streams with the same
/// address produce the same sequence on every platform. Distinct stream ids
/// under one seed are independent.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        if low == high {
            return low;
        }
        self.rng.random_range(low..high)
    }

    pub fn fair_bit(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(&mut self.rng);
        }
    }

    pub fn standard_normal_matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| self.standard_normal())
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draws from `N(mean, cov)` for a fixed covariance; the Cholesky factor is
/// computed once.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(mean: DVector<f64>, cov: &SymMatrix) -> Result<Self> {
        if mean.len() != cov.order() {
            return Err(Error::Dimension(format!(
                "mean has length {}, covariance has order {}",
                mean.len(),
                cov.order()
            )));
        }
        Ok(Self {
            mean,
            chol: cov.cholesky()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample(&self, rng: &mut RngStream) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        let mut scratch = vec![0.0; self.dim()];
        self.sample_into(rng, &mut scratch, out.as_mut_slice());
        out
    }

    /// Allocation-free draw: `out = mean + L w`, `w` drawn into `scratch`.
    pub fn sample_into(&self, rng: &mut RngStream, scratch: &mut [f64], out: &mut [f64]) {
        rng.fill_standard_normal(scratch);
        lower_matvec_add(&self.chol, scratch, self.mean.as_slice(), out);
    }
}

/// `out = base + L w` for lower-triangular `L`.
pub(crate) fn lower_matvec_add(l: &DMatrix<f64>, w: &[f64], base: &[f64], out: &mut [f64]) {
    let n = l.nrows();
    out.copy_from_slice(base);
    for (j, &wj) in w.iter().enumerate() {
        let col = l.column(j);
        for i in j..n {
            out[i] += col[i] * wj;
        }
    }
}

/// One draw from `N(mean, cov)`.
pub fn sample_gaussian(
    mean: &DVector<f64>,
    cov: &SymMatrix,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    Ok(GaussianSampler::new(mean.clone(), cov)?.sample(rng))
}

/// Haar-distributed orthogonal `n × n` matrix: QR of a standard Gaussian
/// matrix with the signs of `diag(R)` absorbed into `Q`.
pub fn haar_orthogonal(n: usize, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    random_orthonormal_columns(n, n, rng)
}

/// Haar-distributed `n × m` matrix with orthonormal columns.
pub fn random_orthonormal_columns(n: usize, m: usize, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    if n == 0 || m == 0 {
        return Err(Error::Argument("dimensions must be positive".into()));
    }
    if m > n {
        return Err(Error::Argument(format!(
            "cannot fit {m} orthonormal columns in dimension {n}"
        )));
    }
    let g = rng.standard_normal_matrix(n, m);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// `Q diag(λ) Qᵀ` with `λᵢ ~ Uniform(eig_low, eig_high)` i.i.d. and `Q` Haar.
pub fn random_psd(n: usize, eig_low: f64, eig_high: f64, rng: &mut RngStream) -> Result<SymMatrix> {
    if n == 0 {
        return Err(Error::Argument("matrix order must be positive".into()));
    }
    if !(eig_low > 0.0 && eig_low <= eig_high && eig_high.is_finite()) {
        return Err(Error::Argument(format!(
            "eigenvalue range must satisfy 0 < low <= high, got ({eig_low}, {eig_high})"
        )));
    }
    let spectrum: Vec<f64> = (0..n).map(|_| rng.uniform(eig_low, eig_high)).collect();
    let q = haar_orthogonal(n, rng)?;
    let d = DMatrix::from_diagonal(&DVector::from_vec(spectrum));
    Ok(SymMatrix::symmetrize(&q * d * q.transpose()))
}

/// Symmetric matrix with i.i.d. standard normal upper triangle. Test fodder
/// for the eigensolver; not positive definite in general.
pub fn random_symmetric(n: usize, rng: &mut RngStream) -> SymMatrix {
    let g = rng.standard_normal_matrix(n, n);
    SymMatrix::symmetrize(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{eigenvalues_ascending, orthonormality_defect};

    #[test]
    fn same_address_same_draws() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..100 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
        let mut c = RngStream::new(42, 8);
        let mut a = RngStream::new(42, 7);
        let same = (0..10).all(|_| a.next_u64() == c.next_u64());
        assert!(!same);
    }

    #[test]
    fn sample_covariance_close_to_identity() {
        let mut rng = RngStream::new(1, 0);
        let sampler = GaussianSampler::new(DVector::zeros(2), &SymMatrix::identity(2)).unwrap();
        let n = 100_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let x = sampler.sample(&mut rng);
            acc += &x * x.transpose();
        }
        acc /= n as f64;
        let err = (acc - DMatrix::<f64>::identity(2, 2)).amax();
        assert!(err < 0.05, "entrywise error {err}");
    }

    #[test]
    fn degenerate_variance_returns_mean() {
        let mean = DVector::from_vec(vec![1.5, -2.0, 3.25]);
        let cov = SymMatrix::identity(3).scaled(1e-20);
        let mut rng = RngStream::new(9, 0);
        let x = sample_gaussian(&mean, &cov, &mut rng).unwrap();
        assert!((x - mean).amax() < 1e-8);
    }

    #[test]
    fn fixed_seed_sample_is_reproducible() {
        let mean = DVector::from_vec(vec![0.0, 1.0]);
        let cov = SymMatrix::from_diagonal(&[2.0, 0.5]).unwrap();
        let a = sample_gaussian(&mean, &cov, &mut RngStream::new(3, 1)).unwrap();
        let b = sample_gaussian(&mean, &cov, &mut RngStream::new(3, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_pd_cov_names_pivot() {
        let cov = SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let err = sample_gaussian(&DVector::zeros(2), &cov, &mut RngStream::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn equal_spectrum_gives_identity() {
        let a = random_psd(4, 1.0, 1.0, &mut RngStream::new(0, 0)).unwrap();
        assert!((a.as_matrix() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-10);
    }

    #[test]
    fn spectrum_within_range() {
        let mut rng = RngStream::new(17, 0);
        for _ in 0..50 {
            let a = random_psd(6, 0.5, 2.0, &mut rng).unwrap();
            let ev = eigenvalues_ascending(&a).unwrap();
            assert!(ev[0] >= 0.5 - 1e-10 && ev[5] <= 2.0 + 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn streams_give_different_matrices() {
        let a = random_psd(5, 0.1, 2.0, &mut RngStream::new(4, 0)).unwrap();
        let b = random_psd(5, 0.1, 2.0, &mut RngStream::new(4, 1)).unwrap();
        assert!((a.as_matrix() - b.as_matrix()).norm() > 1e-6);
    }

    #[test]
    fn random_psd_is_positive_definite() {
        let mut rng = RngStream::new(23, 0);
        for i in 0..1000 {
            let a = random_psd(2 + i % 9, 0.1, 2.0, &mut rng).unwrap();
            assert!(a.is_positive_definite());
        }
    }

    #[test]
    fn random_psd_rejects_bad_arguments() {
        let mut rng = RngStream::new(0, 0);
        assert!(random_psd(0, 0.1, 2.0, &mut rng).is_err());
        assert!(random_psd(3, 0.0, 2.0, &mut rng).is_err());
        assert!(random_psd(3, 2.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn orthonormal_columns() {
        let mut rng = RngStream::new(8, 0);
        let q = random_orthonormal_columns(3, 3, &mut rng).unwrap();
        assert!(orthonormality_defect(&q) < 1e-10);
        assert!(orthonormality_defect(&q.transpose()) < 1e-10);
        let m = random_orthonormal_columns(5, 2, &mut rng).unwrap();
        assert_eq!(m.shape(), (5, 2));
        assert!(orthonormality_defect(&m) < 1e-10);
        assert!(random_orthonormal_columns(2, 3, &mut rng).is_err());
    }

    #[test]
    fn haar_columns_have_zero_mean() {
        let mut rng = RngStream::new(99, 0);
        let draws = 10_000;
        let mut acc = DMatrix::<f64>::zeros(5, 2);
        for _ in 0..draws {
            acc += random_orthonormal_columns(5, 2, &mut rng).unwrap();
        }
        acc /= draws as f64;
        assert!(acc.amax() <= 0.05, "max |mean| {}", acc.amax());
    }
}
