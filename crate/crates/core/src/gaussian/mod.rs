//! Dense linear algebra and Gaussian sampling substrate.

mod eigen;
mod matrix;
mod qfunc;
mod random;

pub use eigen::{eig_sym, eigenvalues_ascending, EigenPair, Order};
pub use matrix::{
    cholesky_lower, lower_inverse, orthonormality_defect, singular_values, spd_solve, SymMatrix,
    SYMMETRY_TOL,
};
pub use qfunc::{q_chernoff, q_function};
pub(crate) use random::lower_matvec_add;
pub use random::{
    haar_orthogonal, random_orthonormal_columns, random_psd, random_symmetric, sample_gaussian,
    GaussianSampler, RngStream,
};
