//! Binary detection with partial information in colored Gaussian noise.
//!
//! A transmitter sends one of two Gaussian codewords `x0, x1 ~ N(0, Σx)`
//! through additive noise `e ~ N(0, Σe)`. The receiver does not know the
//! codewords, only their linear reductions `z_i = T x_i`. This crate provides
//! the MAP detector conditioned on `(z0, z1)`, its exact conditional error
//! probability, the expected Chernoff bound, the closed-form family of
//! reduction transforms `T` that minimize that bound, and a seeded Monte Carlo
//! engine to check all of it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
