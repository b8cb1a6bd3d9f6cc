//! Minimal dense linear algebra, reproducible sampling, and the special
//! functions the estimator needs. Everything here is a pure function of its
//! inputs; randomness always flows through an explicit [`RngStream`].

pub mod matrix;
pub mod rng;
pub mod special;
pub mod svd;

pub use matrix::{cholesky_solve, dot, l2_norm, Matrix};
pub use rng::{
    fill_gaussian, gaussian_vector, glorot_init, glorot_std, sample_distinct,
    shuffled_indices, standard_normal, RngStream,
};
pub use special::{beta_inv_cdf, ln_gamma, regularized_incomplete_beta};
pub use svd::{svd, SvdResult};
