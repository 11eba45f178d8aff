//! Numerical kernels: dense matrices, Cholesky factorization, log densities
//! and constrained/unconstrained transforms.

mod density;
mod matrix;
pub mod special;
mod transform;

pub use density::{beta_logpdf, inv_wishart_logpdf, ln_multigamma, mvn_logpdf, normal_logpdf, trunc_normal_logpdf};
pub use matrix::{cholesky, LowerTriangular, Mat, SpdMatrix};
pub use transform::{Constrained, Support};
