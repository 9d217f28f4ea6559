//! Proper agnostic learning of halfspaces and of Boolean functions of a few
//! halfspaces when the marginal is the standard Gaussian.
//!
//! The learner fits a polynomial by logistic regression with a ridge penalty
//! and a nuclear-norm penalty on the Hermite coefficients of its gradient,
//! reads off a low-dimensional subspace from the polynomial's influence
//! matrix, and searches a finite cover of halfspaces inside that subspace.

pub mod cover;
pub mod data;
pub mod error;
pub mod hermite;
pub mod oracle;
pub mod pipeline;
pub mod regression;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
