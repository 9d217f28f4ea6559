//! Truncated, regularized logistic regression over Hermite coefficients.
//!
//! Objective on a sample `S` of size `N`:
//!
//! ```text
//! F(c) = (1/N) sum_i l_i(c) + mu ||c||^2 + nu ||A(c)||_*
//! l_i(c) = log(1 + exp(-y_i <c, Phi(x_i)>))  if ||Phi(x_i)|| <= Lambda
//!        = log 2                             otherwise
//! ```
//!
//! minimized over the ball `||c|| <= R = sqrt(log 2 / mu)`.

mod nuclear;
mod solver;

pub use nuclear::{nuclear_norm, nuclear_subgradient};
pub use solver::solve;

use std::f64::consts::LN_2;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::hermite::{basis_size, gradient_coeff_matrix, HermiteBasis, PolyCoeffs};

/// `log(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `psi(u) = 1 / (1 + e^u)`.
#[inline]
pub fn psi(u: f64) -> f64 {
    if u > 0.0 {
        let e = (-u).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + u.exp())
    }
}

/// `phi(u) = 1/2 - psi(u)`, an odd function.
#[inline]
pub fn phi(u: f64) -> f64 {
    0.5 - psi(u)
}

/// Logistic loss of `(x, y)` under `P`, replaced by `log 2` when the feature
/// vector has norm above `lambda`.
pub fn truncated_pointwise_loss(c: &PolyCoeffs, x: &[f64], y: i8, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation radius must be positive, got {lambda}")));
    }
    let feats = c.basis().features(x)?;
    let norm = feats.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > lambda {
        return Ok(LN_2);
    }
    let u: f64 = feats.iter().zip(c.coeffs()).map(|(a, b)| a * b).sum();
    Ok(softplus(-(y as f64) * u))
}

/// A regression instance. The ball and truncation radii are derived, not set:
/// `R = sqrt(log 2 / mu)` and `Lambda = 8 R m / eps_target`.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    dataset: LabeledDataset,
    degree: usize,
    mu: f64,
    nu: f64,
    ball_radius: f64,
    trunc_radius: f64,
    opt_tolerance: f64,
    max_iterations: usize,
}

impl RegressionProblem {
    pub const DEFAULT_MAX_ITERATIONS: usize = 5000;

    pub fn new(
        dataset: LabeledDataset,
        degree: usize,
        mu: f64,
        nu: f64,
        eps_target: f64,
        opt_tolerance: f64,
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::InvalidArgument(format!("nu must be non-negative, got {nu}")));
        }
        if !(opt_tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {opt_tolerance}")));
        }
        if !(eps_target > 0.0) {
            return Err(Error::InvalidArgument(format!("target accuracy must be positive, got {eps_target}")));
        }
        let ball_radius = (LN_2 / mu).sqrt();
        let m = basis_size(dataset.dim(), degree) as f64;
        let trunc_radius = 8.0 * ball_radius * m / eps_target;
        Ok(Self {
            dataset,
            degree,
            mu,
            nu,
            ball_radius,
            trunc_radius,
            opt_tolerance,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
        })
    }

    /// Replaces the truncation radius (`f64::INFINITY` disables truncation).
    pub fn with_trunc_radius(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("truncation radius must be positive, got {lambda}")));
        }
        self.trunc_radius = lambda;
        Ok(self)
    }

    pub fn with_max_iterations(mut self, iterations: usize) -> Self {
        self.max_iterations = iterations;
        self
    }

    pub fn dataset(&self) -> &LabeledDataset {
        &self.dataset
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    pub fn trunc_radius(&self) -> f64 {
        self.trunc_radius
    }

    pub fn opt_tolerance(&self) -> f64 {
        self.opt_tolerance
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn basis(&self) -> Result<HermiteBasis> {
        HermiteBasis::new(self.dataset.dim(), self.degree)
    }
}

/// Output of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub coeffs: PolyCoeffs,
    pub objective_value: f64,
    pub iterations: usize,
    /// Incumbent objective after each iteration; non-increasing.
    pub certificate: Vec<f64>,
    /// Certified upper bound on `objective_value - min over the ball`.
    pub gap_bound: f64,
    /// Final smoothing parameter of the nuclear-norm surrogate.
    pub smoothing: f64,
    /// Number of sample points whose features exceed the truncation radius.
    pub truncated: usize,
}

/// `F(c)` for the problem, computed point by point.
pub fn empirical_objective(c: &PolyCoeffs, prob: &RegressionProblem) -> Result<f64> {
    let ds = prob.dataset();
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if c.dim() != ds.dim() {
        return Err(Error::DimensionMismatch { expected: ds.dim(), found: c.dim() });
    }
    let mut loss = 0.0;
    for (x, y) in ds.iter() {
        loss += truncated_pointwise_loss(c, x, y, prob.trunc_radius())?;
    }
    let ridge = prob.mu() * c.norm_sq();
    let spectral = if prob.nu() > 0.0 { prob.nu() * nuclear_norm(&gradient_coeff_matrix(c))? } else { 0.0 };
    Ok(loss / ds.len() as f64 + ridge + spectral)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_loss_examples() {
        let zero = PolyCoeffs::zeros(2, 2).unwrap();
        assert!((truncated_pointwise_loss(&zero, &[0.3, -1.0], 1, 10.0).unwrap() - LN_2).abs() < 1e-15);
        // P = 20 constant
        let mut c = PolyCoeffs::zeros(2, 2).unwrap();
        c.coeffs_mut()[0] = 20.0;
        let v = truncated_pointwise_loss(&c, &[0.0, 0.0], 1, 1e6).unwrap();
        assert!((v - (-20f64).exp().ln_1p()).abs() < 1e-22);
        assert!((v - 2.06e-9).abs() < 1e-11);
        // far point gets truncated
        assert_eq!(truncated_pointwise_loss(&c, &[50.0, 50.0], -1, 10.0).unwrap(), LN_2);
        assert!(truncated_pointwise_loss(&c, &[0.0], 1, 10.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let ds = LabeledDataset::new(1, vec![0.5, -1.0, 2.0], vec![1, -1, 1]).unwrap();
        let prob = RegressionProblem::new(ds.clone(), 2, 1.0 / 128.0, 0.1, 0.1, 1e-6).unwrap();
        let zero = PolyCoeffs::zeros(1, 2).unwrap();
        assert!((empirical_objective(&zero, &prob).unwrap() - LN_2).abs() < 1e-15);
        assert!((prob.ball_radius() - (LN_2 * 128.0).sqrt()).abs() < 1e-15);
        assert!((prob.trunc_radius() - 8.0 * prob.ball_radius() * 3.0 / 0.1).abs() < 1e-9);

        // every point truncated: loss log 2, ridge 1
        let prob = RegressionProblem::new(ds, 2, 1.0, 0.0, 0.1, 1e-6).unwrap().with_trunc_radius(1e-3).unwrap();
        let c = PolyCoeffs::new(1, 2, vec![0.6, 0.0, 0.8]).unwrap();
        assert!((empirical_objective(&c, &prob).unwrap() - (LN_2 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn label_flip_identity() {
        for i in 0..1000 {
            let u = -30.0 + 60.0 * i as f64 / 999.0;
            for y in [1.0f64, -1.0] {
                let lhs = y * psi(y * u);
                let rhs = y / 2.0 - phi(u);
                assert!((lhs - rhs).abs() < 1e-12);
            }
            assert!((phi(-u) + phi(u)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let ds = LabeledDataset::new(1, vec![0.5], vec![1]).unwrap();
        assert!(RegressionProblem::new(ds.clone(), 1, 0.0, 0.0, 0.1, 1e-6).is_err());
        assert!(RegressionProblem::new(ds.clone(), 1, 1.0, -1.0, 0.1, 1e-6).is_err());
        assert!(RegressionProblem::new(ds, 1, 1.0, 0.0, 0.1, 0.0).is_err());
    }
}
