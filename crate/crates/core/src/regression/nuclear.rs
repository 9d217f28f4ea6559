//! Nuclear norm of the gradient coefficient matrix and its smoothed surrogate.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hermite::GradientMatrix;

/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient matrix"));
    }
    Ok(())
}

/// `||A||_*`, the sum of singular values.
pub fn nuclear_norm(a: &GradientMatrix) -> Result<f64> {
    check_finite(a.matrix())?;
    if a.matrix().is_empty() {
        return Ok(0.0);
    }
    Ok(a.matrix().singular_values().iter().sum())
}

/// `U V^T` from a thin SVD, keeping only singular values above
/// `1e-12 * sigma_max`. A subgradient of the nuclear norm at `A`.
pub fn nuclear_subgradient(a: &GradientMatrix) -> Result<DMatrix<f64>> {
    let m = a.matrix();
    check_finite(m)?;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    if m.is_empty() {
        return Ok(out);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok(out);
    }
    for (j, &sv) in svd.singular_values.iter().enumerate() {
        if sv > RANK_TOLERANCE * smax {
            out += u.column(j) * vt.row(j);
        }
    }
    Ok(out)
}

/// Smoothed nuclear norm `h_s(Z) = sum_j (sqrt(lambda_j + s^2) - s)` over the
/// eigenvalues `lambda_j` of `Z Z^T`, evaluated together with what the solver
/// needs.
#[derive(Debug, Clone)]
pub(crate) struct Smoothed {
    /// `h_s(Z)`.
    pub value: f64,
    /// `||Z||_*`.
    pub nuclear: f64,
    /// `grad h_s(Z) = (Z Z^T + s^2 I)^{-1/2} Z`; operator norm below one.
    pub gradient: DMatrix<f64>,
    /// `||Z||_* - <gradient, Z>`, the duality slack of `gradient` as a dual
    /// certificate for the nuclear norm.
    pub slack: f64,
}

pub(crate) fn smoothed(z: &DMatrix<f64>, s: f64) -> Smoothed {
    let gram = z * z.transpose();
    let eig = SymmetricEigen::new(gram);
    let s2 = s * s;
    let mut value = 0.0;
    let mut nuclear = 0.0;
    let mut slack = 0.0;
    let mut scale = eig.eigenvalues.clone();
    for (j, &raw) in eig.eigenvalues.iter().enumerate() {
        let lam = raw.max(0.0);
        let root = (lam + s2).sqrt();
        value += root - s;
        nuclear += lam.sqrt();
        slack += lam.sqrt() - lam / root;
        scale[j] = 1.0 / root;
    }
    let q = &eig.eigenvectors;
    let gradient = q * DMatrix::from_diagonal(&scale) * q.transpose() * z;
    Smoothed { value, nuclear, gradient, slack }
}
