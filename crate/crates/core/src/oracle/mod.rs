//! Verification machinery: averaged classifiers, Ornstein-Uhlenbeck smoothing
//! of Hermite expansions, and the subspace Poincare inequality.

mod ou;
mod poincare;
mod qmc;

pub use ou::{
    expansion_l2_sq, ou_smooth_truncate, ou_smooth_truncate_univariate, select_ou_params, select_ou_params_with,
    sign_coefficients, sign_coefficients_closed_form, univariate_gradient_sq, univariate_l1_error, HermiteExpansion,
    OuParams, DEFAULT_C_OU,
};
pub use poincare::poincare_check;
pub use qmc::{qmc_hermite_coefficients, QMC_DEFAULT_POINTS};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cover::{BooleanHypothesis, Halfspace, Hypothesis};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::spectral::Subspace;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f_V(x) = E_z[f(x_{xi-perp} + z xi)]` for `f = sign(<w, x> + t)`, where
/// `xi` is the unit vector along `w_{V-perp}`. Closed form
/// `2 Phi((<w_V, x> + t) / s) - 1` with `s = ||w_{V-perp}||`; `f(x)` when
/// `s = 0`.
pub fn averaged_halfspace_eval(f: &Halfspace, v: &Subspace, x: &[f64]) -> f64 {
    let w = f.normal();
    let wv = v.project(w);
    let s = w.iter().zip(&wv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let inner = dot(&wv, x) + f.threshold();
    if s <= 1e-12 {
        return if inner >= 0.0 { 1.0 } else { -1.0 };
    }
    let n = Normal::standard();
    2.0 * n.cdf(inner / s) - 1.0
}

/// Orthonormal basis of `W = span{(w_j)_{V-perp}}` for a Boolean function.
fn residual_span(f: &BooleanHypothesis, v: &Subspace) -> Result<Subspace> {
    let d = f.dim();
    let residuals: Vec<Vec<f64>> = f
        .halfspaces()
        .iter()
        .map(|h| {
            let p = v.project(h.normal());
            h.normal().iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<f64>>()
        })
        .filter(|r| dot(r, r).sqrt() > 1e-12)
        .collect();
    Subspace::span_of(d, &residuals)
}

fn averaged_boolean_with(f: &BooleanHypothesis, w: &Subspace, x: &[f64], n_mc: usize, rng: &mut impl Rng) -> f64 {
    if w.rank() == 0 {
        return f.eval(x) as f64;
    }
    let px = w.project(x);
    let base: Vec<f64> = x.iter().zip(&px).map(|(a, b)| a - b).collect();
    let mut point = vec![0.0; x.len()];
    let mut total = 0i64;
    for _ in 0..n_mc {
        point.copy_from_slice(&base);
        for j in 0..w.rank() {
            let z: f64 = rng.sample(StandardNormal);
            for (p, b) in point.iter_mut().zip(w.column(j)) {
                *p += z * b;
            }
        }
        total += f.eval(&point) as i64;
    }
    total as f64 / n_mc as f64
}

/// Monte-Carlo estimate of `f_V(x) = E_z[f(x_{W-perp} + z)]` with `z`
/// standard Gaussian in `W`. Exact (`f(x)`) when every normal lies in `V`.
pub fn averaged_boolean_eval(f: &BooleanHypothesis, v: &Subspace, x: &[f64], n_mc: usize, seed: u64) -> Result<f64> {
    if n_mc == 0 {
        return Err(Error::InvalidArgument("n_mc must be at least 1".into()));
    }
    let w = residual_span(f, v)?;
    Ok(averaged_boolean_with(f, &w, x, n_mc, &mut stream_rng(seed, 0)))
}

/// Averaged classifier `f_V` of a hypothesis.
#[derive(Debug, Clone)]
pub struct AveragedClassifier {
    base: Hypothesis,
    subspace: Subspace,
    residual: Subspace,
    n_mc: usize,
}

impl AveragedClassifier {
    /// `n_mc` draws per evaluation are used for Boolean bases.
    pub fn new(base: Hypothesis, subspace: Subspace, n_mc: usize) -> Result<Self> {
        if base.dim() != subspace.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: subspace.ambient_dim(), found: base.dim() });
        }
        if n_mc == 0 {
            return Err(Error::InvalidArgument("n_mc must be at least 1".into()));
        }
        let residual = match &base {
            Hypothesis::Halfspace(_) => Subspace::empty(base.dim()),
            Hypothesis::Boolean(b) => residual_span(b, &subspace)?,
        };
        Ok(Self { base, subspace, residual, n_mc })
    }

    pub fn base(&self) -> &Hypothesis {
        &self.base
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// `"halfspace"` or `"boolean"`.
    pub fn kind(&self) -> &'static str {
        match self.base {
            Hypothesis::Halfspace(_) => "halfspace",
            Hypothesis::Boolean(_) => "boolean",
        }
    }

    /// `f_V(x)`; Boolean bases draw from `rng`.
    pub fn eval(&self, x: &[f64], rng: &mut impl Rng) -> f64 {
        match &self.base {
            Hypothesis::Halfspace(h) => averaged_halfspace_eval(h, &self.subspace, x),
            Hypothesis::Boolean(b) => averaged_boolean_with(b, &self.residual, x, self.n_mc, rng),
        }
    }
}

/// Empirical mean of `(f(x) - f_V(x)) y` with its standard error.
///
/// Point `i` uses ChaCha stream `i` of `seed` for Boolean averaging, so the
/// value does not depend on the thread count.
pub fn correlation_residual(
    f: &Hypothesis,
    v: &Subspace,
    data: &LabeledDataset,
    n_mc: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let avg = AveragedClassifier::new(f.clone(), v.clone(), n_mc)?;
    let seed = derive_seed(seed, 0x7265_7369);
    let terms: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.point(i);
            let mut rng = stream_rng(seed, i as u64);
            (f.eval(x) as f64 - avg.eval(x, &mut rng)) * data.label(i) as f64
        })
        .collect();
    let n = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / n;
    let var = if terms.len() > 1 { terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn halfspace_in_subspace_is_unchanged() {
        let h = Halfspace::new(vec![0.6, 0.8, 0.0], 0.3).unwrap();
        let v = Subspace::span_of(3, &[e(3, 0), e(3, 1)]).unwrap();
        for x in [[1.0, -0.5, 2.0], [-0.2, -0.1, 0.0], [0.0, 0.0, 5.0]] {
            assert_eq!(averaged_halfspace_eval(&h, &v, &x), h.eval(&x) as f64);
        }
    }

    #[test]
    fn orthogonal_halfspace_averages_to_zero() {
        let h = Halfspace::new(vec![0.0, 0.0, 1.0], 0.0).unwrap();
        let v = Subspace::span_of(3, &[e(3, 0), e(3, 1)]).unwrap();
        assert_eq!(averaged_halfspace_eval(&h, &v, &[0.4, 1.0, -3.0]), 0.0);
        let g = Halfspace::new(vec![0.0, 0.0, 1.0], 0.5).unwrap();
        let val = averaged_halfspace_eval(&g, &v, &[0.0, 0.0, 0.0]);
        assert!((val - (2.0 * Normal::standard().cdf(0.5) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn boolean_exact_when_normals_in_subspace() {
        let h1 = Halfspace::new(e(3, 0), 0.1).unwrap();
        let h2 = Halfspace::new(e(3, 1), -0.2).unwrap();
        let f = BooleanHypothesis::new(vec![h1, h2], vec![1, -1, -1, 1]).unwrap();
        let v =
            Subspace::new(DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]), vec![1.0, 1.0]).unwrap();
        let x = [0.5, -1.0, 7.0];
        assert_eq!(averaged_boolean_eval(&f, &v, &x, 1, 3).unwrap(), f.eval(&x) as f64);
        assert!(averaged_boolean_eval(&f, &v, &x, 0, 3).is_err());
    }

    #[test]
    fn residual_vanishes_in_subspace() {
        let h = Halfspace::new(vec![0.6, 0.8], 0.3).unwrap();
        let v = Subspace::full(2);
        let data = LabeledDataset::new(2, vec![0.1, 0.2, -1.0, 0.3, 2.0, -2.0], vec![1, -1, 1]).unwrap();
        let (r, se) = correlation_residual(&Hypothesis::Halfspace(h), &v, &data, 10, 0).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(se, 0.0);
    }
}
