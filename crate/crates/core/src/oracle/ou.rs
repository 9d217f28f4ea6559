//! Ornstein-Uhlenbeck smoothing followed by degree truncation.
//!
//! `T_rho` multiplies the Hermite coefficient of `H_alpha` by
//! `rho^|alpha|`. With `1 - rho = c tau^2 / GSA^2` and truncation at degree
//! `m = ceil(log(2/tau) / log(1/rho))` the result is an `L_1` approximation
//! of a Boolean function with error of order `tau`.

use std::f64::consts::PI;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hermite::quadrature::{composite_legendre, gauss_legendre, Rule};
use crate::hermite::{hermite_table, HermiteBasis, PolyCoeffs};

/// Default `c_ou`. The univariate sign check needs `L_1` error at most `tau`;
/// `1/4` leaves a comfortable margin there.
pub const DEFAULT_C_OU: f64 = 0.25;

/// Integration range for univariate expectations; the Gaussian mass beyond
/// is below `1e-340`.
const RANGE: f64 = 40.0;
const PANEL_WIDTH: f64 = 0.05;
const PANEL_NODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub rho: f64,
    pub trunc_degree: usize,
    pub gsa: f64,
    pub tau: f64,
    pub c_ou: f64,
}

impl OuParams {
    /// Explicit `rho` and degree, bypassing the parameter rule (for identity
    /// and degenerate checks).
    pub fn custom(rho: f64, trunc_degree: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidArgument(format!("rho = {rho} outside [0, 1]")));
        }
        Ok(Self { rho, trunc_degree, gsa: f64::NAN, tau: f64::NAN, c_ou: f64::NAN })
    }
}

pub fn select_ou_params(gsa: f64, tau: f64) -> Result<OuParams> {
    select_ou_params_with(gsa, tau, DEFAULT_C_OU)
}

pub fn select_ou_params_with(gsa: f64, tau: f64, c_ou: f64) -> Result<OuParams> {
    if !(gsa >= 1.0) || !gsa.is_finite() {
        return Err(Error::InvalidArgument(format!("gsa = {gsa} must be at least 1")));
    }
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::InvalidArgument(format!("tau = {tau} outside (0, 1/2)")));
    }
    if !(c_ou > 0.0 && c_ou <= 1.0) {
        return Err(Error::InvalidArgument(format!("c_ou = {c_ou} outside (0, 1]")));
    }
    let one_minus = c_ou * tau * tau / (gsa * gsa);
    let rho = 1.0 - one_minus;
    let m = ((2.0 / tau).ln() / -(-one_minus).ln_1p()).ceil() as usize;
    Ok(OuParams { rho, trunc_degree: m, gsa, tau, c_ou })
}

/// A multivariate Hermite expansion handed to [`ou_smooth_truncate`].
#[derive(Debug, Clone)]
pub enum HermiteExpansion {
    /// A polynomial: coefficients above its degree are zero.
    Exact(PolyCoeffs),
    /// Coefficients of a function known only up to the stored degree.
    Partial(PolyCoeffs),
}

/// Coefficient `alpha` becomes `rho^|alpha| c_alpha` for `|alpha| <= m` and
/// zero beyond.
pub fn ou_smooth_truncate(f: &HermiteExpansion, params: &OuParams) -> Result<PolyCoeffs> {
    let (p, exact) = match f {
        HermiteExpansion::Exact(p) => (p, true),
        HermiteExpansion::Partial(p) => (p, false),
    };
    if !exact && p.degree() < params.trunc_degree {
        return Err(Error::InvalidArgument(format!(
            "coefficients known to degree {} but truncation degree is {}",
            p.degree(),
            params.trunc_degree
        )));
    }
    let degree = p.degree().min(params.trunc_degree);
    let out_basis = HermiteBasis::new(p.dim(), degree)?;
    // graded order: the lower-degree basis is a prefix of the input basis
    let coeffs = out_basis
        .indices()
        .iter()
        .zip(p.coeffs())
        .map(|(alpha, c)| params.rho.powi(alpha.degree() as i32) * c)
        .collect();
    PolyCoeffs::new(p.dim(), degree, coeffs)
}

/// Univariate version on a coefficient list `c_0, c_1, ...`.
pub fn ou_smooth_truncate_univariate(coeffs: &[f64], params: &OuParams) -> Result<Vec<f64>> {
    if coeffs.len() <= params.trunc_degree {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients available, truncation degree {} needs {}",
            coeffs.len(),
            params.trunc_degree,
            params.trunc_degree + 1
        )));
    }
    let mut scale = 1.0;
    Ok(coeffs[..=params.trunc_degree]
        .iter()
        .map(|c| {
            let v = scale * c;
            scale *= params.rho;
            v
        })
        .collect())
}

/// `g_j(x) = H_j(x) e^{-x^2/4}` for `j = 0..out.len()`; bounded for all `x`.
fn scaled_hermite(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = (-x * x / 4.0).exp();
    if out.len() > 1 {
        out[1] = x * out[0];
    }
    for j in 1..out.len() - 1 {
        out[j + 1] = (x * out[j] - (j as f64).sqrt() * out[j - 1]) / ((j + 1) as f64).sqrt();
    }
}

fn legendre_rule() -> Rule {
    gauss_legendre(PANEL_NODES)
}

/// `int_a^b f` with panels of width about [`PANEL_WIDTH`].
fn integrate(a: f64, b: f64, rule: &Rule, f: impl FnMut(f64) -> f64) -> f64 {
    let panels = ((b - a) / PANEL_WIDTH).ceil().max(1.0) as usize;
    composite_legendre(a, b, panels, rule, f)
}

/// Hermite coefficients `c_0..=c_degree` of `sign(x + b)` by composite
/// Gauss-Legendre quadrature split at the jump `x = -b`.
pub fn sign_coefficients(b: f64, degree: usize) -> Vec<f64> {
    let rule = legendre_rule();
    let mut g = vec![0.0; degree + 1];
    let jump = (-b).clamp(-RANGE, RANGE);
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut coeffs = vec![0.0; degree + 1];
    for (lo, hi, sign) in [(-RANGE, jump, -1.0), (jump, RANGE, 1.0)] {
        if hi <= lo {
            continue;
        }
        // one recurrence per node feeds every coefficient
        let panels = ((hi - lo) / PANEL_WIDTH).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let x = mid + 0.5 * h * t;
                scaled_hermite(x, &mut g);
                let weight = sign * 0.5 * h * w * norm * (-x * x / 4.0).exp();
                for (c, gj) in coeffs.iter_mut().zip(&g) {
                    *c += weight * gj;
                }
            }
        }
    }
    coeffs
}

/// `c_0 = 2 Phi(b) - 1`, `c_j = 2 H_{j-1}(-b) phi(b) / sqrt(j)`.
pub fn sign_coefficients_closed_form(b: f64, degree: usize) -> Vec<f64> {
    let n = Normal::standard();
    let mut h = vec![0.0; degree.max(1)];
    hermite_table(-b, &mut h);
    let mut out = vec![2.0 * n.cdf(b) - 1.0];
    for j in 1..=degree {
        out.push(2.0 * h[j - 1] * n.pdf(b) / (j as f64).sqrt());
    }
    out
}

/// `E[S^2] = sum_j c_j^2`.
pub fn expansion_l2_sq(coeffs: &[f64]) -> f64 {
    coeffs.iter().map(|c| c * c).sum()
}

/// `E[S'(x)^2] = sum_j j c_j^2` for `S = sum_j c_j H_j`.
pub fn univariate_gradient_sq(coeffs: &[f64]) -> f64 {
    coeffs.iter().enumerate().map(|(j, c)| j as f64 * c * c).sum()
}

/// `E|sign(x + b) - S(x)|` by quadrature split at the jump.
pub fn univariate_l1_error(coeffs: &[f64], b: f64) -> f64 {
    let rule = legendre_rule();
    let mut g = vec![0.0; coeffs.len()];
    let norm = 1.0 / (2.0 * PI).sqrt();
    let jump = (-b).clamp(-RANGE, RANGE);
    let mut total = 0.0;
    for (lo, hi, sign) in [(-RANGE, jump, -1.0), (jump, RANGE, 1.0)] {
        total += integrate(lo, hi, &rule, |x| {
            scaled_hermite(x, &mut g);
            let damp = (-x * x / 4.0).exp();
            // (sign - S) e^{-x^2/4}, then the remaining e^{-x^2/4} / sqrt(2 pi)
            let s: f64 = coeffs.iter().zip(&g).map(|(c, gj)| c * gj).sum();
            (sign * damp - s).abs() * damp * norm
        });
    }
    total
}
