//! Subspace Poincare inequality for polynomials:
//! `E[(G - E[G | x_{U-perp}])^2] <= sum_i E[(d_{xi_i} G)^2]` for an
//! orthonormal set `xi_1..xi_r` spanning `U`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hermite::quadrature::TensorRule;
use crate::hermite::{poly_eval, HermiteBasis, PolyCoeffs};
use crate::spectral::{influence_matrix, Subspace};

/// Returns `(lhs, rhs)`.
///
/// `lhs` is exact: in coordinates `y = Q^T x`, where the first `r` columns of
/// the orthogonal `Q` are the directions, conditioning on the remaining
/// coordinates removes every Hermite coefficient of `G(Q y)` with weight in
/// the first `r` coordinates, so `lhs` is the sum of squares of exactly those
/// coefficients. They are computed by a tensor Gauss-Hermite rule with `k + 1`
/// nodes per axis, exact for the degree-`2k` integrands involved.
/// `rhs = sum_i xi_i^T M(G) xi_i`.
pub fn poincare_check(p: &PolyCoeffs, directions: &[Vec<f64>]) -> Result<(f64, f64)> {
    let d = p.dim();
    let r = directions.len();
    for v in directions {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: v.len() });
        }
    }
    for i in 0..r {
        for j in 0..=i {
            let g: f64 = directions[i].iter().zip(&directions[j]).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            if (g - target).abs() > 1e-10 {
                return Err(Error::InvalidArgument("directions are not orthonormal".into()));
            }
        }
    }
    let m = influence_matrix(p);
    let rhs: f64 = directions
        .iter()
        .map(|xi| {
            let v = nalgebra::DVector::from_column_slice(xi);
            (v.transpose() * m.matrix() * &v)[(0, 0)]
        })
        .sum();
    if r == 0 {
        return Ok((0.0, rhs));
    }

    let mut completion: Vec<Vec<f64>> = directions.to_vec();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        completion.push(e);
    }
    let q: DMatrix<f64> = Subspace::span_of(d, &completion)?.basis();
    debug_assert_eq!(q.ncols(), d);

    let basis = HermiteBasis::new(d, p.degree())?;
    let rule = TensorRule::new(d, p.degree() + 1);
    let mut rotated = vec![0.0; basis.len()];
    let mut feats = vec![0.0; basis.len()];
    let mut x = vec![0.0; d];
    let mut err = None;
    rule.for_each(|y, w| {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = (0..d).map(|j| q[(i, j)] * y[j]).sum();
        }
        match (poly_eval(p, &x), basis.features_into(y, &mut feats)) {
            (Ok(g), Ok(())) => {
                for (c, f) in rotated.iter_mut().zip(&feats) {
                    *c += w * g * f;
                }
            }
            (Err(e), _) | (_, Err(e)) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let lhs = basis
        .indices()
        .iter()
        .zip(&rotated)
        .filter(|(beta, _)| beta.entries()[..r].iter().any(|&b| b > 0))
        .map(|(_, c)| c * c)
        .sum();
    Ok((lhs, rhs))
}
