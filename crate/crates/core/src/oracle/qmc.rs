//! Quasi-Monte-Carlo Hermite coefficients of bounded functions in low
//! dimension. A test facility: accuracy is only checked for `d <= 3` and
//! degree at most 12.

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hermite::{HermiteBasis, PolyCoeffs};
use crate::rng::{derive_seed, stream_rng};

pub const QMC_DEFAULT_POINTS: usize = 10_000_000;
const MAX_DIM: usize = 3;
const MAX_DEGREE: usize = 12;
const BLOCK: usize = 1 << 16;

/// `E[f(x) H_alpha(x)]` for all `|alpha| <= degree`, averaged over `n_points`
/// of a randomly shifted Roberts sequence mapped through the inverse normal
/// CDF.
pub fn qmc_hermite_coefficients(
    f: impl Fn(&[f64]) -> f64 + Sync,
    dim: usize,
    degree: usize,
    n_points: usize,
    seed: u64,
) -> Result<PolyCoeffs> {
    if dim == 0 || dim > MAX_DIM || degree > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "quasi-Monte-Carlo coefficients support d <= {MAX_DIM} and degree <= {MAX_DEGREE}"
        )));
    }
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be at least 1".into()));
    }
    let basis = HermiteBasis::new(dim, degree)?;
    // generalized golden ratio for dimension `dim`
    let mut phi = 2.0f64;
    for _ in 0..200 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|j| phi.powi(-(j as i32))).collect();
    let mut rng = stream_rng(derive_seed(seed, 0x716d_63), 0);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let normal = Normal::standard();

    let partial: Vec<Vec<f64>> = (0..n_points.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; basis.len()];
            let mut feats = vec![0.0; basis.len()];
            let mut x = vec![0.0; dim];
            for n in b * BLOCK..((b + 1) * BLOCK).min(n_points) {
                for j in 0..dim {
                    let u = (shift[j] + (n as f64 + 1.0) * alpha[j]).fract();
                    x[j] = normal.inverse_cdf(u.clamp(1e-15, 1.0 - 1e-15));
                }
                let v = f(&x);
                basis.features_into(&x, &mut feats).expect("dimension fixed above");
                for (a, g) in acc.iter_mut().zip(&feats) {
                    *a += v * g;
                }
            }
            acc
        })
        .collect();
    let mut coeffs = vec![0.0; basis.len()];
    for p in partial {
        for (c, v) in coeffs.iter_mut().zip(p) {
            *c += v;
        }
    }
    coeffs.iter_mut().for_each(|c| *c /= n_points as f64);
    PolyCoeffs::new(dim, degree, coeffs)
}
