//! Direction nets on the unit sphere and the threshold grid.

use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

/// Uniform grid `t_j = -T + j * 2T/n`, `j = 0..=n`, where `P(|Z| > T) <= eps/2`
/// (tail `eps/4` on each side) and the spacing `2T/n` is at most `eps/2`.
pub fn threshold_grid(eps: f64) -> Vec<f64> {
    let normal = std_normal();
    let mut t = normal.inverse_cdf(1.0 - eps / 4.0);
    // Newton polish on the upper tail; the inverse CDF alone is accurate to ~1e-10
    for _ in 0..3 {
        t += (normal.sf(t) - eps / 4.0) / normal.pdf(t);
    }
    let n = (2.0 * t / (eps / 2.0)).ceil().max(1.0) as usize;
    (0..=n).map(|j| t * (2.0 * j as f64 - n as f64) / n as f64).collect()
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Generalized golden ratio: positive root of `x^(r+1) = x + 1`.
fn roberts_ratio(r: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..200 {
        x = (1.0 + x).powf(1.0 / (r as f64 + 1.0));
    }
    x
}

/// Greedy farthest-point `(eps/2)`-net of the unit sphere in `R^r`.
///
/// Candidates: `ceil(10 (3/eps)^r)` points of a randomly shifted Roberts
/// low-discrepancy sequence, pushed through the inverse normal CDF and
/// normalized. Every candidate ends within `eps/2` of some net point, and net
/// points are pairwise more than `eps/2` apart, so the net has at most as many
/// points as candidates.
///
/// Fails with a resource error when the candidate count exceeds
/// `max_candidates` or the net grows beyond `max_points`.
pub fn sphere_net(r: usize, eps: f64, seed: u64, max_candidates: usize, max_points: usize) -> Result<Vec<Vec<f64>>> {
    if r == 0 {
        return Ok(Vec::new());
    }
    if r == 1 {
        return Ok(vec![vec![1.0], vec![-1.0]]);
    }
    let count = 10.0 * (3.0 / eps).powi(r as i32);
    if !count.is_finite() || count > max_candidates as f64 {
        return Err(Error::Resource {
            what: "cover candidates",
            needed: if count.is_finite() { count.ceil() as u128 } else { u128::MAX },
            limit: max_candidates as u128,
        });
    }
    let count = count.ceil() as usize;
    let candidates = candidates(r, count, seed);

    let radius_sq = (eps / 2.0) * (eps / 2.0);
    let dist_sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut nearest = vec![f64::INFINITY; count];
    let mut net: Vec<Vec<f64>> = Vec::new();
    let mut next = 0usize;
    loop {
        if net.len() >= max_points {
            return Err(Error::Resource {
                what: "cover size",
                needed: net.len() as u128 + 1,
                limit: max_points as u128,
            });
        }
        let c = candidates[next].clone();
        let mut far = 0.0;
        let mut far_idx = 0;
        for (i, cand) in candidates.iter().enumerate() {
            let dd = dist_sq(cand, &c);
            if dd < nearest[i] {
                nearest[i] = dd;
            }
            if nearest[i] > far {
                far = nearest[i];
                far_idx = i;
            }
        }
        net.push(c);
        if far <= radius_sq {
            return Ok(net);
        }
        next = far_idx;
    }
}

fn candidates(r: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let phi = roberts_ratio(r);
    let alpha: Vec<f64> = (1..=r).map(|j| phi.powi(-(j as i32))).collect();
    let mut rng = stream_rng(derive_seed(seed, 0x636f_7665), 0);
    let shift: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
    let normal = std_normal();
    let mut out = Vec::with_capacity(count);
    let mut n = 1u64;
    while out.len() < count {
        let z: Vec<f64> = (0..r)
            .map(|j| {
                let u = (shift[j] + n as f64 * alpha[j]).fract();
                // keep away from 0 and 1 so the inverse CDF stays finite
                normal.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12))
            })
            .collect();
        n += 1;
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-9 {
            out.push(z.iter().map(|v| v / norm).collect());
        }
    }
    out
}
