//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerical routines.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn unit_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let v = gaussian_vec(rng, d);
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `He_n(x) / sqrt(n!)` from the explicit sum
/// `He_n(x) = n! sum_m (-1)^m x^(n-2m) / (m! (n-2m)! 2^m)`. Accurate for small `n`.
pub fn hermite_explicit(n: u32, x: f64) -> f64 {
    let mut s = 0.0;
    for m in 0..=n / 2 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * x.powi((n - 2 * m) as i32) / (factorial(m) * factorial(n - 2 * m) * 2f64.powi(m as i32));
    }
    s * factorial(n) / factorial(n).sqrt()
}

/// Multivariate basis element `prod_i H_{alpha_i}(x_i)`.
pub fn hermite_product(alpha: &[u32], x: &[f64]) -> f64 {
    alpha.iter().zip(x).map(|(&a, &t)| hermite_explicit(a, t)).product()
}

/// All multi-indices of total degree at most `k`, graded, ascending within a
/// degree (built by brute-force filtering of the `(k+1)^d` grid).
pub fn multi_indices(d: usize, k: usize) -> Vec<Vec<u32>> {
    let mut all = Vec::new();
    let total = (k + 1).pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let mut alpha = vec![0u32; d];
        for i in (0..d).rev() {
            alpha[i] = (c % (k + 1)) as u32;
            c /= k + 1;
        }
        if alpha.iter().sum::<u32>() as usize <= k {
            all.push(alpha);
        }
    }
    all.sort_by(|a, b| a.iter().sum::<u32>().cmp(&b.iter().sum::<u32>()).then(a.cmp(b)));
    all
}

pub fn features(x: &[f64], k: usize) -> Vec<f64> {
    multi_indices(x.len(), k).iter().map(|a| hermite_product(a, x)).collect()
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[f(Z)]` for `Z ~ N(0, 1)` by composite Simpson on `[-14, 14]` with the
/// breakpoints in `cuts` honoured.
pub fn gauss_expect(f: impl Fn(f64) -> f64, cuts: &[f64]) -> f64 {
    gauss_expect_step(f, cuts, 1e-3)
}

/// [`gauss_expect`] with a chosen Simpson step; smooth integrands tolerate
/// coarse steps.
pub fn gauss_expect_step(f: impl Fn(f64) -> f64, cuts: &[f64], step: f64) -> f64 {
    let mut pts = vec![-14.0];
    pts.extend(cuts.iter().copied().filter(|c| c.abs() < 14.0));
    pts.push(14.0);
    pts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = (((b - a) / step).ceil() as usize).max(2).next_multiple_of(2);
        let h = (b - a) / n as f64;
        let g = |t: f64| f(t) * std_normal_pdf(t);
        // one-sided endpoint values so jumps at the cuts land on the right side
        let nudge = |t: f64| 1e-12 * (1.0 + t.abs());
        let mut s = g(a + nudge(a)) + g(b - nudge(b));
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += s * h / 3.0;
    }
    total
}

/// Standard normal CDF by Marsaglia's series
/// `Phi(x) = 1/2 + phi(x) (x + x^3/3 + x^5/(3 5) + ...)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x < -9.0 {
        return 0.0;
    }
    if x > 9.0 {
        return 1.0;
    }
    let (mut term, mut sum) = (x, x);
    let mut n = 1.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 2.0;
        term *= x * x / n;
        sum += term;
    }
    0.5 + std_normal_pdf(x) * sum
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `(1/N) sum log(1 + exp(-y <c, phi>)) + mu ||c||^2`.
pub fn ridge_logistic_objective(feats: &[Vec<f64>], labels: &[i8], mu: f64, c: &[f64]) -> f64 {
    let n = feats.len() as f64;
    let loss: f64 = feats.iter().zip(labels).map(|(f, &y)| softplus(-(y as f64) * dot(f, c))).sum();
    loss / n + mu * dot(c, c)
}

/// Minimizer of the ridge-logistic objective by damped Newton steps with
/// backtracking; stops when the Newton decrement is below `1e-24`.
pub fn newton_ridge_logistic(feats: &[Vec<f64>], labels: &[i8], mu: f64) -> (Vec<f64>, f64) {
    let m = feats[0].len();
    let n = feats.len() as f64;
    let mut c = vec![0.0; m];
    for _ in 0..100 {
        let mut g = DVector::<f64>::from_iterator(m, c.iter().map(|v| 2.0 * mu * v));
        let mut h = DMatrix::<f64>::identity(m, m) * (2.0 * mu);
        for (f, &y) in feats.iter().zip(labels) {
            let y = y as f64;
            let u = dot(f, &c);
            let s = sigmoid(-y * u);
            let fv = DVector::from_column_slice(f);
            g -= &fv * (y * s / n);
            h += &fv * fv.transpose() * (s * (1.0 - s) / n);
        }
        let step = h.cholesky().expect("positive definite").solve(&g);
        let decrement = g.dot(&step);
        if decrement < 1e-24 {
            break;
        }
        let f0 = ridge_logistic_objective(feats, labels, mu, &c);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, b)| a - t * b).collect();
            if ridge_logistic_objective(feats, labels, mu, &trial) <= f0 - 0.25 * t * decrement || t < 1e-12 {
                c = trial;
                break;
            }
            t *= 0.5;
        }
    }
    let v = ridge_logistic_objective(feats, labels, mu, &c);
    (c, v)
}

/// Gram-Schmidt orthonormal basis of the span of `vs`.
pub fn orthonormalize(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut u = v.clone();
        for _ in 0..2 {
            for b in &out {
                let p = dot(b, &u);
                u.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
            }
        }
        let n = dot(&u, &u).sqrt();
        if n > 1e-10 {
            out.push(u.into_iter().map(|a| a / n).collect());
        }
    }
    out
}

/// Projection of `x` onto the span of the orthonormal `basis`.
pub fn project(basis: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; x.len()];
    for b in basis {
        let c = dot(b, x);
        p.iter_mut().zip(b).for_each(|(a, bi)| *a += c * bi);
    }
    p
}

/// Best 0-1 error over all `2^(2^K)` truth tables for the cells of `signs`
/// (`signs[i][j]` is halfspace `j` on point `i`); ties resolved arbitrarily.
pub fn exhaustive_tables(signs: &[Vec<i8>], labels: &[i8]) -> (u64, usize) {
    let k = signs.first().map_or(0, |s| s.len());
    let cells = 1usize << k;
    let cell: Vec<usize> =
        signs.iter().map(|s| s.iter().enumerate().filter(|(_, &v)| v > 0).map(|(j, _)| 1usize << j).sum()).collect();
    let mut best = (0u64, usize::MAX);
    for mask in 0..(1u64 << cells) {
        let wrong = cell.iter().zip(labels).filter(|(&c, &y)| (if mask >> c & 1 == 1 { 1 } else { -1 }) != y).count();
        if wrong < best.1 {
            best = (mask, wrong);
        }
    }
    best
}
