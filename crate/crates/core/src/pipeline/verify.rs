//! Property suites behind the `verify` subcommand.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cover::{build_cover, cell_boolean_erm, sphere_net, threshold_grid, CoverOptions, Halfspace};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::hermite::quadrature::TensorRule;
use crate::hermite::{gradient_coeff_matrix, gradient_energy, poly_eval, HermiteBasis, PolyCoeffs};
use crate::oracle::{
    expansion_l2_sq, ou_smooth_truncate_univariate, poincare_check, select_ou_params, sign_coefficients,
    univariate_gradient_sq, univariate_l1_error,
};
use crate::regression::{nuclear_norm, nuclear_subgradient};
use crate::rng::stream_rng;
use crate::spectral::{influence_matrix, trace_sqrt, Subspace};

pub const SUITES: [&str; 6] = ["hermite", "nuclear", "poincare", "ou", "cover", "cellerm"];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

/// Runs one named suite; `all` is not a suite (callers iterate [`SUITES`]).
pub fn run_suite(name: &str) -> Result<SuiteReport> {
    let checks = match name {
        "hermite" => hermite_suite(),
        "nuclear" => nuclear_suite(),
        "poincare" => poincare_suite(),
        "ou" => ou_suite(),
        "cover" => cover_suite()?,
        "cellerm" => cellerm_suite()?,
        other => return Err(Error::InvalidArgument(format!("unknown suite `{other}`; known: {}", SUITES.join(", ")))),
    };
    Ok(SuiteReport { suite: name.to_string(), passed: checks.iter().all(|c| c.passed), checks })
}

fn random_poly(rng: &mut ChaCha8Rng, d: usize, k: usize) -> PolyCoeffs {
    let m = HermiteBasis::new(d, k).expect("d >= 1").len();
    let c = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal) / (m as f64).sqrt()).collect();
    PolyCoeffs::new(d, k, c).expect("length matches")
}

/// Five-point central difference of `P` along coordinate `i`.
fn partial(p: &PolyCoeffs, x: &[f64], i: usize) -> f64 {
    let h = 1e-3;
    let mut y = x.to_vec();
    let mut at = |t: f64| {
        y[i] = x[i] + t;
        poly_eval(p, &y).expect("dimension matches")
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

fn hermite_suite() -> Vec<Check> {
    let mut rng = stream_rng(101, 0);
    let mut out = Vec::new();
    for d in 1..=3usize {
        for k in [2usize, 4, 6] {
            let basis = HermiteBasis::new(d, k).expect("d >= 1");
            let m = basis.len();
            let rule = TensorRule::new(d, k + 1);
            let mut gram = DMatrix::<f64>::zeros(m, m);
            rule.for_each(|x, w| {
                let f = basis.features(x).expect("dimension matches");
                for a in 0..m {
                    for b in 0..m {
                        gram[(a, b)] += w * f[a] * f[b];
                    }
                }
            });
            let dev = (gram - DMatrix::<f64>::identity(m, m)).abs().max();
            out.push(check(format!("orthonormality d={d} k={k}"), dev <= 1e-8, format!("max deviation {dev:e}")));

            let p = random_poly(&mut rng, d, k);
            let e2 = rule.expectation(|x| poly_eval(&p, x).expect("dimension matches").powi(2));
            let dev = (e2 - p.norm_sq()).abs();
            out.push(check(format!("parseval d={d} k={k}"), dev <= 1e-8, format!("|E P^2 - sum c^2| = {dev:e}")));

            // derivative factor: E[d_i P * H_beta] = A[i, beta]
            let a = gradient_coeff_matrix(&p);
            let lower = HermiteBasis::new(d, k - 1).expect("d >= 1");
            let mut proj = DMatrix::<f64>::zeros(d, lower.len());
            let rule_d = TensorRule::new(d, k);
            rule_d.for_each(|x, w| {
                let f = lower.features(x).expect("dimension matches");
                for i in 0..d {
                    let g = partial(&p, x, i);
                    for (b, fb) in f.iter().enumerate() {
                        proj[(i, b)] += w * g * fb;
                    }
                }
            });
            let dev = (proj - a.matrix()).abs().max();
            out.push(check(format!("derivative factor d={d} k={k}"), dev <= 1e-8, format!("max deviation {dev:e}")));

            let energy = rule_d.expectation(|x| (0..d).map(|i| partial(&p, x, i).powi(2)).sum());
            let dev = (energy - gradient_energy(&p)).abs();
            out.push(check(format!("gradient energy d={d} k={k}"), dev <= 1e-8, format!("deviation {dev:e}")));
        }
    }
    out
}

fn nuclear_suite() -> Vec<Check> {
    let mut rng = stream_rng(202, 0);
    let mut out = Vec::new();
    for t in 0..20 {
        let (r, c) = (1 + t % 4, 2 + t % 7);
        let a = DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
        let g = crate::hermite::GradientMatrix::from_matrix(a.clone());
        let nn = nuclear_norm(&g).expect("finite");
        let ts = trace_sqrt(&crate::spectral::InfluenceMatrix::from_symmetric(&a * a.transpose()).expect("square"))
            .expect("psd");
        out.push(check(
            format!("nuclear vs trace sqrt #{t}"),
            (nn - ts).abs() <= 1e-10 * (1.0 + nn),
            format!("{nn} vs {ts}"),
        ));
        let sub = nuclear_subgradient(&g).expect("finite");
        let mut ok = true;
        for _ in 0..10 {
            let delta = DMatrix::from_fn(r, c, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal));
            let moved = nuclear_norm(&crate::hermite::GradientMatrix::from_matrix(&a + &delta)).expect("finite");
            ok &= moved >= nn + sub.dot(&delta) - 1e-10;
        }
        out.push(check(format!("subgradient inequality #{t}"), ok, "10 random perturbations"));
    }
    for t in 0..10 {
        let d = 1 + t % 3;
        let p = random_poly(&mut rng, d, 2 + t % 4);
        let m = influence_matrix(&p);
        let mut quad = DMatrix::<f64>::zeros(d, d);
        TensorRule::new(d, p.degree() + 1).for_each(|x, w| {
            let g: Vec<f64> = (0..d).map(|i| partial(&p, x, i)).collect();
            for a in 0..d {
                for b in 0..d {
                    quad[(a, b)] += w * g[a] * g[b];
                }
            }
        });
        let dev = (quad - m.matrix()).abs().max();
        out.push(check(format!("influence matrix vs quadrature #{t}"), dev <= 1e-8, format!("max deviation {dev:e}")));
        let ts = trace_sqrt(&m).expect("psd");
        let (eig, _) = m.eigen().expect("symmetric");
        let ok = [0.01, 0.1, 1.0]
            .iter()
            .all(|&eta| eig.iter().filter(|&&l| l >= eta).count() as f64 <= ts / f64::sqrt(eta) + 1e-12);
        out.push(check(format!("rank-trace bound #{t}"), ok, format!("trace sqrt {ts:.4}")));
    }
    for t in 0..10 {
        let p = random_poly(&mut rng, 3, 3);
        let a = gradient_coeff_matrix(&p);
        let m = influence_matrix(&p);
        let nn = nuclear_norm(&a).expect("finite");
        let ts = trace_sqrt(&m).expect("psd");
        out.push(check(
            format!("polynomial gradient #{t}"),
            (nn - ts).abs() <= 1e-10 * (1.0 + nn),
            format!("{nn} vs {ts}"),
        ));
    }
    out
}

/// Random orthonormal `r`-frame in `R^d`.
fn random_frame(rng: &mut ChaCha8Rng, d: usize, r: usize) -> Vec<Vec<f64>> {
    let vs: Vec<Vec<f64>> = (0..r).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let s = Subspace::span_of(d, &vs).expect("dimensions match");
    (0..s.rank()).map(|j| s.column(j).to_vec()).collect()
}

fn poincare_suite() -> Vec<Check> {
    let mut rng = stream_rng(303, 0);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..500 {
        let d = rng.random_range(1..=4usize);
        let k = rng.random_range(1..=4usize);
        let r = rng.random_range(1..=3usize.min(d));
        let p = random_poly(&mut rng, d, k);
        let dirs = random_frame(&mut rng, d, r);
        match poincare_check(&p, &dirs) {
            Ok((lhs, rhs)) => {
                worst = worst.max(lhs - rhs);
                if lhs > rhs + 1e-10 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    vec![check("lhs <= rhs on 500 pairs", failures == 0, format!("{failures} failures, max lhs - rhs {worst:e}"))]
}

fn ou_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let mut c_prime: f64 = 0.0;
    for &tau in &[0.05, 0.1, 0.2] {
        let params = select_ou_params(1.0, tau).expect("valid parameters");
        for &b in &[0.0, 0.5, 1.0] {
            let coeffs = sign_coefficients(b, params.trunc_degree);
            let s = ou_smooth_truncate_univariate(&coeffs, &params).expect("enough coefficients");
            let l1 = univariate_l1_error(&s, b);
            let l2 = expansion_l2_sq(&s);
            let grad = univariate_gradient_sq(&s);
            c_prime = c_prime.max(grad * tau / (params.gsa * params.gsa));
            out.push(check(
                format!("L1 tau={tau} b={b}"),
                l1 <= tau,
                format!("E|f - S| = {l1:.5}, m = {}", params.trunc_degree),
            ));
            out.push(check(format!("L2 tau={tau} b={b}"), l2 <= 1.0 + 1e-8, format!("E S^2 = {l2:.8}")));
        }
    }
    out.push(check("gradient constant", c_prime <= 10.0, format!("max E[S'^2] tau / gsa^2 = {c_prime:.4}")));
    out
}

fn cover_suite() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = stream_rng(404, 0);
    for (r, eps) in [(1usize, 0.2), (2, 0.2), (3, 0.3)] {
        let net = sphere_net(r, eps, 9, 1_000_000, 1_000_000)?;
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let z: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
            let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let best = net
                .iter()
                .map(|p| p.iter().zip(&z).map(|(a, b)| (a - b / n).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        out.push(check(format!("net coverage r={r} eps={eps}"), worst <= eps, format!("worst distance {worst:.4}")));
        let v = Subspace::span_of(r + 1, &random_frame(&mut rng, r + 1, r))?;
        let cover = build_cover(&v, eps, &CoverOptions::default())?;
        let bound = 2.0 + 10.0 * (3.0 / eps).powi(r as i32) * threshold_grid(eps).len() as f64;
        out.push(check(
            format!("cover size r={r}"),
            (cover.len() as f64) <= bound,
            format!("{} <= {bound}", cover.len()),
        ));
        let inside = cover.hypotheses().iter().all(|h| {
            let p = v.project(h.normal());
            p.iter().zip(h.normal()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-10
        });
        out.push(check(format!("normals in subspace r={r}"), inside, ""));
    }
    Ok(out)
}

/// Best error over all `2^(2^K)` tables by enumeration.
pub fn exhaustive_table_error(halfspaces: &[Halfspace], sample: &LabeledDataset) -> (Vec<i8>, f64) {
    let cells = 1usize << halfspaces.len();
    let cell_of: Vec<usize> = sample
        .iter()
        .map(|(x, _)| halfspaces.iter().enumerate().map(|(j, h)| usize::from(h.eval(x) > 0) << j).sum())
        .collect();
    let mut best = (Vec::new(), usize::MAX);
    for mask in 0..(1u64 << cells) {
        let table: Vec<i8> = (0..cells).map(|c| if mask >> c & 1 == 1 { 1 } else { -1 }).collect();
        let wrong = cell_of.iter().zip(sample.labels()).filter(|(c, y)| table[**c] != **y).count();
        if wrong < best.1 {
            best = (table, wrong);
        }
    }
    (best.0, best.1 as f64 / sample.len() as f64)
}

fn cellerm_suite() -> Result<Vec<Check>> {
    let mut rng = stream_rng(505, 0);
    let mut out = Vec::new();
    for k in 1..=3usize {
        let mut mismatches = 0;
        for _ in 0..50 {
            let d = 3;
            let hs: Vec<Halfspace> = (0..k)
                .map(|_| {
                    let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    Halfspace::from_direction(&w, rng.sample::<f64, _>(StandardNormal) * 0.5).expect("nonzero")
                })
                .collect();
            let n = rng.random_range(5..60usize);
            let pts: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
            let labels: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let sample = LabeledDataset::new(d, pts, labels)?;
            let (h, err) = cell_boolean_erm(&hs, &sample)?;
            let (_, best) = exhaustive_table_error(&hs, &sample);
            let own = sample.error_of(|x| h.eval(x));
            if err != best || own != best {
                mismatches += 1;
            }
        }
        out.push(check(
            format!("cell ERM = exhaustive, K={k}"),
            mismatches == 0,
            format!("{mismatches}/50 mismatches"),
        ));
    }
    Ok(out)
}
