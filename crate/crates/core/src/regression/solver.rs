//! Certified minimization of the regression objective.
//!
//! The nuclear-norm term is replaced by the smooth surrogate
//! `h_s(Z) = sum_j (sqrt(lambda_j(Z Z^T) + s^2) - s)`, and
//! `F_s(c) = f(c) + nu h_s(A c)` (with `f` the loss plus ridge) is minimized
//! by projected L-BFGS with Armijo backtracking, lowering `s` as the
//! iterates converge.
//!
//! Certificate. Let `W = grad h_s(A c)`, which has operator norm below one, so
//! `||Z||_* >= <W, Z>` for every `Z` and
//! `min F >= min_c' f(c') + nu <A^T W, c'>`. The right side is `2 mu`-strongly
//! convex with gradient `grad F_s(c)` at `c`, hence
//!
//! ```text
//! F(c) - min F <= nu (||A c||_* - <W, A c>) + ||grad F_s(c)||^2 / (4 mu).
//! ```
//!
//! The bound holds for the unconstrained minimum, which lies below the
//! minimum over the ball, so it also bounds the gap to the ball minimum.

use std::collections::VecDeque;
use std::f64::consts::LN_2;

use rayon::prelude::*;

use super::nuclear::smoothed;
use super::{psi, softplus, RegressionProblem, SolveResult};
use crate::error::{Error, Result};
use crate::hermite::{GradientMap, PolyCoeffs};

/// Rows per block of the data-term reduction.
const BLOCK: usize = 2048;
const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const INITIAL_SMOOTHING: f64 = 0.1;

/// Features of the points that survive truncation, row-major.
struct Design {
    m: usize,
    rows: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    /// Sample size including truncated points.
    total: usize,
}

impl Design {
    fn build(prob: &RegressionProblem) -> Result<Self> {
        let basis = prob.basis()?;
        let m = basis.len();
        let ds = prob.dataset();
        let lambda = prob.trunc_radius();
        let kept: Vec<(Vec<f64>, f64)> = (0..ds.len())
            .into_par_iter()
            .map(|i| {
                let f = basis.features(ds.point(i)).expect("dataset dimension matches basis");
                let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
                (f, ds.label(i) as f64, norm)
            })
            .filter(|(_, _, norm)| *norm <= lambda)
            .map(|(f, y, _)| (f, y))
            .collect();
        let rows = kept.len();
        let mut features = Vec::with_capacity(rows * m);
        let mut labels = Vec::with_capacity(rows);
        for (f, y) in kept {
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature map"));
            }
            features.extend(f);
            labels.push(y);
        }
        Ok(Self { m, rows, features, labels, total: ds.len() })
    }

    /// Mean truncated loss and its gradient.
    fn loss_and_grad(&self, c: &[f64]) -> (f64, Vec<f64>) {
        let m = self.m;
        let blocks: Vec<(f64, Vec<f64>)> = (0..self.rows.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let lo = b * BLOCK;
                let hi = (lo + BLOCK).min(self.rows);
                let mut loss = 0.0;
                let mut grad = vec![0.0; m];
                for i in lo..hi {
                    let row = &self.features[i * m..(i + 1) * m];
                    let y = self.labels[i];
                    let u: f64 = row.iter().zip(c).map(|(a, b)| a * b).sum();
                    loss += softplus(-y * u);
                    let w = -y * psi(y * u);
                    for (g, a) in grad.iter_mut().zip(row) {
                        *g += w * a;
                    }
                }
                (loss, grad)
            })
            .collect();
        let n = self.total as f64;
        let mut loss = (self.total - self.rows) as f64 * LN_2;
        let mut grad = vec![0.0; m];
        for (l, g) in blocks {
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }
}

/// Everything known about one point.
#[derive(Clone)]
struct Eval {
    c: Vec<f64>,
    /// `F_s(c)`.
    smooth: f64,
    /// `F(c)`.
    exact: f64,
    grad: Vec<f64>,
    /// `nu (||A c||_* - <W, A c>)`.
    slack: f64,
}

struct Objective<'a> {
    design: &'a Design,
    map: GradientMap,
    mu: f64,
    nu: f64,
}

impl Objective<'_> {
    fn eval(&self, c: Vec<f64>, s: f64) -> Eval {
        let (loss, mut grad) = self.design.loss_and_grad(&c);
        let norm_sq: f64 = c.iter().map(|v| v * v).sum();
        for (g, v) in grad.iter_mut().zip(&c) {
            *g += 2.0 * self.mu * v;
        }
        let base = loss + self.mu * norm_sq;
        if self.nu == 0.0 {
            return Eval { c, smooth: base, exact: base, grad, slack: 0.0 };
        }
        let z = self.map.apply(&c);
        let sm = smoothed(&z, s);
        self.map.adjoint_add(&sm.gradient, self.nu, &mut grad);
        Eval {
            c,
            smooth: base + self.nu * sm.value,
            exact: base + self.nu * sm.nuclear,
            grad,
            slack: self.nu * sm.slack,
        }
    }

    fn gap(&self, e: &Eval) -> (f64, f64) {
        let gsq: f64 = e.grad.iter().map(|v| v * v).sum();
        (e.slack, gsq / (4.0 * self.mu))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(c: &mut [f64], radius: f64) {
    let n = dot(c, c).sqrt();
    if n > radius {
        c.iter_mut().for_each(|v| *v *= radius / n);
    }
}

/// L-BFGS two-loop recursion: returns `-H g`.
fn direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizes the empirical objective over the ball to within
/// `prob.opt_tolerance()`, certified by the duality bound above.
///
/// Deterministic: the only parallel step is the data-term reduction, which
/// uses fixed blocks summed in order.
pub fn solve(prob: &RegressionProblem) -> Result<SolveResult> {
    let design = Design::build(prob)?;
    let basis = prob.basis()?;
    let obj = Objective { design: &design, map: GradientMap::new(&basis), mu: prob.mu(), nu: prob.nu() };
    let tol = prob.opt_tolerance();
    let radius = prob.ball_radius();
    let d = prob.dataset().dim() as f64;
    // smallest smoothing needed: the slack term is at most nu * d * s / 2
    let s_floor = if prob.nu() > 0.0 { tol / (prob.nu() * d) } else { 0.0 };
    let mut s = INITIAL_SMOOTHING.max(s_floor);

    let mut cur = obj.eval(vec![0.0; basis.len()], s);
    let mut best = (cur.exact, cur.c.clone());
    let mut trace = Vec::new();
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut gap_bound;

    loop {
        let (slack, grad_part) = obj.gap(&cur);
        gap_bound = slack + grad_part;
        if gap_bound <= tol {
            break;
        }
        // tighten the smoothing once the smoothed problem is nearly solved
        if grad_part <= 0.5 * tol && slack > 0.5 * tol && s > s_floor {
            s = (s / 10.0).max(s_floor);
            cur = obj.eval(cur.c, s);
            memory.clear();
            continue;
        }
        if iterations >= prob.max_iterations() {
            return Err(Error::NotCertified {
                tolerance: tol,
                gap: gap_bound,
                iterations,
                best: Box::new(finish(best, iterations, trace, gap_bound, s, &design, &basis)?),
            });
        }
        iterations += 1;

        let mut step = None;
        for attempt in 0..2 {
            let dir = if attempt == 0 { direction(&cur.grad, &memory) } else { cur.grad.iter().map(|g| -g).collect() };
            let dir = if dot(&dir, &cur.grad) < 0.0 { dir } else { cur.grad.iter().map(|g| -g).collect() };
            let mut t =
                if attempt == 0 && !memory.is_empty() { 1.0 } else { 1.0 / dot(&cur.grad, &cur.grad).sqrt().max(1.0) };
            for _ in 0..60 {
                let mut c: Vec<f64> = cur.c.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
                project(&mut c, radius);
                let delta: Vec<f64> = c.iter().zip(&cur.c).map(|(a, b)| a - b).collect();
                let decrease = dot(&cur.grad, &delta);
                if decrease >= 0.0 {
                    break;
                }
                let next = obj.eval(c, s);
                if next.smooth <= cur.smooth + ARMIJO * decrease {
                    step = Some((next, delta));
                    break;
                }
                t *= 0.5;
            }
            if step.is_some() {
                break;
            }
            memory.clear();
        }

        let Some((next, delta)) = step else {
            // no further progress possible at this smoothing level
            if s > s_floor {
                s = (s / 10.0).max(s_floor);
                cur = obj.eval(cur.c, s);
                continue;
            }
            return Err(Error::NotCertified {
                tolerance: tol,
                gap: gap_bound,
                iterations,
                best: Box::new(finish(best, iterations, trace, gap_bound, s, &design, &basis)?),
            });
        };
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&delta, &y);
        if sy > 1e-12 * dot(&delta, &delta).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((delta, y, 1.0 / sy));
        }
        cur = next;
        if cur.exact < best.0 {
            best = (cur.exact, cur.c.clone());
        }
        trace.push(best.0);
    }
    if cur.exact < best.0 {
        best = (cur.exact, cur.c.clone());
    }
    finish(best, iterations, trace, gap_bound, s, &design, &basis)
}

fn finish(
    best: (f64, Vec<f64>),
    iterations: usize,
    mut certificate: Vec<f64>,
    gap_bound: f64,
    smoothing: f64,
    design: &Design,
    basis: &crate::hermite::HermiteBasis,
) -> Result<SolveResult> {
    let (value, c) = best;
    if certificate.last().is_none_or(|&v| v > value) {
        certificate.push(value);
    }
    Ok(SolveResult {
        coeffs: PolyCoeffs::new(basis.dim(), basis.degree(), c)?,
        objective_value: value,
        iterations,
        certificate,
        gap_bound,
        smoothing,
        truncated: design.total - design.rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledDataset;
    use crate::regression::empirical_objective;

    fn small_dataset() -> LabeledDataset {
        let xs = [-1.5, -0.7, -0.2, 0.1, 0.4, 0.9, 1.3, 2.0, -2.2, 0.6];
        let ys = [-1, -1, 1, -1, 1, 1, 1, 1, -1, -1];
        LabeledDataset::new(1, xs.to_vec(), ys.to_vec()).unwrap()
    }

    #[test]
    fn objective_matches_direct_evaluation() {
        let prob = RegressionProblem::new(small_dataset(), 3, 1.0 / 128.0, 0.05, 0.1, 1e-8).unwrap();
        let r = solve(&prob).unwrap();
        let direct = empirical_objective(&r.coeffs, &prob).unwrap();
        assert!((direct - r.objective_value).abs() < 1e-12);
        assert!(r.gap_bound <= 1e-8);
        assert!(r.objective_value <= LN_2);
        assert!(r.certificate.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.coeffs.norm_sq().sqrt() <= prob.ball_radius() + 1e-12);
    }

    #[test]
    fn all_positive_labels_give_positive_constant() {
        let ds = LabeledDataset::new(2, vec![0.1, 0.2, -1.0, 0.5, 0.3, -0.4], vec![1, 1, 1]).unwrap();
        let prob = RegressionProblem::new(ds, 2, 1.0 / 128.0, 0.0, 0.1, 1e-8).unwrap();
        let r = solve(&prob).unwrap();
        assert!(r.coeffs.coeffs()[0] > 0.0);
    }

    #[test]
    fn budget_exhaustion_reports_incumbent() {
        let prob =
            RegressionProblem::new(small_dataset(), 3, 1.0 / 128.0, 0.05, 0.1, 1e-12).unwrap().with_max_iterations(2);
        match solve(&prob) {
            Err(Error::NotCertified { best, iterations, .. }) => {
                assert_eq!(iterations, 2);
                assert!(best.objective_value <= LN_2);
            }
            other => panic!("expected NotCertified, got {other:?}"),
        }
    }
}
