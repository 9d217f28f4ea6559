//! Gaussian quadrature rules used by the verification suites.
//!
//! Rules are built with the Golub-Welsch construction: nodes are eigenvalues
//! of the Jacobi matrix of the orthogonal family and weights are squared first
//! components of the normalized eigenvectors.

use nalgebra::{DMatrix, SymmetricEigen};

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(n: usize, off_diag: impl Fn(usize) -> f64, mass: f64) -> Rule {
    assert!(n >= 1, "rule needs at least one node");
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for j in 1..n {
        let b = off_diag(j);
        jac[(j - 1, j)] = b;
        jac[(j, j - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
}

/// `n`-point Gauss-Hermite rule for the standard normal density: exact for
/// `E[q(Z)]` with `q` a polynomial of degree at most `2n - 1`. Weights sum
/// to one.
pub fn gauss_hermite(n: usize) -> Rule {
    golub_welsch(n, |j| (j as f64).sqrt(), 1.0)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    golub_welsch(
        n,
        |j| {
            let j = j as f64;
            j / (4.0 * j * j - 1.0).sqrt()
        },
        2.0,
    )
}

/// Tensor-product Gauss-Hermite rule on `R^d` for `N(0, I_d)`.
#[derive(Debug, Clone)]
pub struct TensorRule {
    dim: usize,
    rule: Rule,
}

impl TensorRule {
    pub fn new(dim: usize, nodes_per_axis: usize) -> Self {
        Self { dim, rule: gauss_hermite(nodes_per_axis) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `E[f(x)]` under the rule.
    pub fn expectation(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut total = 0.0;
        self.for_each(|x, w| total += w * f(x));
        total
    }

    /// Visits every node with its weight.
    pub fn for_each(&self, mut f: impl FnMut(&[f64], f64)) {
        let n = self.rule.nodes.len();
        let mut idx = vec![0usize; self.dim];
        let mut x = vec![0.0; self.dim];
        loop {
            let mut w = 1.0;
            for (i, &j) in idx.iter().enumerate() {
                x[i] = self.rule.nodes[j];
                w *= self.rule.weights[j];
            }
            f(&x, w);
            // odometer increment
            let mut pos = 0;
            loop {
                if pos == self.dim {
                    return;
                }
                idx[pos] += 1;
                if idx[pos] < n {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]` split into
/// `panels` equal pieces with `rule` applied on each.
pub fn composite_legendre(a: f64, b: f64, panels: usize, rule: &Rule, mut f: impl FnMut(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * f(mid + 0.5 * h * t);
        }
        total += 0.5 * h * s;
    }
    total
}
