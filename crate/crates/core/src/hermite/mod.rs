//! Normalized (probabilists') Hermite polynomials and the linear maps between
//! Hermite coefficients, gradient coefficients and gradient energy.
//!
//! The univariate family is `H_j = He_j / sqrt(j!)`, orthonormal under the
//! standard Gaussian. Multivariate basis elements are products
//! `H_alpha(x) = prod_i H_{alpha_i}(x_i)`.
//!
//! Multi-indices of total degree at most `k` are laid out in graded
//! lexicographic order: every index of degree `n` precedes every index of
//! degree `n + 1`, and indices of equal degree are sorted ascending as tuples.
//! For `d = 2, k = 2` the order is
//! `(0,0), (0,1), (1,0), (0,2), (1,1), (2,0)`.
//! Coefficient vectors and the on-disk format use this layout.

pub mod quadrature;

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `C(n, k)` computed exactly in integer arithmetic.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of multi-indices in `N^d` with total degree at most `k`.
pub fn basis_size(d: usize, k: usize) -> usize {
    binomial((d + k) as u64, k as u64) as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Total degree `|alpha|`.
    pub fn degree(&self) -> u32 {
        self.entries.iter().sum()
    }
}

/// All multi-indices of length `d` and degree at most `k`, in graded
/// lexicographic order.
pub fn enumerate_multi_indices(d: usize, k: usize) -> Result<Vec<MultiIndex>> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(basis_size(d, k));
    let mut buf = vec![0u32; d];
    for n in 0..=k as u32 {
        compositions(n, 0, &mut buf, &mut out);
    }
    Ok(out)
}

fn compositions(remaining: u32, pos: usize, buf: &mut [u32], out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex::new(buf.to_vec()));
        return;
    }
    for v in 0..=remaining {
        buf[pos] = v;
        compositions(remaining - v, pos + 1, buf, out);
    }
}

/// Normalized Hermite polynomial `H_j(t)` via the three-term recurrence
/// `H_{j+1} = (t H_j - sqrt(j) H_{j-1}) / sqrt(j+1)`.
pub fn hermite_eval(j: usize, t: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for i in 0..j {
        let next = (t * cur - (i as f64).sqrt() * prev) / ((i + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[j] = H_j(t)` for `j = 0..out.len()`.
pub fn hermite_table(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for j in 1..out.len().saturating_sub(1) {
        out[j + 1] = (t * out[j] - (j as f64).sqrt() * out[j - 1]) / ((j + 1) as f64).sqrt();
    }
}

/// Evaluates `H_alpha(x)` for every listed multi-index.
pub fn feature_map(x: &[f64], indices: &[MultiIndex]) -> Result<Vec<f64>> {
    let Some(first) = indices.first() else {
        return Ok(Vec::new());
    };
    let d = first.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    let max_deg = indices.iter().map(|a| a.degree()).max().unwrap_or(0) as usize;
    let table = coordinate_tables(x, max_deg);
    let mut out = Vec::with_capacity(indices.len());
    for alpha in indices {
        if alpha.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: alpha.dim() });
        }
        out.push(product(&table, max_deg + 1, alpha.entries()));
    }
    Ok(out)
}

fn coordinate_tables(x: &[f64], max_deg: usize) -> Vec<f64> {
    let stride = max_deg + 1;
    let mut table = vec![0.0; x.len() * stride];
    for (i, &xi) in x.iter().enumerate() {
        hermite_table(xi, &mut table[i * stride..(i + 1) * stride]);
    }
    table
}

#[inline]
fn product(table: &[f64], stride: usize, entries: &[u32]) -> f64 {
    entries.iter().enumerate().map(|(i, &a)| table[i * stride + a as usize]).product()
}

/// The enumerated basis `{H_alpha : |alpha| <= k}` in `d` variables, with a
/// reverse lookup from multi-index to position.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    dim: usize,
    degree: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl HermiteBasis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        let indices = enumerate_multi_indices(dim, degree)?;
        let lookup = indices.iter().enumerate().map(|(i, a)| (a.entries().to_vec(), i)).collect();
        Ok(Self { dim, degree, indices, lookup })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, entries: &[u32]) -> Option<usize> {
        self.lookup.get(entries).copied()
    }

    /// Writes the feature vector `Phi(x)` into `out` (length `self.len()`).
    pub fn features_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let table = coordinate_tables(x, self.degree);
        for (o, alpha) in out.iter_mut().zip(&self.indices) {
            *o = product(&table, self.degree + 1, alpha.entries());
        }
        Ok(())
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.features_into(x, &mut out)?;
        Ok(out)
    }
}

/// A polynomial of degree at most `degree` in `dim` variables, stored by its
/// Hermite coefficients in graded lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl PolyCoeffs {
    pub fn new(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let m = basis_size(dim, degree);
        if coeffs.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: coeffs.len() });
        }
        Ok(Self { dim, degree, coeffs })
    }

    pub fn zeros(dim: usize, degree: usize) -> Result<Self> {
        Self::new(dim, degree, vec![0.0; basis_size(dim, degree)])
    }

    /// The single basis element `H_alpha` embedded in degree `degree`.
    pub fn basis_element(dim: usize, degree: usize, alpha: &[u32]) -> Result<Self> {
        let basis = HermiteBasis::new(dim, degree)?;
        let pos = basis
            .position(alpha)
            .ok_or_else(|| Error::InvalidArgument(format!("multi-index {alpha:?} not in degree-{degree} basis")))?;
        let mut p = Self::zeros(dim, degree)?;
        p.coeffs[pos] = 1.0;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn basis(&self) -> HermiteBasis {
        HermiteBasis::new(self.dim, self.degree).expect("dim validated at construction")
    }

    /// `E[P(x)^2]` by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Plain-text form: a header line `d k m` then one coefficient per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.dim, self.degree, self.coeffs.len());
        for c in &self.coeffs {
            writeln!(s, "{c:e}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse { line: 1, message: "header must be `d k m`".into() });
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse { line: 1, message: e.to_string() });
        let (d, k, m) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        if d == 0 || basis_size(d, k) != m {
            return Err(Error::Parse { line: 1, message: format!("m = {m} inconsistent with d = {d}, k = {k}") });
        }
        let mut coeffs = Vec::with_capacity(m);
        for (i, line) in lines {
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse { line: i + 1, message: e.to_string() })?;
            coeffs.push(v);
        }
        if coeffs.len() != m {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("expected {m} coefficients, found {}", coeffs.len()),
            });
        }
        Self::new(d, k, coeffs)
    }
}

/// `P(x) = <coeffs, Phi(x)>`.
pub fn poly_eval(p: &PolyCoeffs, x: &[f64]) -> Result<f64> {
    if x.len() != p.dim {
        return Err(Error::DimensionMismatch { expected: p.dim, found: x.len() });
    }
    let basis = p.basis();
    let table = coordinate_tables(x, p.degree);
    Ok(basis.indices().iter().zip(&p.coeffs).map(|(alpha, c)| c * product(&table, p.degree + 1, alpha.entries())).sum())
}

/// Sparse description of the linear map `c -> A(c)` sending Hermite
/// coefficients of `P` to the `d x m'` coefficient matrix of `grad P`, with
/// `A[i, beta] = sqrt(beta_i + 1) * c[beta + e_i]`.
#[derive(Debug, Clone)]
pub struct GradientMap {
    rows: usize,
    cols: usize,
    /// `(row i, column beta, source alpha = beta + e_i, scale)`.
    entries: Vec<(usize, usize, usize, f64)>,
}

impl GradientMap {
    pub fn new(basis: &HermiteBasis) -> Self {
        let d = basis.dim();
        let k = basis.degree();
        if k == 0 {
            return Self { rows: d, cols: 1, entries: Vec::new() };
        }
        let lower = HermiteBasis::new(d, k - 1).expect("dim already validated");
        let mut entries = Vec::with_capacity(d * lower.len());
        let mut shifted = vec![0u32; d];
        for (col, beta) in lower.indices().iter().enumerate() {
            for i in 0..d {
                shifted.copy_from_slice(beta.entries());
                shifted[i] += 1;
                let src = basis.position(&shifted).expect("beta + e_i has degree <= k");
                let scale = (beta.entries()[i] as f64 + 1.0).sqrt();
                entries.push((i, col, src, scale));
            }
        }
        Self { rows: d, cols: lower.len(), entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn apply(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.rows, self.cols);
        for &(i, col, src, scale) in &self.entries {
            a[(i, col)] = scale * coeffs[src];
        }
        a
    }

    /// Adjoint map: accumulates `scale * G[i, beta]` into `out[beta + e_i]`.
    pub fn adjoint_add(&self, g: &DMatrix<f64>, factor: f64, out: &mut [f64]) {
        for &(i, col, src, scale) in &self.entries {
            out[src] += factor * scale * g[(i, col)];
        }
    }
}

/// Hermite coefficient matrix of `grad P`: row `i`, column `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    matrix: DMatrix<f64>,
}

impl GradientMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn gradient_coeff_matrix(p: &PolyCoeffs) -> GradientMatrix {
    let map = GradientMap::new(&p.basis());
    GradientMatrix { matrix: map.apply(p.coeffs()) }
}

/// `E ||grad P(x)||^2 = sum_alpha |alpha| c_alpha^2`.
pub fn gradient_energy(p: &PolyCoeffs) -> f64 {
    p.basis().indices().iter().zip(p.coeffs()).map(|(alpha, c)| alpha.degree() as f64 * c * c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate_multi_indices(2, 2).unwrap().len(), 6);
        assert_eq!(enumerate_multi_indices(1, 3).unwrap().len(), 4);
        let only = enumerate_multi_indices(3, 0).unwrap();
        assert_eq!(only, vec![MultiIndex::new(vec![0, 0, 0])]);
        assert!(enumerate_multi_indices(0, 2).is_err());
    }

    #[test]
    fn enumeration_is_graded_lexicographic() {
        let idx = enumerate_multi_indices(2, 2).unwrap();
        let got: Vec<Vec<u32>> = idx.iter().map(|a| a.entries().to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]);
        for d in 1..5 {
            for k in 0..6 {
                let idx = enumerate_multi_indices(d, k).unwrap();
                assert_eq!(idx.len(), basis_size(d, k));
                for w in idx.windows(2) {
                    let (a, b) = (&w[0], &w[1]);
                    assert!(a.degree() < b.degree() || (a.degree() == b.degree() && a.entries() < b.entries()));
                }
                assert_eq!(idx, enumerate_multi_indices(d, k).unwrap());
            }
        }
    }

    #[test]
    fn hermite_small_values() {
        assert_eq!(hermite_eval(2, 1.0), 0.0);
        assert_eq!(hermite_eval(1, 2.0), 2.0);
        assert!((hermite_eval(2, 0.0) + 1.0 / SQRT2).abs() < 1e-15);
        // He_4(0) = 3, 4! = 24.
        let expected = 3.0_f64.sqrt() / (2.0 * SQRT2);
        assert!((hermite_eval(4, 0.0) - expected).abs() < 1e-15);
        assert!((hermite_eval(4, 0.0) - 0.61237).abs() < 1e-5);
    }

    #[test]
    fn feature_map_examples() {
        let idx = enumerate_multi_indices(1, 2).unwrap();
        let phi = feature_map(&[0.0], &idx).unwrap();
        assert_eq!(phi[0], 1.0);
        assert_eq!(phi[1], 0.0);
        assert!((phi[2] + 1.0 / SQRT2).abs() < 1e-15);

        let one = [MultiIndex::new(vec![1, 1])];
        assert_eq!(feature_map(&[1.0, 1.0], &one).unwrap(), vec![1.0]);
        assert!(matches!(feature_map(&[1.0], &one), Err(Error::DimensionMismatch { expected: 2, found: 1 })));
    }

    #[test]
    fn poly_eval_examples() {
        let p = PolyCoeffs::basis_element(2, 1, &[1, 0]).unwrap();
        assert_eq!(poly_eval(&p, &[3.0, 5.0]).unwrap(), 3.0);
        let z = PolyCoeffs::zeros(3, 2).unwrap();
        assert_eq!(poly_eval(&z, &[0.3, -1.0, 7.0]).unwrap(), 0.0);
        let q = PolyCoeffs::basis_element(1, 2, &[2]).unwrap();
        assert!((poly_eval(&q, &[2.0]).unwrap() - 3.0 / SQRT2).abs() < 1e-14);
        assert!(poly_eval(&q, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn gradient_matrix_examples() {
        let p = PolyCoeffs::basis_element(2, 1, &[1, 0]).unwrap();
        let a = gradient_coeff_matrix(&p);
        assert_eq!((a.rows(), a.cols()), (2, 1));
        assert_eq!(a.matrix()[(0, 0)], 1.0);
        assert_eq!(a.matrix()[(1, 0)], 0.0);

        let p = PolyCoeffs::basis_element(2, 2, &[2, 0]).unwrap();
        let a = gradient_coeff_matrix(&p);
        let lower = HermiteBasis::new(2, 1).unwrap();
        let col = lower.position(&[1, 0]).unwrap();
        for i in 0..2 {
            for j in 0..a.cols() {
                let expected = if (i, j) == (0, col) { SQRT2 } else { 0.0 };
                assert!((a.matrix()[(i, j)] - expected).abs() < 1e-15);
            }
        }

        let z = gradient_coeff_matrix(&PolyCoeffs::zeros(3, 3).unwrap());
        assert!(z.matrix().iter().all(|&v| v == 0.0));

        let c0 = gradient_coeff_matrix(&PolyCoeffs::new(2, 0, vec![4.0]).unwrap());
        assert_eq!((c0.rows(), c0.cols()), (2, 1));
        assert!(c0.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_energy_examples() {
        assert_eq!(gradient_energy(&PolyCoeffs::basis_element(2, 1, &[1, 0]).unwrap()), 1.0);
        assert_eq!(gradient_energy(&PolyCoeffs::basis_element(1, 2, &[2]).unwrap()), 2.0);
    }

    #[test]
    fn adjoint_matches_transpose() {
        let basis = HermiteBasis::new(3, 3).unwrap();
        let map = GradientMap::new(&basis);
        let c: Vec<f64> = (0..basis.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let g = DMatrix::from_fn(map.rows(), map.cols(), |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let lhs: f64 = map.apply(&c).component_mul(&g).sum();
        let mut adj = vec![0.0; basis.len()];
        map.adjoint_add(&g, 1.0, &mut adj);
        let rhs: f64 = adj.iter().zip(&c).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = PolyCoeffs::new(2, 2, vec![0.1, -1e-300, 3.0, f64::MAX, -0.0, 1.0 / 3.0]).unwrap();
        let back = PolyCoeffs::from_text(&p.to_text()).unwrap();
        for (a, b) in p.coeffs().iter().zip(back.coeffs()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(PolyCoeffs::from_text("2 2 5\n1\n").is_err());
        assert!(PolyCoeffs::from_text("2 2 6\n1\n2\n").is_err());
    }
}
