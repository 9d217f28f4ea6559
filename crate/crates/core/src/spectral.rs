//! Influence matrix `M(P) = E[grad P grad P^T]`, its square-root trace, and
//! the high-eigenvalue subspace used for the hypothesis search.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{gradient_coeff_matrix, PolyCoeffs};

/// Eigenvalues down to this (negative) level are rounding noise and clipped
/// to zero; anything lower means the input was not PSD.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Symmetric PSD `d x d` matrix `A(P) A(P)^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    matrix: DMatrix<f64>,
}

impl InfluenceMatrix {
    /// Wraps an arbitrary symmetric matrix; symmetry is enforced by averaging
    /// with the transpose.
    pub fn from_symmetric(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("influence matrix"));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { matrix: sym })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenpairs sorted by descending eigenvalue, negatives clipped to zero.
    /// Fails if any eigenvalue is below `-PSD_TOLERANCE`.
    pub fn eigen(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let mut values = Vec::with_capacity(order.len());
        let mut vectors = DMatrix::zeros(self.dim(), self.dim());
        for (col, &i) in order.iter().enumerate() {
            let lambda = eig.eigenvalues[i];
            if lambda < -PSD_TOLERANCE {
                return Err(Error::Invariant(format!("influence matrix has eigenvalue {lambda:e} < 0")));
            }
            values.push(lambda.max(0.0));
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        Ok((values, vectors))
    }
}

/// Exact `M(P)` from the Hermite coefficients; no sampling.
pub fn influence_matrix(p: &PolyCoeffs) -> InfluenceMatrix {
    let a = gradient_coeff_matrix(p);
    let m = a.matrix() * a.matrix().transpose();
    InfluenceMatrix::from_symmetric(m).expect("A A^T is square and finite for finite coefficients")
}

/// `tr(M^{1/2}) = sum_i sqrt(lambda_i)`.
///
/// Eigenvalues below `8 d eps_mach lambda_max` are at the eigensolver's
/// rounding level and count as zero; otherwise each exact zero of a
/// rank-deficient `M` would add about `1e-8 sqrt(lambda_max)`.
pub fn trace_sqrt(m: &InfluenceMatrix) -> Result<f64> {
    let (values, _) = m.eigen()?;
    let floor = 8.0 * m.dim() as f64 * f64::EPSILON * values.first().copied().unwrap_or(0.0);
    Ok(values.iter().filter(|&&v| v > floor).map(|v| v.sqrt()).sum())
}

/// Orthonormal basis (as columns) of a subspace of `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    dim: usize,
    /// Column-major `dim x rank` basis.
    basis: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl Subspace {
    /// `basis` must have orthonormal columns (checked to 1e-10).
    pub fn new(basis: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let r = basis.ncols();
        if eigenvalues.len() != r {
            return Err(Error::DimensionMismatch { expected: r, found: eigenvalues.len() });
        }
        let gram = basis.transpose() * &basis;
        let dev = (gram - DMatrix::<f64>::identity(r, r)).abs().max();
        if r > 0 && dev > 1e-10 {
            return Err(Error::InvalidArgument(format!("basis not orthonormal (deviation {dev:e})")));
        }
        Ok(Self { dim: basis.nrows(), basis: basis.as_slice().to_vec(), eigenvalues })
    }

    /// Orthonormalizes the given vectors (Gram-Schmidt, dropping vectors whose
    /// residual norm is below `1e-12`). Eigenvalues are left at zero.
    pub fn span_of(dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            let mut u = DVector::from_column_slice(v);
            for _ in 0..2 {
                for c in &cols {
                    let proj = c.dot(&u);
                    u -= c * proj;
                }
            }
            let n = u.norm();
            if n > 1e-12 {
                cols.push(u / n);
            }
        }
        let r = cols.len();
        let basis = if r == 0 { DMatrix::zeros(dim, 0) } else { DMatrix::from_columns(&cols) };
        Self::new(basis, vec![0.0; r])
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, basis: Vec::new(), eigenvalues: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), vec![0.0; dim]).expect("identity is orthonormal")
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.dim, self.rank(), &self.basis)
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.basis[j * self.dim..(j + 1) * self.dim]
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for j in 0..self.rank() {
            let col = self.column(j);
            let c: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            for (o, b) in out.iter_mut().zip(col) {
                *o += c * b;
            }
        }
        out
    }

    /// Text form: `r` on the first line, then the basis column-major, one
    /// float per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.rank());
        for v in &self.basis {
            s.push_str(&format!("{v:e}\n"));
        }
        s
    }
}

/// Eigenvectors of `M` with eigenvalue at least `eta` (ties included), sorted
/// by descending eigenvalue. May be empty.
pub fn top_subspace(m: &InfluenceMatrix, eta: f64) -> Result<Subspace> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    let (values, vectors) = m.eigen()?;
    let r = values.iter().take_while(|&&v| v >= eta).count();
    let basis = vectors.columns(0, r).into_owned();
    Subspace::new(basis, values[..r].to_vec())
}

/// Whether `rank(V) <= tr(M^{1/2}) / sqrt(eta)`; returns the bound too.
pub fn dimension_bound(m: &InfluenceMatrix, v: &Subspace, eta: f64) -> Result<(bool, f64)> {
    let bound = trace_sqrt(m)? / eta.sqrt();
    Ok((v.rank() as f64 <= bound, bound))
}
