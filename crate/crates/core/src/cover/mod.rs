//! Halfspace hypotheses, the finite cover of halfspaces with normals in a
//! subspace, and empirical risk minimization over that cover.
//!
//! Conventions:
//! - `sign(u) = +1` for `u >= 0`, else `-1`.
//! - The two constant classifiers are halfspaces with zero normal and
//!   threshold `+1` / `-1`.
//! - For a tuple `(h_1, ..., h_K)` the cell of `x` is
//!   `sum_j [h_j(x) = +1] * 2^j`; a truth table is indexed by cell.
//! - Every search breaks ties by enumeration order, first wins.

mod net;
mod search;

pub use net::{sphere_net, threshold_grid};
pub use search::{cell_boolean_erm, erm_halfspace, search_boolean, search_intersection, SignTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Subspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    normal: Vec<f64>,
    threshold: f64,
}

impl Halfspace {
    /// `sign(<normal, x> + threshold)` for a unit normal (checked to 1e-9,
    /// then renormalized).
    pub fn new(normal: Vec<f64>, threshold: f64) -> Result<Self> {
        let n = norm(&normal);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("normal has norm {n}, expected 1")));
        }
        Ok(Self { normal: normal.iter().map(|v| v / n).collect(), threshold })
    }

    /// The same classifier as `sign(<w, x> + t)` for any nonzero `w`.
    pub fn from_direction(w: &[f64], t: f64) -> Result<Self> {
        let n = norm(w);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("direction must be nonzero and finite".into()));
        }
        Self::new(w.iter().map(|v| v / n).collect(), t / n)
    }

    /// Constant classifier with value `sign` (+1 or -1).
    pub fn constant(dim: usize, sign: i8) -> Self {
        Self { normal: vec![0.0; dim], threshold: if sign >= 0 { 1.0 } else { -1.0 } }
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `Some(sign)` for the two constant classifiers.
    pub fn constant_sign(&self) -> Option<i8> {
        if self.normal.iter().all(|&v| v == 0.0) {
            Some(if self.threshold >= 0.0 { 1 } else { -1 })
        } else {
            None
        }
    }

    #[inline]
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.threshold
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> i8 {
        if self.margin(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    /// `w_1 ... w_d t`.
    pub fn to_line(&self) -> String {
        let mut parts: Vec<String> = self.normal.iter().map(|v| format!("{v:e}")).collect();
        parts.push(format!("{:e}", self.threshold));
        parts.join(" ")
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BooleanHypothesis {
    halfspaces: Vec<Halfspace>,
    truth_table: Vec<i8>,
}

impl BooleanHypothesis {
    pub fn new(halfspaces: Vec<Halfspace>, truth_table: Vec<i8>) -> Result<Self> {
        let k = halfspaces.len();
        if k == 0 || k > 16 {
            return Err(Error::InvalidArgument(format!("K = {k} outside 1..=16")));
        }
        if truth_table.len() != 1 << k {
            return Err(Error::DimensionMismatch { expected: 1 << k, found: truth_table.len() });
        }
        if truth_table.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidArgument("truth table entries must be +1/-1".into()));
        }
        let d = halfspaces[0].dim();
        if let Some(h) = halfspaces.iter().find(|h| h.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: h.dim() });
        }
        Ok(Self { halfspaces, truth_table })
    }

    /// Conjunction: `+1` exactly on the all-`+1` cell.
    pub fn intersection(halfspaces: Vec<Halfspace>) -> Result<Self> {
        let cells = 1usize << halfspaces.len();
        let table = (0..cells).map(|b| if b == cells - 1 { 1 } else { -1 }).collect();
        Self::new(halfspaces, table)
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn truth_table(&self) -> &[i8] {
        &self.truth_table
    }

    pub fn k(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn dim(&self) -> usize {
        self.halfspaces[0].dim()
    }

    pub fn cell(&self, x: &[f64]) -> usize {
        self.halfspaces.iter().enumerate().map(|(j, h)| usize::from(h.eval(x) > 0) << j).sum()
    }

    pub fn eval(&self, x: &[f64]) -> i8 {
        self.truth_table[self.cell(x)]
    }

    /// Character `b` is `1` when the table maps cell `b` to `+1`.
    pub fn truth_table_bits(&self) -> String {
        self.truth_table.iter().map(|&v| if v > 0 { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Hypothesis {
    Halfspace(Halfspace),
    Boolean(BooleanHypothesis),
}

impl Hypothesis {
    pub fn dim(&self) -> usize {
        match self {
            Hypothesis::Halfspace(h) => h.dim(),
            Hypothesis::Boolean(b) => b.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> i8 {
        match self {
            Hypothesis::Halfspace(h) => h.eval(x),
            Hypothesis::Boolean(b) => b.eval(x),
        }
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        match self {
            Hypothesis::Halfspace(h) => std::slice::from_ref(h),
            Hypothesis::Boolean(b) => b.halfspaces(),
        }
    }

    /// Normal and threshold of the first non-constant halfspace, or
    /// `(e_1, 0)` when every halfspace is constant.
    pub fn slab_direction(&self) -> (Vec<f64>, f64) {
        match self.halfspaces().iter().find(|h| h.constant_sign().is_none()) {
            Some(h) => (h.normal().to_vec(), h.threshold()),
            None => {
                let mut e1 = vec![0.0; self.dim()];
                e1[0] = 1.0;
                (e1, 0.0)
            }
        }
    }
}

/// Limits on cover construction.
#[derive(Debug, Clone, Copy)]
pub struct CoverOptions {
    /// Maximum number of hypotheses in the cover.
    pub max_cover: usize,
    /// Maximum number of candidate directions fed to the net construction.
    pub max_candidates: usize,
    pub seed: u64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self { max_cover: 200_000, max_candidates: 1_000_000, seed: 0 }
    }
}

/// Finite set of halfspaces with normals in a subspace, plus both constants.
///
/// Layout: constant `+1`, constant `-1`, then for each net direction (in net
/// order) every threshold of the grid (ascending).
#[derive(Debug, Clone)]
pub struct Cover {
    hypotheses: Vec<Halfspace>,
    net_accuracy: f64,
    subspace: Subspace,
    directions: usize,
    thresholds: Vec<f64>,
}

impl Cover {
    /// Builds a cover from explicit hypotheses (tests and custom searches).
    pub fn from_hypotheses(hypotheses: Vec<Halfspace>, net_accuracy: f64, subspace: Subspace) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::InvalidArgument("cover must be non-empty".into()));
        }
        Ok(Self { hypotheses, net_accuracy, subspace, directions: 0, thresholds: Vec::new() })
    }

    pub fn hypotheses(&self) -> &[Halfspace] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn net_accuracy(&self) -> f64 {
        self.net_accuracy
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// Number of unit directions in the net.
    pub fn directions(&self) -> usize {
        self.directions
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }
}

/// Cover of the halfspaces `sign(<v, x> + t)` with `v` a unit vector in `V`.
///
/// Directions: a greedy farthest-point `(eps/2)`-net of the unit sphere of
/// `V`, selected from `ceil(10 (3/eps)^r)` quasi-random candidates.
/// Thresholds: uniform grid on `[-T, T]` with step at most `eps/2`, where the
/// standard normal tail beyond `T` is `eps/4`. The cover size is at most
/// `2 + 10 (3/eps)^r * |grid|`.
pub fn build_cover(v: &Subspace, eps_cover: f64, opts: &CoverOptions) -> Result<Cover> {
    if !(eps_cover > 0.0 && eps_cover < 0.5) {
        return Err(Error::InvalidArgument(format!("cover accuracy {eps_cover} outside (0, 1/2)")));
    }
    let d = v.ambient_dim();
    let r = v.rank();
    let mut hypotheses = vec![Halfspace::constant(d, 1), Halfspace::constant(d, -1)];
    if r == 0 {
        return Ok(Cover {
            hypotheses,
            net_accuracy: eps_cover,
            subspace: v.clone(),
            directions: 0,
            thresholds: Vec::new(),
        });
    }
    let grid = threshold_grid(eps_cover);
    let max_directions = opts.max_cover.saturating_sub(2) / grid.len();
    let net = sphere_net(r, eps_cover, opts.seed, opts.max_candidates, max_directions)?;
    let needed = 2 + net.len() as u128 * grid.len() as u128;
    if needed > opts.max_cover as u128 {
        return Err(Error::Resource { what: "cover size", needed, limit: opts.max_cover as u128 });
    }
    hypotheses.reserve(net.len() * grid.len());
    for u in &net {
        // map the net point into R^d through the orthonormal basis
        let mut w = vec![0.0; d];
        for (j, &uj) in u.iter().enumerate() {
            for (wi, bi) in w.iter_mut().zip(v.column(j)) {
                *wi += uj * bi;
            }
        }
        let n = norm(&w);
        let w: Vec<f64> = w.iter().map(|a| a / n).collect();
        for &t in &grid {
            hypotheses.push(Halfspace { normal: w.clone(), threshold: t });
        }
    }
    Ok(Cover { hypotheses, net_accuracy: eps_cover, subspace: v.clone(), directions: net.len(), thresholds: grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn halfspace_basics() {
        let h = Halfspace::new(vec![0.6, 0.8], -0.5).unwrap();
        assert_eq!(h.eval(&[1.0, 0.0]), 1);
        assert_eq!(h.eval(&[0.0, 0.0]), -1);
        assert!(Halfspace::new(vec![1.0, 1.0], 0.0).is_err());
        let g = Halfspace::from_direction(&[3.0, 4.0], 5.0).unwrap();
        assert!((g.threshold() - 1.0).abs() < 1e-15);
        let c = Halfspace::constant(3, -1);
        assert_eq!(c.constant_sign(), Some(-1));
        assert_eq!(c.eval(&[100.0, -3.0, 2.0]), -1);
        assert_eq!(Halfspace::constant(3, 1).eval(&[0.0; 3]), 1);
        assert_eq!(h.constant_sign(), None);
    }

    #[test]
    fn boolean_cells_and_tables() {
        let h1 = Halfspace::new(vec![1.0, 0.0], 0.0).unwrap();
        let h2 = Halfspace::new(vec![0.0, 1.0], 0.0).unwrap();
        // XOR of the two signs: -1 where they agree
        let b = BooleanHypothesis::new(vec![h1.clone(), h2.clone()], vec![-1, 1, 1, -1]).unwrap();
        assert_eq!(b.cell(&[1.0, -1.0]), 1);
        assert_eq!(b.cell(&[-1.0, 1.0]), 2);
        assert_eq!(b.eval(&[1.0, 1.0]), -1);
        assert_eq!(b.eval(&[1.0, -1.0]), 1);
        assert_eq!(b.truth_table_bits(), "0110");
        let i = BooleanHypothesis::intersection(vec![h1, h2]).unwrap();
        assert_eq!(i.truth_table(), &[-1, -1, -1, 1]);
        assert!(BooleanHypothesis::new(vec![], vec![1]).is_err());
        assert!(BooleanHypothesis::new(vec![Halfspace::constant(2, 1)], vec![1, 1, 1]).is_err());
    }

    #[test]
    fn empty_subspace_gives_constants() {
        let c = build_cover(&Subspace::empty(4), 0.2, &CoverOptions::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.hypotheses()[0].constant_sign(), Some(1));
        assert_eq!(c.hypotheses()[1].constant_sign(), Some(-1));
    }

    #[test]
    fn one_dimensional_cover() {
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 0.6, 0.8]);
        let v = Subspace::new(b, vec![1.0]).unwrap();
        let c = build_cover(&v, 0.25, &CoverOptions::default()).unwrap();
        let grid = threshold_grid(0.25);
        assert_eq!(c.directions(), 2);
        assert_eq!(c.len(), 2 * grid.len() + 2);
        let mut normals: Vec<f64> = c.hypotheses()[2..].iter().map(|h| h.normal()[1]).collect();
        normals.dedup();
        assert_eq!(normals.len(), 2);
        assert!((normals[0] + normals[1]).abs() < 1e-12);
        assert!((normals[0].abs() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn normals_stay_in_subspace_and_size_bound_holds() {
        let b = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.6, 0.8]);
        let v = Subspace::new(b, vec![1.0, 1.0]).unwrap();
        let eps = 0.15;
        let c = build_cover(&v, eps, &CoverOptions::default()).unwrap();
        for h in &c.hypotheses()[2..] {
            let p = v.project(h.normal());
            let resid: f64 = p.iter().zip(h.normal()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(resid < 1e-10);
            assert!((norm(h.normal()) - 1.0).abs() < 1e-12);
        }
        let bound = 2.0 + 10.0 * (3.0 / eps).powi(2) * c.thresholds().len() as f64;
        assert!((c.len() as f64) <= bound);
    }

    #[test]
    fn cover_budget_is_enforced() {
        let v = Subspace::full(3);
        let opts = CoverOptions { max_cover: 500, ..Default::default() };
        assert!(matches!(build_cover(&v, 0.1, &opts), Err(Error::Resource { .. })));
        let opts = CoverOptions { max_candidates: 10, ..Default::default() };
        assert!(matches!(build_cover(&v, 0.1, &opts), Err(Error::Resource { .. })));
        assert!(build_cover(&v, 0.5, &CoverOptions::default()).is_err());
    }
}
