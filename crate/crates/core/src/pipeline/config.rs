//! Learner configuration and the default parameter formulas.

use serde::Serialize;

use crate::cover::Hypothesis;
use crate::data::{LabeledDataset, Noise};
use crate::error::{Error, Result};
use crate::regression::RegressionProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "K", rename_all = "lowercase")]
pub enum Task {
    Halfspace,
    Boolean(usize),
    Intersection(usize),
}

impl Task {
    pub fn k(&self) -> usize {
        match *self {
            Task::Halfspace => 1,
            Task::Boolean(k) | Task::Intersection(k) => k,
        }
    }
}

/// Where samples come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// Fresh Gaussian samples labeled by a planted concept; train, validation
    /// and test use independent seed domains.
    Planted { concept: Hypothesis, noise: Noise },
    /// A fixed dataset split in row order into train, validation and test.
    Dataset(LabeledDataset),
}

/// Settings for one learning run. `None` fields take the default formulas
/// (see [`LearnerConfig::resolve`]).
#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub task: Task,
    pub epsilon: f64,
    pub delta: f64,
    pub degree: Option<usize>,
    pub eta: Option<f64>,
    pub mu: f64,
    pub nu: Option<f64>,
    pub c0: f64,
    pub c_nu: f64,
    /// Cover accuracy is `c_cover * epsilon / K`.
    pub c_cover: f64,
    pub max_degree: usize,
    pub n_train: usize,
    pub n_valid: Option<usize>,
    pub n_test: usize,
    pub seed: u64,
    pub max_cover: usize,
    pub max_tuples: u64,
    pub max_iterations: usize,
    pub opt_tolerance: Option<f64>,
    /// Accuracy used in the truncation radius; defaults to `epsilon`.
    pub eps_target: Option<f64>,
    /// Largest allowed number of entries in the regression design matrix.
    pub max_design_entries: usize,
    /// Monte-Carlo draws per point for Boolean averaging in the residual.
    pub residual_mc: usize,
    /// Points used for the Boolean correlation residual.
    pub residual_points: usize,
}

impl LearnerConfig {
    pub const DEFAULT_N_TRAIN: usize = 20_000;
    pub const DEFAULT_N_TEST: usize = 100_000;

    pub fn new(task: Task, epsilon: f64) -> Self {
        Self {
            task,
            epsilon,
            delta: 0.1,
            degree: None,
            eta: None,
            mu: 1.0 / 128.0,
            nu: None,
            c0: 1.0,
            c_nu: 0.125,
            c_cover: 1.0,
            max_degree: 8,
            n_train: Self::DEFAULT_N_TRAIN,
            n_valid: None,
            n_test: Self::DEFAULT_N_TEST,
            seed: 0,
            max_cover: 200_000,
            max_tuples: 200_000_000,
            max_iterations: RegressionProblem::DEFAULT_MAX_ITERATIONS,
            opt_tolerance: None,
            eps_target: None,
            max_design_entries: 60_000_000,
            residual_mc: 200,
            residual_points: 5000,
        }
    }

    /// Fills in defaults and validates ranges.
    ///
    /// With `K = task.k()` and `L = ln(1/epsilon)`:
    /// - halfspace: `eta = eps^2 / C0`, `nu = c_nu eps^1.5`, `k = C0 / eps^2`;
    /// - Boolean: `eta = eps^2 / (C0 K)`, `nu = c_nu eps^1.5 / K^1.5`,
    ///   `k = C0 K^2 L / eps^2`;
    /// - intersection (`K >= 2`): `eta = eps^2 / (C0 K)`,
    ///   `nu = c_nu eps^1.5 / sqrt(K ln K)`, `k = C0 ln K L / eps^2`;
    ///   `K = 1` uses the halfspace formulas.
    ///
    /// `k` is rounded up and clamped to `max_degree`; the solver tolerance
    /// defaults to `eps^3 / 100`.
    pub fn resolve(&self) -> Result<Resolved> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidArgument(format!("epsilon = {eps} outside (0, 1/2)")));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidArgument(format!("delta = {} outside (0, 1/2)", self.delta)));
        }
        if !(self.c0 > 0.0 && self.c_nu >= 0.0 && self.c_cover > 0.0) {
            return Err(Error::InvalidArgument("c0 and c_cover must be positive, c_nu non-negative".into()));
        }
        let k_tuple = self.task.k();
        if k_tuple == 0 || k_tuple > 16 {
            return Err(Error::InvalidArgument(format!("K = {k_tuple} outside 1..=16")));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidArgument("sample sizes must be positive".into()));
        }
        let kf = k_tuple as f64;
        let log_inv = (1.0 / eps).ln();
        let (eta, nu, degree_formula) = match self.task {
            Task::Halfspace | Task::Intersection(1) => {
                (eps * eps / self.c0, self.c_nu * eps.powf(1.5), self.c0 / (eps * eps))
            }
            Task::Boolean(_) => (
                eps * eps / (self.c0 * kf),
                self.c_nu * eps.powf(1.5) / kf.powf(1.5),
                self.c0 * kf * kf * log_inv / (eps * eps),
            ),
            Task::Intersection(_) => (
                eps * eps / (self.c0 * kf),
                self.c_nu * eps.powf(1.5) / (kf * kf.ln()).sqrt(),
                self.c0 * kf.ln() * log_inv / (eps * eps),
            ),
        };
        let formula_degree = degree_formula.ceil().max(1.0) as usize;
        let (degree, degree_capped) = match self.degree {
            Some(k) => (k, false),
            None => (formula_degree.min(self.max_degree), formula_degree > self.max_degree),
        };
        let eta = self.eta.unwrap_or(eta);
        let nu = self.nu.unwrap_or(nu);
        if !(eta > 0.0) || !(nu >= 0.0) || !(self.mu > 0.0) {
            return Err(Error::InvalidArgument("eta and mu must be positive, nu non-negative".into()));
        }
        let eps_cover = self.c_cover * eps / kf;
        if eps_cover >= 0.5 {
            return Err(Error::InvalidArgument(format!("cover accuracy {eps_cover} must be below 1/2")));
        }
        Ok(Resolved {
            degree,
            formula_degree,
            degree_capped,
            eta,
            nu,
            mu: self.mu,
            opt_tolerance: self.opt_tolerance.unwrap_or(eps.powi(3) / 100.0),
            eps_target: self.eps_target.unwrap_or(eps),
            eps_cover,
        })
    }

    /// Validation size for a cover of `cover_size` hypotheses:
    /// `ceil(8 (ln|H| + ln(1/delta)) / eps^2)` for halfspaces,
    /// `ceil(8 (K ln|H| + 2^K + ln(1/delta)) / eps^2)` for Boolean functions,
    /// and the same without `2^K` for intersections.
    pub fn validation_size(&self, cover_size: usize) -> usize {
        if let Some(n) = self.n_valid {
            return n;
        }
        let lh = (cover_size.max(1) as f64).ln();
        let ld = (1.0 / self.delta).ln();
        let kf = self.task.k() as f64;
        let inner = match self.task {
            Task::Halfspace => lh + ld,
            Task::Boolean(k) => kf * lh + 2f64.powi(k as i32) + ld,
            Task::Intersection(_) => kf * lh + ld,
        };
        (8.0 * inner / (self.epsilon * self.epsilon)).ceil() as usize
    }
}

/// Parameters after defaults are applied.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Resolved {
    pub degree: usize,
    /// Degree given by the formula before clamping.
    pub formula_degree: usize,
    pub degree_capped: bool,
    pub eta: f64,
    pub nu: f64,
    pub mu: f64,
    pub opt_tolerance: f64,
    pub eps_target: f64,
    pub eps_cover: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfspace_defaults() {
        let r = LearnerConfig::new(Task::Halfspace, 0.2).resolve().unwrap();
        assert!((r.eta - 0.04).abs() < 1e-15);
        assert!((r.nu - 0.125 * 0.2f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(r.formula_degree, 25);
        assert_eq!(r.degree, 8);
        assert!(r.degree_capped);
        assert!((r.opt_tolerance - 8e-5).abs() < 1e-18);
        assert!((r.mu - 1.0 / 128.0).abs() < 1e-18);
    }

    #[test]
    fn boolean_and_intersection_defaults() {
        let b = LearnerConfig::new(Task::Boolean(2), 0.2).resolve().unwrap();
        assert!((b.eta - 0.02).abs() < 1e-15);
        assert!((b.nu - 0.125 * 0.2f64.powf(1.5) / 2f64.powf(1.5)).abs() < 1e-15);
        assert!((b.eps_cover - 0.1).abs() < 1e-15);
        let i = LearnerConfig::new(Task::Intersection(2), 0.2).resolve().unwrap();
        assert!((i.nu - 0.125 * 0.2f64.powf(1.5) / (2.0 * 2f64.ln()).sqrt()).abs() < 1e-15);
        let one = LearnerConfig::new(Task::Intersection(1), 0.2).resolve().unwrap();
        let h = LearnerConfig::new(Task::Halfspace, 0.2).resolve().unwrap();
        assert_eq!(one.nu, h.nu);
    }

    #[test]
    fn validation_sizes() {
        let c = LearnerConfig::new(Task::Halfspace, 0.1);
        let n = c.validation_size(100);
        assert_eq!(n, (800.0 * (100f64.ln() + 10f64.ln())).ceil() as usize);
        let b = LearnerConfig::new(Task::Boolean(2), 0.1);
        assert_eq!(b.validation_size(100), (800.0 * (2.0 * 100f64.ln() + 4.0 + 10f64.ln())).ceil() as usize);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(LearnerConfig::new(Task::Halfspace, 0.6).resolve().is_err());
        assert!(LearnerConfig::new(Task::Boolean(0), 0.1).resolve().is_err());
        let mut c = LearnerConfig::new(Task::Halfspace, 0.1);
        c.delta = 0.0;
        assert!(c.resolve().is_err());
    }
}
