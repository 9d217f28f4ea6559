//! Run reports.
//!
//! JSON schema (stable; fields are only ever added):
//!
//! ```text
//! {
//!   "config":     { task, dim, epsilon, delta, degree, formula_degree,
//!                   degree_capped, eta, mu, nu, c0, c_nu, c_cover,
//!                   eps_cover, opt_tolerance, ball_radius, trunc_radius,
//!                   n_train, n_valid, n_test, seed, max_cover, max_tuples,
//!                   max_iterations, source, noise, calibration },
//!   "solver":     null | { objective_value, iterations, gap_bound,
//!                   smoothing, truncated, coeff_norm, trace_len, note },
//!   "subspace":   null | { rank, eigenvalues, spectrum, trace_sqrt },
//!   "cover":      null | { size, directions, thresholds, accuracy },
//!   "hypothesis": null | { kind, halfspaces: [{normal, threshold}],
//!                   truth_table },
//!   "errors":     { train, validation, test },
//!   "checks":     { dim_bound, correlation_residual, guarantee, notes },
//!   "timings":    { <stage>: seconds, ..., total },
//!   "failed_stage": null | string
//! }
//! ```

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cover::Hypothesis;

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub solver: Option<SolverSummary>,
    pub subspace: Option<SubspaceSummary>,
    pub cover: Option<CoverSummary>,
    pub hypothesis: Option<HypothesisSummary>,
    pub errors: Errors,
    pub checks: Checks,
    pub timings: Timings,
    pub failed_stage: Option<String>,
}

impl RunReport {
    /// Whether the stated guarantee check failed (false when not applicable).
    pub fn guarantee_failed(&self) -> bool {
        self.checks.guarantee.as_ref().is_some_and(|g| !g.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ConfigEcho {
    pub task: String,
    #[serde(rename = "K")]
    pub k_tuple: usize,
    pub dim: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub degree: usize,
    pub formula_degree: usize,
    pub degree_capped: bool,
    pub eta: f64,
    pub mu: f64,
    pub nu: f64,
    pub c0: f64,
    pub c_nu: f64,
    pub c_cover: f64,
    pub eps_cover: f64,
    pub opt_tolerance: f64,
    pub ball_radius: f64,
    pub trunc_radius: f64,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub seed: u64,
    pub max_cover: usize,
    pub max_tuples: u64,
    pub max_iterations: usize,
    pub source: String,
    pub noise: Option<String>,
    /// Which settings are desk-scale calibration values rather than derived.
    pub calibration: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub objective_value: f64,
    pub iterations: usize,
    pub gap_bound: f64,
    pub smoothing: f64,
    pub truncated: usize,
    pub coeff_norm: f64,
    pub trace_len: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubspaceSummary {
    pub rank: usize,
    /// Eigenvalues kept (at least `eta`).
    pub eigenvalues: Vec<f64>,
    /// Full spectrum of the influence matrix, descending.
    pub spectrum: Vec<f64>,
    pub trace_sqrt: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverSummary {
    pub size: usize,
    pub directions: usize,
    pub thresholds: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfspaceSummary {
    pub normal: Vec<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisSummary {
    /// `halfspace`, `boolean`, `intersection` or `ptf`.
    pub kind: String,
    pub halfspaces: Vec<HalfspaceSummary>,
    pub truth_table: Option<String>,
}

impl HypothesisSummary {
    pub fn of(h: &Hypothesis, kind: &str) -> Self {
        let halfspaces = h
            .halfspaces()
            .iter()
            .map(|g| HalfspaceSummary { normal: g.normal().to_vec(), threshold: g.threshold() })
            .collect();
        let truth_table = match h {
            Hypothesis::Boolean(b) => Some(b.truth_table_bits()),
            Hypothesis::Halfspace(_) => None,
        };
        Self { kind: kind.to_string(), halfspaces, truth_table }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Errors {
    pub train: Option<f64>,
    pub validation: Option<f64>,
    pub test: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Checks {
    pub dim_bound: Option<DimBound>,
    pub correlation_residual: Option<Residual>,
    pub guarantee: Option<Guarantee>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimBound {
    pub rank: usize,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub value: f64,
    pub std_err: f64,
    pub points: usize,
    pub n_mc: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Guarantee {
    pub test_error: f64,
    pub opt_upper_bound: f64,
    pub epsilon: f64,
    pub passed: bool,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    #[serde(flatten)]
    pub stages: BTreeMap<String, f64>,
    pub total: f64,
}
