//! End-to-end learners and baselines.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::config::{DataSource, LearnerConfig, Resolved, Task};
use super::report::*;
use crate::cover::{build_cover, erm_halfspace, search_boolean, search_intersection, Cover, CoverOptions, Hypothesis};
use crate::data::{sample_dataset, LabeledDataset, Noise, PlantedModel};
use crate::error::{Error, Result};
use crate::hermite::{basis_size, poly_eval, HermiteBasis, PolyCoeffs};
use crate::oracle::correlation_residual;
use crate::regression::{solve, RegressionProblem};
use crate::rng::derive_seed;
use crate::spectral::{dimension_bound, influence_matrix, top_subspace, trace_sqrt, Subspace};

const DOMAIN_TRAIN: u64 = 1;
const DOMAIN_VALID: u64 = 2;
const DOMAIN_TEST: u64 = 3;
const DOMAIN_COVER: u64 = 4;
const DOMAIN_RESIDUAL: u64 = 5;

/// Largest dimension accepted by [`brute_force_proper`].
pub const BRUTE_FORCE_MAX_DIM: usize = 3;
const L2_RIDGE: f64 = 1e-8;

/// A stage failed. `report` holds everything computed before the failure,
/// including the best hypothesis so far when a search ran out of budget.
#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
    pub report: Box<RunReport>,
}

pub type RunResult = std::result::Result<RunReport, StageError>;

/// CLI exit code for an error: 3 for exhausted budgets, 4 for bad input,
/// 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Resource { .. } | Error::TupleBudget { .. } | Error::NotCertified { .. } => 3,
        Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFinite(_)
        | Error::EmptyDataset
        | Error::Parse { .. }
        | Error::Io(_) => 4,
        Error::Invariant(_) => 1,
    }
}

/// Train, validation and test samples.
struct Data<'a> {
    source: &'a DataSource,
    dim: usize,
    train: LabeledDataset,
    valid: Option<LabeledDataset>,
    test: Option<LabeledDataset>,
}

impl<'a> Data<'a> {
    /// A fixed dataset is split in row order: the first half trains, the next
    /// quarter validates, the rest tests.
    fn new(cfg: &LearnerConfig, source: &'a DataSource, dim: usize) -> Result<Self> {
        match source {
            DataSource::Planted { concept, noise } => {
                if concept.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: concept.dim() });
                }
                let model = PlantedModel::new(concept.clone(), *noise, derive_seed(cfg.seed, DOMAIN_TRAIN));
                Ok(Self { source, dim, train: sample_dataset(&model, cfg.n_train, dim)?, valid: None, test: None })
            }
            DataSource::Dataset(ds) => {
                let n = ds.len();
                if n < 4 {
                    return Err(Error::InvalidArgument(format!("dataset has {n} rows, need at least 4")));
                }
                let a = n / 2;
                let b = a + n / 4;
                Ok(Self {
                    source,
                    dim: ds.dim(),
                    train: ds.slice(0, a),
                    valid: Some(ds.slice(a, b)),
                    test: Some(ds.slice(b, n)),
                })
            }
        }
    }

    fn planted(&self, cfg: &LearnerConfig, domain: u64, n: usize) -> Result<LabeledDataset> {
        match self.source {
            DataSource::Planted { concept, noise } => {
                let model = PlantedModel::new(concept.clone(), *noise, derive_seed(cfg.seed, domain));
                sample_dataset(&model, n, self.dim)
            }
            DataSource::Dataset(_) => unreachable!("fixed datasets carry their splits"),
        }
    }

    fn validation(&mut self, cfg: &LearnerConfig, n: usize) -> Result<&LabeledDataset> {
        if self.valid.is_none() {
            self.valid = Some(self.planted(cfg, DOMAIN_VALID, n.max(1))?);
        }
        Ok(self.valid.as_ref().expect("set above"))
    }

    fn test(&mut self, cfg: &LearnerConfig) -> Result<&LabeledDataset> {
        if self.test.is_none() {
            self.test = Some(self.planted(cfg, DOMAIN_TEST, cfg.n_test)?);
        }
        Ok(self.test.as_ref().expect("set above"))
    }

    fn concept(&self) -> Option<(&Hypothesis, Noise)> {
        match self.source {
            DataSource::Planted { concept, noise } => Some((concept, *noise)),
            DataSource::Dataset(_) => None,
        }
    }
}

/// Report under construction plus stage timing.
struct Run {
    report: RunReport,
    start: Instant,
}

impl Run {
    fn new() -> Self {
        Self { report: RunReport::default(), start: Instant::now() }
    }

    fn stage<T>(
        &mut self,
        name: &'static str,
        f: impl FnOnce(&mut RunReport) -> Result<T>,
    ) -> std::result::Result<T, StageError> {
        let t = Instant::now();
        let out = f(&mut self.report);
        *self.report.timings.stages.entry(name.to_string()).or_insert(0.0) += t.elapsed().as_secs_f64();
        out.map_err(|e| self.fail(name, e))
    }

    fn fail(&mut self, stage: &'static str, source: Error) -> StageError {
        self.report.failed_stage = Some(stage.to_string());
        self.report.timings.total = self.start.elapsed().as_secs_f64();
        StageError { stage, source, report: Box::new(self.report.clone()) }
    }

    fn finish(mut self) -> RunReport {
        self.report.timings.total = self.start.elapsed().as_secs_f64();
        self.report
    }
}

fn dim_of(source: &DataSource, dim: usize) -> usize {
    match source {
        DataSource::Planted { .. } => dim,
        DataSource::Dataset(ds) => ds.dim(),
    }
}

fn echo(cfg: &LearnerConfig, r: &Resolved, dim: usize, source: &DataSource) -> ConfigEcho {
    let (task, k) = match cfg.task {
        Task::Halfspace => ("halfspace", 1),
        Task::Boolean(k) => ("boolean", k),
        Task::Intersection(k) => ("intersection", k),
    };
    let ball_radius = (std::f64::consts::LN_2 / r.mu).sqrt();
    let (source_name, noise) = match source {
        DataSource::Planted { noise, .. } => ("planted", Some(format!("{noise:?}"))),
        DataSource::Dataset(_) => ("dataset", None),
    };
    let mut calibration = vec!["c0".to_string(), "c_nu".to_string(), "c_cover".to_string()];
    if cfg.n_valid.is_none() {
        calibration.push("n_valid (formula with multiplier 8)".into());
    }
    calibration.push("n_train".into());
    ConfigEcho {
        task: task.into(),
        k_tuple: k,
        dim,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        degree: r.degree,
        formula_degree: r.formula_degree,
        degree_capped: r.degree_capped,
        eta: r.eta,
        mu: r.mu,
        nu: r.nu,
        c0: cfg.c0,
        c_nu: cfg.c_nu,
        c_cover: cfg.c_cover,
        eps_cover: r.eps_cover,
        opt_tolerance: r.opt_tolerance,
        ball_radius,
        trunc_radius: 8.0 * ball_radius * basis_size(dim, r.degree) as f64 / r.eps_target,
        n_train: cfg.n_train,
        n_valid: 0,
        n_test: cfg.n_test,
        seed: cfg.seed,
        max_cover: cfg.max_cover,
        max_tuples: cfg.max_tuples,
        max_iterations: cfg.max_iterations,
        source: source_name.into(),
        noise,
        calibration,
    }
}

/// Regression, spectral reduction and cover: the shared front half.
fn reduce(
    cfg: &LearnerConfig,
    r: &Resolved,
    run: &mut Run,
    data: &Data,
) -> std::result::Result<(Subspace, Cover), StageError> {
    let dim = data.dim;
    let solved = run.stage("solve", |report| {
        let entries = data.train.len() as u128 * basis_size(dim, r.degree) as u128;
        if entries > cfg.max_design_entries as u128 {
            return Err(Error::Resource {
                what: "design matrix entries",
                needed: entries,
                limit: cfg.max_design_entries as u128,
            });
        }
        let prob = RegressionProblem::new(data.train.clone(), r.degree, r.mu, r.nu, r.eps_target, r.opt_tolerance)?
            .with_max_iterations(cfg.max_iterations);
        let result = solve(&prob)?;
        report.solver = Some(SolverSummary {
            objective_value: result.objective_value,
            iterations: result.iterations,
            gap_bound: result.gap_bound,
            smoothing: result.smoothing,
            truncated: result.truncated,
            coeff_norm: result.coeffs.norm_sq().sqrt(),
            trace_len: result.certificate.len(),
            note: None,
        });
        Ok(result)
    })?;

    let v = run.stage("spectral", |report| {
        let m = influence_matrix(&solved.coeffs);
        let (spectrum, _) = m.eigen()?;
        let v = top_subspace(&m, r.eta)?;
        let (holds, bound) = dimension_bound(&m, &v, r.eta)?;
        report.subspace = Some(SubspaceSummary {
            rank: v.rank(),
            eigenvalues: v.eigenvalues().to_vec(),
            spectrum,
            trace_sqrt: trace_sqrt(&m)?,
        });
        report.checks.dim_bound = Some(DimBound { rank: v.rank(), bound, holds });
        if !holds {
            return Err(Error::Invariant(format!("dim(V) = {} exceeds bound {bound}", v.rank())));
        }
        Ok(v)
    })?;

    let cover = run.stage("cover", |report| {
        let opts =
            CoverOptions { max_cover: cfg.max_cover, seed: derive_seed(cfg.seed, DOMAIN_COVER), ..Default::default() };
        let cover = build_cover(&v, r.eps_cover, &opts)?;
        report.cover = Some(CoverSummary {
            size: cover.len(),
            directions: cover.directions(),
            thresholds: cover.thresholds().len(),
            accuracy: r.eps_cover,
        });
        Ok(cover)
    })?;
    Ok((v, cover))
}

/// Train/validation/test errors, guarantee and residual checks.
fn evaluate(
    cfg: &LearnerConfig,
    run: &mut Run,
    data: &mut Data,
    h: &Hypothesis,
    v: Option<&Subspace>,
) -> std::result::Result<(), StageError> {
    run.stage("evaluate", |report| {
        report.errors.train = Some(data.train.error_of(|x| h.eval(x)));
        let valid = data.valid.as_ref().expect("validation drawn before evaluation");
        report.errors.validation = Some(valid.error_of(|x| h.eval(x)));
        let test_err = data.test(cfg)?.error_of(|x| h.eval(x));
        report.errors.test = Some(test_err);
        if let Some((_, noise)) = data.concept() {
            let opt = noise.opt_upper_bound();
            report.checks.guarantee = Some(Guarantee {
                test_error: test_err,
                opt_upper_bound: opt,
                epsilon: cfg.epsilon,
                passed: test_err <= opt + cfg.epsilon,
            });
        }
        Ok(())
    })?;
    let (Some(v), Some((concept, _))) = (v, data.concept()) else {
        return Ok(());
    };
    let concept = concept.clone();
    run.stage("residual", |report| {
        let test = data.test(cfg)?;
        let (points, n_mc) = match concept {
            Hypothesis::Halfspace(_) => (test.len(), 1),
            Hypothesis::Boolean(_) => (cfg.residual_points.min(test.len()), cfg.residual_mc),
        };
        let subset = test.slice(0, points);
        let (value, std_err) =
            correlation_residual(&concept, v, &subset, n_mc, derive_seed(cfg.seed, DOMAIN_RESIDUAL))?;
        report.checks.correlation_residual = Some(Residual { value, std_err, points, n_mc });
        Ok(())
    })
}

fn learn(cfg: &LearnerConfig, source: &DataSource, dim: usize) -> RunResult {
    let mut run = Run::new();
    let dim = dim_of(source, dim);
    let r = run.stage("config", |report| {
        let r = cfg.resolve()?;
        report.config = echo(cfg, &r, dim, source);
        if r.degree_capped {
            report.checks.notes.push(format!("degree formula gives {}, clamped to {}", r.formula_degree, r.degree));
        }
        Ok(r)
    })?;
    let mut data = run.stage("data", |_| Data::new(cfg, source, dim))?;
    run.report.config.n_train = data.train.len();
    if let Some(t) = &data.test {
        run.report.config.n_test = t.len();
    }
    let (v, cover) = reduce(cfg, &r, &mut run, &data)?;

    let n_valid = cfg.validation_size(cover.len());
    let valid = run.stage("data", |report| {
        let v = data.validation(cfg, n_valid)?.clone();
        report.config.n_valid = v.len();
        Ok(v)
    })?;
    let search = run.stage("search", |report| {
        let result = match cfg.task {
            Task::Halfspace => erm_halfspace(&cover, &valid).map(|(h, e)| (Hypothesis::Halfspace(h), e, "halfspace")),
            Task::Boolean(k) => {
                search_boolean(&cover, k, &valid, cfg.max_tuples).map(|(h, e)| (Hypothesis::Boolean(h), e, "boolean"))
            }
            Task::Intersection(k) => search_intersection(&cover, k, &valid, cfg.max_tuples)
                .map(|(h, e)| (Hypothesis::Boolean(h), e, "intersection")),
        };
        if let Err(Error::TupleBudget { error, best, .. }) = &result {
            let kind = if matches!(cfg.task, Task::Intersection(_)) { "intersection" } else { "boolean" };
            report.hypothesis = Some(HypothesisSummary::of(&Hypothesis::Boolean((**best).clone()), kind));
            report.errors.validation = Some(*error);
        }
        result
    });
    let (h, _, kind) = search?;
    run.report.hypothesis = Some(HypothesisSummary::of(&h, kind));
    evaluate(cfg, &mut run, &mut data, &h, Some(&v))?;
    Ok(run.finish())
}

/// Halfspace learner: regression, top eigenspace, cover, validation ERM.
pub fn run_algorithm1(cfg: &LearnerConfig, source: &DataSource, dim: usize) -> RunResult {
    if cfg.task != Task::Halfspace {
        return Err(Run::new().fail("config", Error::InvalidArgument("task must be halfspace".into())));
    }
    learn(cfg, source, dim)
}

/// Boolean-function learner: as [`run_algorithm1`] with the cover at
/// accuracy `c_cover eps / K` and exact ERM over `K`-tuples and truth tables.
pub fn run_algorithm2(cfg: &LearnerConfig, source: &DataSource, dim: usize) -> RunResult {
    if !matches!(cfg.task, Task::Boolean(_)) {
        return Err(Run::new().fail("config", Error::InvalidArgument("task must be boolean".into())));
    }
    learn(cfg, source, dim)
}

/// Intersection learner: the conjunction is fixed, tuples are searched.
pub fn run_intersection(cfg: &LearnerConfig, source: &DataSource, dim: usize) -> RunResult {
    if !matches!(cfg.task, Task::Intersection(_)) {
        return Err(Run::new().fail("config", Error::InvalidArgument("task must be intersection".into())));
    }
    learn(cfg, source, dim)
}

/// Degree-`k` least-squares fit of the labels on the Hermite features; the
/// hypothesis is `sign(P(x))` (improper).
pub fn baseline_l2(cfg: &LearnerConfig, source: &DataSource, dim: usize) -> RunResult {
    let mut run = Run::new();
    let dim = dim_of(source, dim);
    let r = run.stage("config", |report| {
        let r = cfg.resolve()?;
        report.config = echo(cfg, &r, dim, source);
        report.config.task = "baseline-l2".into();
        Ok(r)
    })?;
    let mut data = run.stage("data", |_| Data::new(cfg, source, dim))?;
    run.report.config.n_train = data.train.len();
    if let Some(t) = &data.test {
        run.report.config.n_test = t.len();
    }
    let p = run.stage("fit", |report| {
        let basis = HermiteBasis::new(dim, r.degree)?;
        let m = basis.len();
        let n = data.train.len();
        let entries = n as u128 * m as u128;
        if entries > cfg.max_design_entries as u128 {
            return Err(Error::Resource {
                what: "design matrix entries",
                needed: entries,
                limit: cfg.max_design_entries as u128,
            });
        }
        let mut gram = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        let mut feats = vec![0.0; m];
        for (x, y) in data.train.iter() {
            basis.features_into(x, &mut feats)?;
            let f = DVector::from_column_slice(&feats);
            gram.ger(1.0, &f, &f, 1.0);
            rhs.axpy(y as f64, &f, 1.0);
        }
        let coeffs = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => {
                report.checks.notes.push(format!("normal equations singular; ridge {L2_RIDGE:e} added"));
                let ridged = gram + DMatrix::<f64>::identity(m, m) * (L2_RIDGE * n as f64);
                ridged
                    .cholesky()
                    .ok_or_else(|| Error::Invariant("ridge-regularized normal equations not positive definite".into()))?
                    .solve(&rhs)
            }
        };
        PolyCoeffs::new(dim, r.degree, coeffs.iter().copied().collect())
    })?;
    let sign = |x: &[f64]| -> i8 {
        if poly_eval(&p, x).expect("dimension checked") >= 0.0 {
            1
        } else {
            -1
        }
    };
    run.report.hypothesis = Some(HypothesisSummary { kind: "ptf".into(), halfspaces: Vec::new(), truth_table: None });
    run.stage("evaluate", |report| {
        report.errors.train = Some(data.train.error_of(sign));
        if let Some(v) = &data.valid {
            report.errors.validation = Some(v.error_of(sign));
        }
        let test_err = data.test(cfg)?.error_of(sign);
        report.errors.test = Some(test_err);
        if let Some((_, noise)) = data.concept() {
            let opt = noise.opt_upper_bound();
            report.checks.guarantee = Some(Guarantee {
                test_error: test_err,
                opt_upper_bound: opt,
                epsilon: cfg.epsilon,
                passed: test_err <= opt + cfg.epsilon,
            });
        }
        Ok(())
    })?;
    Ok(run.finish())
}

/// Proper learning by brute force: a cover of all halfspaces in `R^d` at
/// accuracy `eps/4`, ERM on the validation sample. Guarded to `d <= 3`.
pub fn brute_force_proper(cfg: &LearnerConfig, source: &DataSource, dim: usize) -> RunResult {
    let mut run = Run::new();
    let dim = dim_of(source, dim);
    run.stage("config", |report| {
        if dim > BRUTE_FORCE_MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "brute force is limited to d <= {BRUTE_FORCE_MAX_DIM}, got {dim}"
            )));
        }
        let r = cfg.resolve()?;
        report.config = echo(cfg, &r, dim, source);
        report.config.task = "brute-force".into();
        report.config.eps_cover = cfg.epsilon / 4.0;
        Ok(())
    })?;
    let mut data = run.stage("data", |_| Data::new(cfg, source, dim))?;
    run.report.config.n_train = data.train.len();
    if let Some(t) = &data.test {
        run.report.config.n_test = t.len();
    }
    let cover = run.stage("cover", |report| {
        let opts =
            CoverOptions { max_cover: cfg.max_cover, seed: derive_seed(cfg.seed, DOMAIN_COVER), ..Default::default() };
        let cover = build_cover(&Subspace::full(dim), cfg.epsilon / 4.0, &opts)?;
        report.cover = Some(CoverSummary {
            size: cover.len(),
            directions: cover.directions(),
            thresholds: cover.thresholds().len(),
            accuracy: cfg.epsilon / 4.0,
        });
        Ok(cover)
    })?;
    let n_valid = cfg.validation_size(cover.len());
    let valid = run.stage("data", |report| {
        let v = data.validation(cfg, n_valid)?.clone();
        report.config.n_valid = v.len();
        Ok(v)
    })?;
    let h = run.stage("search", |_| erm_halfspace(&cover, &valid))?.0;
    let h = Hypothesis::Halfspace(h);
    run.report.hypothesis = Some(HypothesisSummary::of(&h, "halfspace"));
    evaluate(cfg, &mut run, &mut data, &h, None)?;
    Ok(run.finish())
}
