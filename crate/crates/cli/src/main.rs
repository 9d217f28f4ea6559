use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use properlearn::data::{
    planted_concept, read_dataset, sample_dataset, write_dataset, ConceptKind, Noise, PlantedModel,
};
use properlearn::pipeline::{
    baseline_l2, brute_force_proper, exit_code, run_algorithm1, run_algorithm2, run_intersection, verify, DataSource,
    LearnerConfig, RunResult, Task,
};
use properlearn::rng::derive_seed;
use properlearn::Error;

const EXIT_GUARANTEE: u8 = 2;
const EXIT_INPUT: u8 = 4;
/// Seed domain for drawing planted normals, disjoint from the learner's.
const DOMAIN_CONCEPT: u64 = 16;

#[derive(Parser)]
#[command(name = "properlearn", version, about = "Proper agnostic learning of halfspaces under Gaussian marginals")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted dataset and write it to `--out` (`.bin` for binary).
    GenData(GenArgs),
    /// Learn a halfspace.
    LearnHalfspace(LearnArgs),
    /// Learn an arbitrary Boolean function of K halfspaces.
    LearnBoolean(LearnArgs),
    /// Learn an intersection of K halfspaces.
    LearnIntersection(LearnArgs),
    /// Improper degree-k least-squares threshold baseline.
    BaselineL2(LearnArgs),
    /// Exhaustive halfspace search over the whole sphere (d <= 3).
    BruteForce(LearnArgs),
    /// Run property suites and print a JSON report.
    Verify {
        /// Suite name, or `all`.
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Concept {
    Halfspace,
    Xor,
    Parity,
    Intersection,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseKind {
    None,
    Rcn,
    Slab,
}

#[derive(Args, Clone)]
struct PlantArgs {
    /// Planted concept; defaults to the one matching the task.
    #[arg(long, value_enum)]
    concept: Option<Concept>,
    /// Threshold shared by every planted halfspace.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "none")]
    noise: NoiseKind,
    /// Flip probability (rcn) or slab mass (slab).
    #[arg(long, default_value_t = 0.0)]
    noise_rate: f64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    dim: usize,
    /// Number of rows.
    #[arg(long)]
    n: usize,
    #[arg(long = "K", default_value_t = 1)]
    k_tuple: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    plant: PlantArgs,
}

#[derive(Args)]
struct LearnArgs {
    /// Ambient dimension (taken from the file with `--dataset`).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Polynomial degree.
    #[arg(long)]
    k: Option<usize>,
    /// Number of halfspaces.
    #[arg(long = "K", default_value_t = 2)]
    k_tuple: usize,
    /// Largest K accepted by `learn-boolean`.
    #[arg(long = "max-K", default_value_t = 3)]
    max_k_tuple: usize,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_valid: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Learn from a dataset file instead of a planted model.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long)]
    max_cover: Option<usize>,
    #[arg(long)]
    max_tuples: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    cnu: Option<f64>,
    #[arg(long)]
    ccover: Option<f64>,
    #[command(flatten)]
    plant: PlantArgs,
}

fn noise_of(p: &PlantArgs) -> Noise {
    match p.noise {
        NoiseKind::None => Noise::None,
        NoiseKind::Rcn => Noise::Rcn(p.noise_rate),
        NoiseKind::Slab => Noise::Slab(p.noise_rate),
    }
}

fn concept_kind(c: Concept, k: usize) -> ConceptKind {
    match c {
        Concept::Halfspace => ConceptKind::Halfspace,
        Concept::Xor => ConceptKind::Parity(2),
        Concept::Parity => ConceptKind::Parity(k),
        Concept::Intersection => ConceptKind::Intersection(k),
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn gen_data(a: &GenArgs) -> Result<(), Error> {
    let kind = concept_kind(a.plant.concept.unwrap_or(Concept::Halfspace), a.k_tuple);
    let concept = planted_concept(kind, a.dim, a.plant.threshold, derive_seed(a.seed, DOMAIN_CONCEPT))?;
    let ds = sample_dataset(&PlantedModel::new(concept, noise_of(&a.plant), a.seed), a.n, a.dim)?;
    write_dataset(&a.out, &ds)
}

/// Which runner a learn-style subcommand uses.
#[derive(Clone, Copy)]
enum Runner {
    Halfspace,
    Boolean,
    Intersection,
    Baseline,
    BruteForce,
}

fn learn(runner: Runner, a: &LearnArgs) -> Result<u8, Error> {
    let task = match runner {
        Runner::Boolean => {
            if a.k_tuple > a.max_k_tuple {
                return Err(Error::InvalidArgument(format!("K = {} exceeds --max-K {}", a.k_tuple, a.max_k_tuple)));
            }
            Task::Boolean(a.k_tuple)
        }
        Runner::Intersection => Task::Intersection(a.k_tuple),
        _ => Task::Halfspace,
    };
    let mut cfg = LearnerConfig::new(task, a.epsilon);
    cfg.delta = a.delta;
    cfg.degree = a.k;
    cfg.eta = a.eta;
    cfg.nu = a.nu;
    cfg.seed = a.seed;
    cfg.n_valid = a.n_valid;
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                cfg.$field = v;
            }
        };
    }
    set!(mu, a.mu);
    set!(n_train, a.n_train);
    set!(n_test, a.n_test);
    set!(max_degree, a.max_degree);
    set!(max_cover, a.max_cover);
    set!(max_tuples, a.max_tuples);
    set!(max_iterations, a.max_iterations);
    set!(c0, a.c0);
    set!(c_nu, a.cnu);
    set!(c_cover, a.ccover);

    let (source, dim) = match &a.dataset {
        Some(path) => {
            let ds = read_dataset(path)?;
            let d = ds.dim();
            if a.dim.is_some_and(|x| x != d) {
                return Err(Error::DimensionMismatch { expected: a.dim.unwrap_or(d), found: d });
            }
            (DataSource::Dataset(ds), d)
        }
        None => {
            let d = a.dim.ok_or_else(|| Error::InvalidArgument("--dim is required without --dataset".into()))?;
            let default = match runner {
                Runner::Boolean => Concept::Xor,
                Runner::Intersection => Concept::Intersection,
                _ => Concept::Halfspace,
            };
            let kind = concept_kind(a.plant.concept.unwrap_or(default), a.k_tuple);
            let concept = planted_concept(kind, d, a.plant.threshold, derive_seed(a.seed, DOMAIN_CONCEPT))?;
            (DataSource::Planted { concept, noise: noise_of(&a.plant) }, d)
        }
    };

    let result: RunResult = match runner {
        Runner::Halfspace => run_algorithm1(&cfg, &source, dim),
        Runner::Boolean => run_algorithm2(&cfg, &source, dim),
        Runner::Intersection => run_intersection(&cfg, &source, dim),
        Runner::Baseline => baseline_l2(&cfg, &source, dim),
        Runner::BruteForce => brute_force_proper(&cfg, &source, dim),
    };
    match result {
        Ok(report) => {
            write_out(a.out.as_ref(), &report.to_json())?;
            Ok(if report.guarantee_failed() { EXIT_GUARANTEE } else { 0 })
        }
        Err(e) => {
            write_out(a.out.as_ref(), &e.report.to_json())?;
            eprintln!("error: {e}");
            Ok(exit_code(&e.source) as u8)
        }
    }
}

fn run_verify(suite: &str, out: Option<&PathBuf>) -> Result<u8, Error> {
    let names: Vec<&str> = if suite == "all" { verify::SUITES.to_vec() } else { vec![suite] };
    let reports = names.iter().map(|s| verify::run_suite(s)).collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let json = serde_json::json!({ "passed": passed, "suites": reports });
    write_out(out, &serde_json::to_string_pretty(&json).expect("report serializes"))?;
    Ok(if passed { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let outcome = match &cli.command {
        Command::GenData(a) => gen_data(a).map(|_| 0),
        Command::LearnHalfspace(a) => learn(Runner::Halfspace, a),
        Command::LearnBoolean(a) => learn(Runner::Boolean, a),
        Command::LearnIntersection(a) => learn(Runner::Intersection, a),
        Command::BaselineL2(a) => learn(Runner::Baseline, a),
        Command::BruteForce(a) => learn(Runner::BruteForce, a),
        Command::Verify { suite, out } => run_verify(suite, out.as_ref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
