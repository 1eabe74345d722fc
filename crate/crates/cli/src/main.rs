//! `divstruct`: MAP and diverse-list solves, benchmarks and bound verification.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 input error, 3 solver error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use divstruct::diversity::{Costs, ConcaveH, DiversityModel, Family};
use divstruct::eval::{run_benchmark, synth_generate, synth_rare_transition, SuiteConfig};
use divstruct::greedy::{
    auto_backend, combine_concat, combine_linear, concat_quotas, greedy_diverse, solve_augmented, Backend,
    Fault, GreedyOptions,
};
use divstruct::inference::{enum_cap_from_env, HopAugmentation};
use divstruct::theory::{run_bound_suite, verify_lemma1, BoundSuiteConfig, WorstCaseInstance};
use divstruct::{Error, FactorGraph};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "divstruct", version, about = "Diverse M-best structured prediction")]
struct Cli {
    /// Worker threads for independent instances and grid cells (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MAP labeling of an instance.
    Solve(SolveArgs),
    /// Greedy diverse list of M labelings.
    Diverse(DiverseArgs),
    /// Synthetic benchmark with oracle-accuracy curves.
    Bench(BenchArgs),
    /// Check the greedy guarantees on exhaustively solvable instances.
    Verify(VerifyArgs),
    /// Write a synthetic grid instance.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "auto")]
    backend: Backend,
    /// Exhaustive-search cap; defaults to DIVSTRUCT_ENUM_CAP or 2^24.
    #[arg(long)]
    enum_cap: Option<u128>,
    #[arg(long)]
    mp_iters: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> GreedyOptions {
        let mut opts = GreedyOptions::default().with_backend(self.backend);
        opts.enum_cap = self.enum_cap.unwrap_or_else(enum_cap_from_env);
        if let Some(it) = self.mp_iters {
            opts.message_passing.max_iters = it;
        }
        if let Some(d) = self.damping {
            opts.message_passing.damping = d;
        }
        opts
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON (a factor graph or a synthetic instance).
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Combine {
    Concat,
    Linear,
}

#[derive(Args)]
struct DiverseArgs {
    input: PathBuf,
    #[arg(long = "M", default_value_t = 5)]
    m: usize,
    #[arg(long, default_value = "hamming_ball_smooth")]
    diversity: Family,
    #[arg(long)]
    h: Option<ConcaveH>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Uniform parsimony cost for label_cost and label_transition.
    #[arg(long, allow_hyphen_values = true)]
    parsimony: Option<f64>,
    /// Diversity config JSON files; repeat for --combine.
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    #[arg(long)]
    combine: Option<Combine>,
    /// Comma-separated weights for --combine linear (default all 1).
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Recorded in the output; solves are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite config JSON; defaults to the desk suite.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Two-seed suite on 4x4 grids.
    #[arg(long, conflicts_with = "config")]
    smoke: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Report JSON; stdout if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Oracle curves as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Lemma1,
    Bounds,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Single worst-case instance for the lemma1 suite.
    #[arg(long = "N", requires = "lemma_m")]
    n: Option<usize>,
    #[arg(long = "M", id = "lemma_m", requires = "n")]
    m: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Negative control: greedy picks the worst labeling and reports no slack.
    #[arg(long, hide = true)]
    inject_fault: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 3)]
    labels: usize,
    #[arg(long, default_value_t = 0.8)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plant an adjacent pair of weakly observed labels.
    #[arg(long)]
    rare_transition: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    Verify,
    Input(anyhow::Error),
    Solver(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

fn is_input_error(e: &Error) -> bool {
    match e {
        Error::Step { source, .. } => is_input_error(source),
        Error::InvalidLabeling(_)
        | Error::InvalidGraph(_)
        | Error::InvalidRegions(_)
        | Error::InvalidConfig(_)
        | Error::InvalidFactor(_)
        | Error::TooFew { .. } => true,
        _ => false,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_input_error(&e) {
            Failure::Input(e.into())
        } else {
            Failure::Solver(e.into())
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn input<T>(r: anyhow::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Input)
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Accepts a bare factor graph or any object with a `graph` field.
fn load_graph(path: &Path) -> anyhow::Result<FactorGraph> {
    let mut value = read_json(path)?;
    if let Some(g) = value.get_mut("graph") {
        value = g.take();
    }
    let graph: FactorGraph =
        serde_json::from_value(value).with_context(|| format!("parsing factor graph in {}", path.display()))?;
    Ok(graph.checked()?)
}

fn emit(value: &Value, output: Option<&Path>) -> Outcome {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    match output {
        Some(p) => input(fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn solve(args: SolveArgs) -> Outcome {
    let graph = input(load_graph(&args.input))?;
    let opts = args.solver.options();
    let aug = HopAugmentation::none();
    let backend = match opts.backend {
        Backend::Auto => auto_backend(&graph, &aug, &opts, true)?,
        b => b,
    };
    let y = solve_augmented(&graph, &aug, backend, &opts, &[])?;
    let score = graph.score_unchecked(&y.0);
    emit(&json!({ "labels": y, "score": score, "backend": backend }), args.output.as_deref())
}

fn flag_model(args: &DiverseArgs) -> std::result::Result<DiversityModel, Failure> {
    let mut model = DiversityModel::new(args.diversity);
    let misplaced = |flag: &str| Failure::Input(anyhow::anyhow!("--{flag} does not apply to {}", args.diversity));
    if let Some(h) = args.h {
        if !args.diversity.is_coverage() || args.diversity == Family::HammingBallSet {
            return Err(misplaced("h"));
        }
        model = model.with_h(h);
    }
    if let Some(l) = args.lambda {
        model = model.with_lambda(l);
    }
    if let Some(g) = args.gamma {
        if args.diversity != Family::HammingBallSmooth {
            return Err(misplaced("gamma"));
        }
        model.gamma = Some(g);
    }
    if let Some(k) = args.k {
        if args.diversity != Family::HammingBallSet {
            return Err(misplaced("k"));
        }
        model.radius_k = Some(k);
    }
    if let Some(c) = args.parsimony {
        if !matches!(args.diversity, Family::LabelCost | Family::LabelTransition) {
            return Err(misplaced("parsimony"));
        }
        model = model.with_costs(Costs::Uniform(c));
    }
    Ok(model)
}

fn diverse(args: DiverseArgs) -> Outcome {
    if args.m == 0 {
        return Err(Failure::Input(anyhow::anyhow!("--M must be at least 1")));
    }
    let graph = input(load_graph(&args.input))?;
    let opts = args.solver.options();
    let models: Vec<DiversityModel> = if args.configs.is_empty() {
        vec![flag_model(&args)?]
    } else {
        args.configs
            .iter()
            .map(|p| {
                let v = read_json(p)?;
                serde_json::from_value(v).with_context(|| format!("diversity config {}", p.display()))
            })
            .collect::<anyhow::Result<_>>()
            .map_err(Failure::Input)?
    };
    let mut list = match args.combine {
        None => {
            if models.len() != 1 {
                return Err(Failure::Input(anyhow::anyhow!("several configs need --combine")));
            }
            greedy_diverse(&graph, &models[0], args.m, &opts)?.0
        }
        Some(Combine::Concat) => {
            let quotas = concat_quotas(args.m, models.len());
            let lists = models
                .iter()
                .zip(&quotas)
                .map(|(model, &q)| Ok(greedy_diverse(&graph, model, q.max(1), &opts)?.0))
                .collect::<divstruct::Result<Vec<_>>>()?;
            combine_concat(&graph, &lists, args.m, &models[0])?
        }
        Some(Combine::Linear) => {
            let weights = if args.weights.is_empty() { vec![1.0; models.len()] } else { args.weights.clone() };
            if weights.len() != models.len() {
                return Err(Failure::Input(anyhow::anyhow!(
                    "{} weights for {} configs",
                    weights.len(),
                    models.len()
                )));
            }
            let pairs: Vec<_> = models.into_iter().zip(weights).collect();
            combine_linear(&graph, &pairs, args.m, &opts)?.0
        }
    };
    if let Value::Object(map) = &mut list.config {
        map.insert("seed".into(), json!(args.seed));
    }
    let value = serde_json::to_value(&list).expect("lists serialize");
    emit(&value, args.output.as_deref())
}

fn bench(args: BenchArgs) -> Outcome {
    let mut cfg = match (&args.config, args.smoke) {
        (Some(p), _) => input(read_json(p).and_then(|v| Ok(serde_json::from_value::<SuiteConfig>(v)?)))?,
        (None, true) => SuiteConfig {
            height: 4,
            width: 4,
            labels: vec![2, 3],
            validation: 2,
            test: 2,
            lambda_grid: vec![0.1, 1.0],
            gamma_grid: vec![0.5],
            weight_grid: vec![0.1, 1.0],
            ..SuiteConfig::default()
        },
        (None, false) => SuiteConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let report = run_benchmark(&cfg).map_err(|e| {
        let seeds = format!("seeds from {}", cfg.seed);
        match Failure::from(e) {
            Failure::Input(e) => Failure::Input(e.context(seeds)),
            Failure::Solver(e) => Failure::Solver(e.context(seeds)),
            other => other,
        }
    })?;
    if let Some(p) = &args.csv {
        let csv = report.to_csv()?;
        input(fs::write(p, csv).with_context(|| format!("writing {}", p.display())))?;
    }
    emit(&serde_json::to_value(&report).expect("reports serialize"), args.output.as_deref())
}

/// The worst-case instances checked by default.
const LEMMA1_CASES: [(usize, usize, f64); 4] = [(4, 2, 0.0), (4, 2, 0.6), (20, 4, 0.0), (12, 3, 0.25)];

fn verify(args: VerifyArgs) -> Outcome {
    let mut report = serde_json::Map::new();
    let mut failures = Vec::new();
    if matches!(args.suite, Suite::All | Suite::Lemma1) {
        let cases: Vec<(usize, usize, f64)> = match (args.n, args.m) {
            (Some(n), Some(m)) => vec![(n, m, args.epsilon)],
            _ => LEMMA1_CASES.to_vec(),
        };
        let mut out = Vec::new();
        for (i, (n, m, eps)) in cases.into_iter().enumerate() {
            let inst = WorstCaseInstance::new(n, m, eps)?;
            let r = verify_lemma1(&inst, args.samples, args.seed.wrapping_add(i as u64))?;
            let v = serde_json::to_value(&r).expect("reports serialize");
            if !r.pass {
                failures.push(json!({ "suite": "lemma1", "case": v.clone() }));
            }
            out.push(v);
        }
        report.insert("lemma1".into(), Value::Array(out));
    }
    if matches!(args.suite, Suite::All | Suite::Bounds) {
        let cfg = BoundSuiteConfig {
            instances: args.instances,
            seed: args.seed,
            fault: args.inject_fault.then_some(Fault::WorstPickNoSlack),
            ..BoundSuiteConfig::default()
        };
        let r = run_bound_suite(&cfg)?;
        for c in r.cases.iter().filter(|c| !c.pass()) {
            failures.push(json!({ "suite": "bounds", "case": c }));
        }
        report.insert(
            "bounds".into(),
            json!({
                "instances": r.cases.len(),
                "nemhauser_checked": r.nemhauser_checked,
                "nemhauser_passed": r.nemhauser_passed,
                "lemma2_passed": r.lemma2_passed,
                "lemma3_checked": r.lemma3_checked,
                "lemma3_passed": r.lemma3_passed,
                "min_ratio": r.min_ratio,
                "pass": r.pass,
            }),
        );
    }
    let pass = failures.is_empty();
    report.insert("seed".into(), json!(args.seed));
    report.insert("pass".into(), json!(pass));
    report.insert("failures".into(), Value::Array(failures));
    let value = Value::Object(report);
    emit(&value, args.output.as_deref())?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn synth(args: SynthArgs) -> Outcome {
    let gen = if args.rare_transition { synth_rare_transition } else { synth_generate };
    let inst = gen(args.height, args.width, args.labels, args.sigma, args.seed)?;
    emit(&serde_json::to_value(&inst).expect("instances serialize"), args.output.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Diverse(a) => diverse(a),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
        Command::Synth(a) => synth(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verify => eprintln!("verification failed"),
                Failure::Input(e) | Failure::Solver(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
