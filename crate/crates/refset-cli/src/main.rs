//! Command-line front end for the refset library: dataset generation,
//! reference-set construction, evaluation, proportion fitting, and batch
//! benchmarking. Every subcommand is a thin wrapper over a library call,
//! so CLI artifacts are byte-identical to what the library produces.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use refset::data::{
    dataset_to_csv_string, gen_5_4, gen_gaussian, load_csv, load_proportions,
};
use refset::{
    benchmark, evaluate, fit_score, parse_bench_config, parse_metric_spec, EvaluationReport,
    Method, Metric, Protocol, SimilarityParams,
};

/// Reference-set selection and prototype generation for nearest-neighbour
/// categorisation.
#[derive(Parser)]
#[command(name = "refset", version, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Seed for every randomised step; equal seeds give byte-identical
    /// artifacts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Distance metric: euclidean, hamming, or minkowski:<p>.
    #[arg(long, global = true, default_value = "euclidean")]
    metric: String,

    /// Write the main artifact here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Artifact format. Datasets are always csv, everything else json;
    /// passing the other value is an error.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and write it as CSV.
    Dataset {
        #[command(subcommand)]
        kind: DatasetKind,
    },
    /// Keep a subset of the training points as the reference set.
    ///
    /// Methods: cnn, enn (k=3), hybrid (k=3), random (t=100),
    /// exhaustive (cv_folds=5, cap=1048576).
    Select(MethodArgs),
    /// Replace the training points with synthesised prototypes.
    ///
    /// Methods: kmeans-pre (k_per_category=1), kmeans-post (k=categories),
    /// gmm (k per mode, mode=pre), lvq (prototypes_per_category=1,
    /// alpha0=0.3, epochs=5), nearest-mean.
    Generate(MethodArgs),
    /// Run a category-learning model and keep the reference set it implies.
    ///
    /// Methods: rmc (coupling=0.5, label_weight=1, shuffle=false), rex,
    /// sustain (learning_rate=0.1, epochs=5), vam (cap=1000000),
    /// rex-leopold-1 (cv_folds=5, cap=1048576), pure-exemplar,
    /// pure-prototype.
    Psych(MethodArgs),
    /// Evaluate a method under an accuracy protocol and write the report.
    Eval(EvalArgs),
    /// Fit a method, then score its predicted choice proportions against
    /// observed ones; writes an evaluation report carrying the fit scores.
    Fit(FitArgs),
    /// Run every (dataset, method) cell of a JSON benchmark config.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum DatasetKind {
    /// The 4-bit two-category structure: five A and four B training
    /// stimuli plus seven unlabelled transfer stimuli.
    #[command(name = "gen-5-4")]
    Gen54 {
        /// Which stimuli to emit.
        #[arg(long, default_value = "training", value_parser = ["training", "transfer", "combined"])]
        part: String,
    },
    /// Spherical gaussian blobs, one per category, with optional label
    /// noise.
    Gaussian {
        /// Points per category, comma-separated (e.g. 20,20).
        #[arg(long)]
        counts: String,
        /// Category means: points comma-separated, coordinates
        /// colon-separated (e.g. 0:0,4:4).
        #[arg(long)]
        means: String,
        /// Per-category standard deviations, comma-separated.
        #[arg(long)]
        sigmas: String,
        /// Fraction of points whose label is flipped to another category.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
}

#[derive(Args)]
struct MethodArgs {
    /// Method name; see the subcommand help for the list and defaults.
    method: String,

    /// Training dataset CSV.
    #[arg(long)]
    input: PathBuf,

    /// Method parameters as a JSON object, e.g. '{"k": 5}'.
    #[arg(long, default_value = "{}")]
    params: String,

    /// Error-vs-size trade-off for the subset-search methods
    /// (criterion J = lambda * error + (1 - lambda) * size / n).
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,

    /// Also write a resubstitution evaluation report here. Defaults to
    /// <output>.report.json when --output is a file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Method name; any select/generate/psych method works here.
    method: String,

    /// Dataset CSV to evaluate on.
    #[arg(long)]
    input: PathBuf,

    /// Method parameters as a JSON object.
    #[arg(long, default_value = "{}")]
    params: String,

    /// Accuracy protocol: resubstitution, holdout:<fraction>, kfold:<k>,
    /// or loo.
    #[arg(long, default_value = "kfold:5")]
    protocol: String,

    /// Error-vs-size trade-off reported as criterion J.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,

    /// Include wall-clock timing in the report (off keeps reruns
    /// byte-identical).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Method name; any select/generate/psych method works here.
    method: String,

    /// Training dataset CSV.
    #[arg(long)]
    input: PathBuf,

    /// Observed choice proportions CSV (feature columns, then one
    /// count:<category> column per category).
    #[arg(long)]
    proportions: PathBuf,

    /// Method parameters as a JSON object.
    #[arg(long, default_value = "{}")]
    params: String,

    /// Error-vs-size trade-off for the subset-search methods.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,

    /// Similarity sharpness (similarity = exp(-gamma * distance)).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,

    /// Try each of these gamma values (comma-separated) and report the one
    /// with the smallest squared error; overrides --gamma.
    #[arg(long)]
    gamma_grid: Option<String>,

    /// Require every proportion row to have the same total count.
    #[arg(long)]
    strict_m: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark configuration JSON; relative dataset paths resolve
    /// against this file's directory.
    #[arg(long)]
    config: PathBuf,

    /// Directory for the per-cell reports, reference sets, and
    /// summary.csv.
    #[arg(long)]
    output_dir: PathBuf,

    /// Parallel cells (defaults to the number of CPUs); outputs are
    /// byte-identical whatever the value.
    #[arg(long)]
    jobs: Option<usize>,
}

const SELECT_METHODS: &[&str] = &["cnn", "enn", "hybrid", "random", "exhaustive"];
const GENERATE_METHODS: &[&str] = &["kmeans-pre", "kmeans-post", "gmm", "lvq", "nearest-mean"];
const PSYCH_METHODS: &[&str] = &[
    "rmc",
    "rex",
    "sustain",
    "vam",
    "rex-leopold-1",
    "pure-exemplar",
    "pure-prototype",
];

enum CliError {
    /// Bad invocation: wrong method name, malformed flag value, format
    /// mismatch. Exit code 1.
    Usage(String),
    /// The invocation was fine but the work failed. Exit code 2.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<refset::Error> for CliError {
    fn from(e: refset::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

/// The main artifact of this invocation is JSON (or CSV); reject the
/// other --format value with a pointer to what this subcommand writes.
fn require_format(global: &GlobalArgs, required: &str, what: &str) -> CliResult {
    match global.format.as_deref() {
        None => Ok(()),
        Some(f) if f == required => Ok(()),
        Some(f) => Err(usage(format!(
            "{what} is written as {required}, not {f}; drop --format or pass --format {required}"
        ))),
    }
}

/// Build a method from a family-restricted name and a JSON params string.
fn method_from_args(family: &[&str], name: &str, params: &str, verb: &str) -> CliResult<Method> {
    if !family.contains(&name) {
        return Err(usage(format!(
            "unknown method \"{name}\" for `{verb}`; valid method names: {}",
            family.join(", ")
        )));
    }
    let params: serde_json::Value = serde_json::from_str(params)
        .map_err(|e| usage(format!("--params must be a JSON object: {e}")))?;
    Method::from_config(name, &params).map_err(|e| usage(e.to_string()))
}

fn parse_metric_arg(spec: &str) -> CliResult<Metric> {
    parse_metric_spec(spec).map_err(|e| usage(e.to_string()))
}

fn parse_protocol_arg(spec: &str, seed: u64) -> CliResult<Protocol> {
    let invalid = |detail: String| {
        usage(format!(
            "invalid protocol \"{spec}\" ({detail}); expected resubstitution, \
             holdout:<fraction>, kfold:<k>, or loo"
        ))
    };
    match spec {
        "resubstitution" => Ok(Protocol::Resubstitution),
        "loo" => Ok(Protocol::Loo),
        _ => {
            if let Some(f) = spec.strip_prefix("holdout:") {
                let fraction: f64 =
                    f.parse().map_err(|_| invalid(format!("bad fraction \"{f}\"")))?;
                Ok(Protocol::Holdout { fraction, seed })
            } else if let Some(k) = spec.strip_prefix("kfold:") {
                let folds: usize =
                    k.parse().map_err(|_| invalid(format!("bad fold count \"{k}\"")))?;
                Ok(Protocol::KFold { folds, seed })
            } else {
                Err(invalid("unknown protocol kind".into()))
            }
        }
    }
}

/// Write `text` to the file, or to standard output (with a newline) when
/// no file was requested.
fn write_artifact(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(path) => {
            std::fs::write(path, text)
                .with_context(|| format!("could not write {}", path.display()))?;
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn report_json(report: &EvaluationReport) -> CliResult<String> {
    serde_json::to_string(report)
        .context("could not serialise the evaluation report")
        .map_err(CliError::from)
}

/// `o.json` → `o.report.json`; other names just gain `.report.json`.
fn derived_report_path(output: &Path) -> PathBuf {
    let s = output.to_string_lossy();
    match s.strip_suffix(".json") {
        Some(stem) => PathBuf::from(format!("{stem}.report.json")),
        None => PathBuf::from(format!("{s}.report.json")),
    }
}

fn run(cli: Cli) -> CliResult {
    let global = &cli.global;
    match cli.command {
        Command::Dataset { kind } => run_dataset(global, kind),
        Command::Select(args) => run_construct(global, args, SELECT_METHODS, "select"),
        Command::Generate(args) => run_construct(global, args, GENERATE_METHODS, "generate"),
        Command::Psych(args) => run_construct(global, args, PSYCH_METHODS, "psych"),
        Command::Eval(args) => run_eval(global, args),
        Command::Fit(args) => run_fit(global, args),
        Command::Bench(args) => run_bench(global, args),
    }
}

fn parse_numbers<T: std::str::FromStr>(s: &str, flag: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| usage(format!("{flag}: \"{part}\" is not a number")))
        })
        .collect()
}

fn run_dataset(global: &GlobalArgs, kind: DatasetKind) -> CliResult {
    require_format(global, "csv", "a dataset")?;
    let dataset = match kind {
        DatasetKind::Gen54 { part } => {
            let structure = gen_5_4();
            match part.as_str() {
                "training" => structure.training,
                "combined" => structure.combined(),
                _ => refset::Dataset::new(
                    structure.transfer,
                    structure.training.categories().to_vec(),
                )
                .expect("transfer stimuli form a valid dataset"),
            }
        }
        DatasetKind::Gaussian { counts, means, sigmas, noise } => {
            let counts: Vec<usize> = parse_numbers(&counts, "--counts")?;
            let sigmas: Vec<f64> = parse_numbers(&sigmas, "--sigmas")?;
            let means: Vec<Vec<f64>> = means
                .split(',')
                .map(|point| {
                    point
                        .split(':')
                        .map(|c| {
                            c.trim().parse().map_err(|_| {
                                usage(format!("--means: \"{c}\" is not a number"))
                            })
                        })
                        .collect()
                })
                .collect::<CliResult<_>>()?;
            gen_gaussian(&counts, &means, &sigmas, noise, global.seed)?.0
        }
    };
    write_artifact(global.output.as_deref(), &dataset_to_csv_string(&dataset))
}

fn run_construct(
    global: &GlobalArgs,
    args: MethodArgs,
    family: &[&str],
    verb: &str,
) -> CliResult {
    require_format(global, "json", "a reference set")?;
    let method = method_from_args(family, &args.method, &args.params, verb)?;
    let metric = parse_metric_arg(&global.metric)?;
    let dataset = load_csv(&args.input)?;
    let refset = method.fit(&dataset, &metric, args.lambda, global.seed)?;
    write_artifact(global.output.as_deref(), &refset.to_json_string())?;

    let report_path = args
        .report
        .clone()
        .or_else(|| global.output.as_deref().map(derived_report_path));
    if let Some(path) = report_path {
        let mut report = evaluate(
            &method,
            &dataset,
            &Protocol::Resubstitution,
            &metric,
            args.lambda,
            global.seed,
        )?;
        report.wall_time_ms = None;
        write_artifact(Some(&path), &report_json(&report)?)?;
    }
    Ok(())
}

fn run_eval(global: &GlobalArgs, args: EvalArgs) -> CliResult {
    require_format(global, "json", "an evaluation report")?;
    let method = method_from_args(&all_methods(), &args.method, &args.params, "eval")?;
    let metric = parse_metric_arg(&global.metric)?;
    let protocol = parse_protocol_arg(&args.protocol, global.seed)?;
    let dataset = load_csv(&args.input)?;
    let mut report = evaluate(&method, &dataset, &protocol, &metric, args.lambda, global.seed)?;
    if !args.timing {
        report.wall_time_ms = None;
    }
    write_artifact(global.output.as_deref(), &report_json(&report)?)
}

fn all_methods() -> Vec<&'static str> {
    refset::valid_method_names()
}

fn run_fit(global: &GlobalArgs, args: FitArgs) -> CliResult {
    require_format(global, "json", "an evaluation report")?;
    let method = method_from_args(&all_methods(), &args.method, &args.params, "fit")?;
    let metric = parse_metric_arg(&global.metric)?;
    let gammas: Vec<f64> = match &args.gamma_grid {
        Some(grid) => parse_numbers(grid, "--gamma-grid")?,
        None => vec![args.gamma],
    };
    if gammas.is_empty() {
        return Err(usage("--gamma-grid needs at least one value"));
    }
    let similarity_params: Vec<SimilarityParams> = gammas
        .iter()
        .map(|&g| SimilarityParams::new(g).map_err(|e| usage(e.to_string())))
        .collect::<CliResult<_>>()?;

    let dataset = load_csv(&args.input)?;
    let table = load_proportions(&args.proportions, args.strict_m)?;
    let refset = method.fit(&dataset, &metric, args.lambda, global.seed)?;

    let mut best: Option<(f64, f64, f64)> = None;
    for (gamma, params) in gammas.iter().zip(&similarity_params) {
        let (sse, loglik) = fit_score(&refset, &metric, params, &table)?;
        if best.is_none_or(|(_, best_sse, _)| sse < best_sse) {
            best = Some((*gamma, sse, loglik));
        }
    }
    let (gamma, sse, loglik) = best.expect("at least one gamma was scored");

    let mut report = evaluate(
        &method,
        &dataset,
        &Protocol::Resubstitution,
        &metric,
        args.lambda,
        global.seed,
    )?;
    report.fit_gamma = Some(gamma);
    report.fit_sse = Some(sse);
    report.fit_loglik = Some(loglik);
    report.wall_time_ms = None;
    write_artifact(global.output.as_deref(), &report_json(&report)?)
}

fn run_bench(global: &GlobalArgs, args: BenchArgs) -> CliResult {
    if global.format.is_some() {
        return Err(usage(
            "--format does not apply to bench; it writes both JSON reports and a CSV summary",
        ));
    }
    if global.output.is_some() {
        return Err(usage("bench writes into --output-dir, not --output"));
    }
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("could not read config {}", args.config.display()))?;
    let mut config = parse_bench_config(&text)?;
    if let Some(dir) = args.config.parent() {
        for dataset in &mut config.datasets {
            if dataset.path.is_relative() {
                dataset.path = dir.join(&dataset.path);
            }
        }
    }
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outcome = benchmark(&config, &args.output_dir, jobs)?;
    for row in &outcome.rows {
        if row.status == "ok" {
            println!("cell{:03} {} {} ok", row.cell, row.dataset, row.method);
        } else {
            println!(
                "cell{:03} {} {} error: {}",
                row.cell, row.dataset, row.method, row.message
            );
        }
    }
    println!("summary: {}", outcome.summary_path.display());
    Ok(())
}
