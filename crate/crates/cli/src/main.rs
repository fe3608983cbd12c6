use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hypoflag::corpus;
use hypoflag::filtersim::{run_batch, Scheme, SimConfig, SimError};
use hypoflag::hormander::CheckOptions;
use hypoflag::model::{validate_model, ModelError, ModelSpec};
use hypoflag::theorems::{analyze, AnalysisOptions, TheoremError, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "hypoflag", version, about = "Hörmander condition checks for filtering diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and list any violations.
    Validate { path: PathBuf },
    /// Run the rank criteria and the brute-force Lie span.
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        span: SpanArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo run of the chain, the observation and both filters.
    Simulate(SimulateArgs),
    /// Built-in example models.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Args, Clone)]
struct SpanArgs {
    /// Bracket depth; defaults to n + 2.
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 5)]
    points: usize,
    #[arg(long, env = "HYPOFLAG_SEED", default_value_t = 0)]
    seed: u64,
    /// Also check the space-time generator.
    #[arg(long)]
    parabolic: bool,
    /// Also check the generator on (phi, x).
    #[arg(long)]
    with_x: bool,
}

impl SpanArgs {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            check: CheckOptions {
                max_depth: self.max_depth,
                num_points: self.points,
                seed: self.seed,
                ..Default::default()
            },
            parabolic: self.parabolic,
            with_x: self.with_x,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Milstein,
    Euler,
}

#[derive(Args)]
struct SimulateArgs {
    path: PathBuf,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[arg(long, env = "HYPOFLAG_SEED", default_value_t = 0)]
    seed: u64,
    /// Comma-separated prior; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "milstein")]
    scheme: SchemeArg,
    /// Write per-path trajectories as CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Grid stride of the CSV dump.
    #[arg(long, default_value_t = 10)]
    dump_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExamplesAction {
    List,
    /// Print the model file of an example.
    Show {
        name: String,
        #[arg(long = "N", default_value_t = 4)]
        big_n: usize,
        #[arg(long = "K", default_value_t = 2)]
        big_k: usize,
    },
    Run {
        name: String,
        /// Channels of the multi-coordinate example.
        #[arg(long = "N", default_value_t = 4)]
        big_n: usize,
        /// Subset size of the multi-coordinate example.
        #[arg(long = "K", default_value_t = 2)]
        big_k: usize,
        #[command(flatten)]
        span: SpanArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status paired with a message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn semantic(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Antipodal(..) | ModelError::Invalid(_) => Failure::semantic(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<TheoremError> for Failure {
    fn from(e: TheoremError) -> Self {
        match e {
            TheoremError::Model(m) => m.into(),
            other => Failure::semantic(other.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => Failure::input(e.to_string()),
            SimError::Model(m) => m.into(),
            other => Failure::semantic(other.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ModelSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(ModelSpec::from_json(&text)?)
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json serializes") + "\n";
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::input(e.to_string())),
    }
}

fn validate(path: &Path) -> Result<(), Failure> {
    let spec = load(path)?;
    let result = validate_model(&spec)?;
    emit(&json!({ "schema_version": SCHEMA_VERSION, "valid": result.is_valid(), "result": result }), None)?;
    if result.is_valid() {
        Ok(())
    } else {
        Err(Failure::semantic(format!("invalid model: {}", result.codes().join(", "))))
    }
}

fn run_analysis(spec: &ModelSpec, span: &SpanArgs) -> Result<hypoflag::theorems::AnalysisReport, Failure> {
    let validation = validate_model(spec)?;
    if !validation.is_valid() {
        return Err(Failure::semantic(format!("invalid model: {}", validation.codes().join(", "))));
    }
    let report = analyze(spec, &span.options())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(report)
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let spec = load(&args.path)?;
    let states = spec.n + 1;
    let prior = args.prior.clone().unwrap_or_else(|| vec![1.0 / states as f64; states]);
    let mut cfg = SimConfig::new(args.horizon, args.dt, args.paths, args.seed, prior);
    cfg.scheme = match args.scheme {
        SchemeArg::Milstein => Scheme::Milstein,
        SchemeArg::Euler => Scheme::EulerMaruyama,
    };
    if args.dump.is_some() {
        cfg.save_stride = args.dump_every.max(1);
    }
    let batch = run_batch(&spec, &cfg)?;
    if let Some(path) = &args.dump {
        let file = fs::File::create(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        batch
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    emit(&batch.summary_json(), args.out.as_deref())
}

fn lookup(name: &str, big_n: usize, big_k: usize) -> Result<corpus::ExampleDescriptor, Failure> {
    corpus::descriptor_with(name, big_n, big_k)
        .ok_or_else(|| Failure::input(format!("unknown example {name:?}; known: {}", corpus::NAMES.join(", "))))
}

fn examples(action: &ExamplesAction) -> Result<(), Failure> {
    match action {
        ExamplesAction::List => {
            let list: Vec<Value> =
                corpus::all().iter().map(|d| serde_json::to_value(d).expect("descriptor serializes")).collect();
            emit(&json!({ "schema_version": SCHEMA_VERSION, "examples": list }), None)
        }
        ExamplesAction::Show { name, big_n, big_k } => {
            let d = lookup(name, *big_n, *big_k)?;
            println!("{}", d.model.to_json());
            Ok(())
        }
        ExamplesAction::Run { name, big_n, big_k, span, out } => {
            let d = lookup(name, *big_n, *big_k)?;
            let report = run_analysis(&d.model, span)?;
            let mismatches = d.mismatches(&report);
            let status = if mismatches.is_empty() { "PASS" } else { "FAIL" };
            emit(
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "example": d.name,
                    "status": status,
                    "mismatches": mismatches,
                    "report": report.to_json_value(),
                }),
                out.as_deref(),
            )?;
            eprintln!("{}: {status}", d.name);
            if mismatches.is_empty() {
                Ok(())
            } else {
                Err(Failure::semantic(mismatches.join("; ")))
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { path } => validate(&path),
        Command::Analyze { path, span, out } => {
            let spec = load(&path)?;
            let report = run_analysis(&spec, &span)?;
            emit(&report.to_json_value(), out.as_deref())
        }
        Command::Simulate(args) => simulate(&args),
        Command::Examples { action } => examples(&action),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
