//! Command-line front end: simulate the benchmark plant, identify operators
//! from records or a live stream, validate models, reproduce the benchmark
//! grids and run the structural analyses.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "urysohn",
    version,
    about = "Discrete Urysohn operator toolkit: simulation, identification, analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a control signal, run the benchmark plant and write CSVs.
    Simulate(SimulateArgs),
    /// Identify an operator from records or a line stream on stdin.
    Identify(IdentifyArgs),
    /// Evaluate a model against a reference record and report the error.
    Validate(ValidateArgs),
    /// Run a benchmark grid and emit per-replication and summary CSVs.
    Table(TableArgs),
    /// Structural analysis: system rank, describability, classification.
    Analyze(AnalyzeArgs),
    /// Re-execute a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ControlKind {
    /// All-zero control (plant stays at rest from rest).
    Zero,
    /// Piecewise-constant random levels.
    Discrete,
    /// Reflected random walk in [0, 1].
    Walk,
    /// Read the fine control from a signal CSV.
    Csv,
}

#[derive(Args)]
struct PlantArgs {
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 0.5)]
    h: f64,
    /// Plant integration step.
    #[arg(long = "dt", default_value_t = std::f64::consts::TAU / 128.0)]
    dt: f64,
    #[arg(long, default_value_t = 0.0)]
    y0: f64,
    #[arg(long, default_value_t = 0.0)]
    v0: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ControlKind::Discrete)]
    control: ControlKind,
    /// Control CSV path (with --control csv).
    #[arg(long)]
    control_csv: Option<std::path::PathBuf>,
    #[arg(long = "t-max", default_value_t = 1e4)]
    t_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hold interval of the discrete control and the coarse sampling step.
    #[arg(long = "coarse-dt", default_value_t = std::f64::consts::TAU / 8.0)]
    coarse_dt: f64,
    /// Control quantum (level spacing).
    #[arg(long = "x-step", default_value_t = 0.1)]
    x_step: f64,
    #[arg(long, default_value_t = 8)]
    rows: usize,
    #[arg(long, default_value_t = 11)]
    cols: usize,
    #[arg(long = "walk-rate", default_value_t = 0.05)]
    walk_rate: f64,
    #[command(flatten)]
    plant: PlantArgs,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: std::path::PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IdentMode {
    Quantized,
    Interpolated,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Input signal CSV ("t,value").
    #[arg(long, conflicts_with_all = ["pairs", "stream"], requires = "output")]
    input: Option<std::path::PathBuf>,
    /// Output signal CSV ("t,value").
    #[arg(long)]
    output: Option<std::path::PathBuf>,
    /// Combined record CSV ("t,x,y", or "t,x1,..,xp,y" with --dims).
    #[arg(long, conflicts_with = "stream")]
    pairs: Option<std::path::PathBuf>,
    /// Read line-delimited "x,y" pairs from stdin.
    #[arg(long)]
    stream: bool,
    /// Per-input level counts for multi-input records, e.g. "4,4"; the
    /// inputs are flattened onto a single level axis and cols becomes
    /// their product.
    #[arg(long, requires = "pairs")]
    dims: Option<String>,
    #[arg(long, alias = "m", default_value_t = 8)]
    rows: usize,
    #[arg(long, alias = "n", default_value_t = 11)]
    cols: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long = "x-min", default_value_t = 0.0)]
    x_min: f64,
    #[arg(long = "x-max", default_value_t = 1.0)]
    x_max: f64,
    #[arg(long, value_enum, default_value_t = IdentMode::Quantized)]
    mode: IdentMode,
    /// Forward passes over the record (ignored in stream mode).
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    /// Early-stop residual tolerance; 0 disables early stopping.
    #[arg(long = "stop-tol", default_value_t = 0.0)]
    stop_tol: f64,
    /// Consecutive small-residual steps required to stop.
    #[arg(long = "stop-window", default_value_t = 1)]
    stop_window: usize,
    /// Linearly extrapolate never-updated edge columns afterwards.
    #[arg(long = "extrapolate-edges")]
    extrapolate_edges: bool,
    /// Warm-start model JSON (counters resume too when present).
    #[arg(long = "init-model")]
    init_model: Option<std::path::PathBuf>,
    /// Checkpoint the model every K samples (stream mode).
    #[arg(long = "checkpoint-every")]
    checkpoint_every: Option<usize>,
    #[arg(long = "model-out", default_value = "model.json")]
    model_out: std::path::PathBuf,
    #[arg(long = "residuals-out")]
    residuals_out: Option<std::path::PathBuf>,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: std::path::PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    /// Scaled L1 error with warm-up samples excluded.
    L1,
    /// L2 error normalised by reference span and record length.
    L2,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: std::path::PathBuf,
    #[arg(long, conflicts_with = "record", requires = "reference")]
    input: Option<std::path::PathBuf>,
    /// Reference output CSV.
    #[arg(long)]
    reference: Option<std::path::PathBuf>,
    /// Combined record CSV ("t,x,y" or "t,x1,..,xp,y"); multi-input records
    /// are flattened through the model's dims metadata.
    #[arg(long)]
    record: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = Metric::L1)]
    metric: Metric,
    /// Error scale for the L1 metric; defaults to the benchmark plant's
    /// maximum static displacement.
    #[arg(long = "y-smax")]
    y_smax: Option<f64>,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: std::path::PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Grid {
    /// The baseline discrete-control cell, 8 replications.
    Headline,
    /// Memory-depth x level-count grid under walk control.
    T1,
    /// Noise x alpha grid with a noisy output.
    T2,
    /// Noise x alpha grid with noisy input and output.
    T3,
}

#[derive(Args)]
struct TableArgs {
    #[arg(value_enum)]
    grid: Grid,
    /// Replications per cell (default: 8 for headline, 9 for grids).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Restrict t1 to given cells, e.g. "m=8:n=41,m=32:n=81".
    #[arg(long)]
    cells: Option<String>,
    /// Restrict t2/t3 to one noise level.
    #[arg(long)]
    sigma: Option<f64>,
    /// Restrict t2/t3 to one stabilisation parameter.
    #[arg(long)]
    alpha: Option<f64>,
    /// Worker threads for replications (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: std::path::PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(subcommand)]
    what: AnalyzeCommand,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Brute-force rank of the full window-enumeration system.
    Rank {
        #[arg(long, alias = "m")]
        rows: usize,
        #[arg(long, alias = "n")]
        cols: usize,
    },
    /// Classify a model file as linear, Hammerstein or general.
    Classify {
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Probe a system for describability by a finite operator.
    Describability {
        /// Model JSON to probe as a black box.
        #[arg(long, conflicts_with_all = ["plant", "record"])]
        model: Option<std::path::PathBuf>,
        /// Built-in counterexample plants: "feedback" or "fir".
        #[arg(long, conflicts_with = "record")]
        plant: Option<String>,
        /// Recorded "t,x,y" CSV probed by exact window matching.
        #[arg(long)]
        record: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 4)]
        cols: usize,
        #[arg(long = "x-min", default_value_t = 0.0)]
        x_min: f64,
        #[arg(long = "x-max", default_value_t = 1.0)]
        x_max: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Args)]
struct ReplayArgs {
    manifest: std::path::PathBuf,
}

fn exit_code_for(err: &urysohn::Error) -> u8 {
    use urysohn::Error::*;
    match err {
        InvalidConfig(_) => 2,
        SeriesTooShort { .. }
        | LengthMismatch { .. }
        | LevelOutOfRange { .. }
        | MalformedModel { .. }
        | BadPinPattern(_)
        | InsufficientQueries(_)
        | DegenerateReference
        | BadBlockSize(_)
        | Parse { .. }
        | Io(_) => 3,
        TooLarge(_) | Inconsistent { .. } | SingularGeometry { .. } | NonFinite { .. } => 4,
    }
}

fn dispatch(cli: Cli, argv: &[String]) -> urysohn::Result<()> {
    match cli.command {
        Command::Simulate(args) => commands::simulate::run(args, argv),
        Command::Identify(args) => commands::identify::run(args, argv),
        Command::Validate(args) => commands::validate::run(args, argv),
        Command::Table(args) => commands::table::run(args, argv),
        Command::Analyze(args) => commands::analyze::run(args),
        Command::Replay(args) => {
            let manifest = manifest::RunManifest::read(&args.manifest)?;
            eprintln!("replaying: urysohn {}", manifest.argv.join(" "));
            let full: Vec<String> = std::iter::once("urysohn".to_string())
                .chain(manifest.argv.iter().cloned())
                .collect();
            let cli = Cli::parse_from(&full);
            dispatch(cli, &manifest.argv)
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match dispatch(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
