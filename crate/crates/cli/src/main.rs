//! `main-effects`: estimate main-effect curves, run the verification
//! experiments, or serve a benchmark function over the predictor protocol.

mod estimate;
mod output;
mod verify;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use main_effects::benchmarks::BenchmarkFunction;
use main_effects::model::{DependenceLevel, DEFAULT_BINS, DEFAULT_DELTA, DEFAULT_GRID_SIZE, DEFAULT_NOISE_FRACTION};
use main_effects::protocol::serve;
use main_effects::Error;

#[derive(Parser)]
#[command(name = "main-effects", version, about = "Main-effect curves for black-box models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate main-effect curves and write one CSV per variable and method.
    Estimate(EstimateArgs),
    /// Run a verification experiment; exit status 1 if its tolerance fails.
    Verify(VerifyArgs),
    /// Answer predictor-protocol requests on stdin/stdout with a benchmark function.
    ServeOracle {
        #[arg(long)]
        function: String,
    },
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["function", "data"]))]
pub struct EstimateArgs {
    /// Benchmark function to sample inputs from.
    #[arg(long)]
    pub function: Option<String>,
    /// CSV with a header row; the last column is the response.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `oracle`, `nn`, or `external:<command>`.
    #[arg(long, default_value = "oracle")]
    pub predictor: String,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    pub method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Sample count for --function (default 100 per input dimension).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "independent")]
    pub dependence: DependenceLevel,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    /// Response noise variance as a fraction of the response variance, used
    /// when training `nn` on sampled data.
    #[arg(long, default_value_t = DEFAULT_NOISE_FRACTION)]
    pub noise_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Pd,
    Ale,
    A2d2e,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Lemma1,
    Lemma2,
    Consistency,
    OrmseTrend,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub check: Check,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the report; nothing is written when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input dimension for lemma2 (default: 2, 3 and 4).
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Rows in the bin for lemma1/lemma2.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long, default_value_t = 0.025)]
    pub width: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Repetitions for ormse-trend.
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long, default_value = "simple-1")]
    pub function: String,
    #[arg(long, default_value = "high")]
    pub dependence: DependenceLevel,
    /// Monte-Carlo draws per grid point for reference curves.
    #[arg(long, default_value_t = 100_000)]
    pub truth_samples: usize,
    /// Fill the wall_ms column; leaves outputs run-dependent.
    #[arg(long)]
    pub timings: bool,
}

/// Failures, each tied to an exit status.
#[derive(Debug)]
pub enum CliError {
    CheckFailed(String),
    Invalid(String),
    Predictor(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Predictor(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::CheckFailed(m) | CliError::Invalid(m) | CliError::Predictor(m) | CliError::Io(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::External { .. }
            | Error::Protocol(_)
            | Error::NonFiniteOutput { .. }
            | Error::OutputLength { .. }
            | Error::TrainingDiverged { .. } => CliError::Predictor(message),
            Error::Io(_) => CliError::Io(message),
            _ => CliError::Invalid(message),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn serve_oracle(function: &str) -> Result<(), CliError> {
    let f: BenchmarkFunction = function.parse()?;
    let stdin = io::stdin();
    serve(&f, stdin.lock(), io::stdout().lock())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => estimate::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::ServeOracle { function } => serve_oracle(&function),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
