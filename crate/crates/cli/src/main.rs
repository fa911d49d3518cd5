mod commands;
mod protocol;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tesskern::learner::Method;
use tesskern::LabelColumn;

/// Exit codes by failure class.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "tesskern", version, about = "Tessellated-kernel SVM learning")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Fit a model and write it as JSON.
    Train(TrainArgs),
    /// Write decision values and labels for every row of a dataset.
    Predict(PredictArgs),
    /// Print the test-set accuracy of a model.
    Evaluate(EvaluateArgs),
    /// Repeated split / cross-validate / train / test protocol.
    Benchmark(BenchmarkArgs),
    /// Residual error and time against training-set size.
    ScalingStudy(ScalingArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Circle,
    Spiral,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Shape,
    /// Number of points.
    #[arg(short, long)]
    pub m: usize,
    /// Standard deviation of Gaussian noise added to the features.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Spiral turns.
    #[arg(long, default_value_t = tesskern::data::synth::SPIRAL_TURNS)]
    pub turns: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

/// Learner settings shared by `train`, `benchmark` and `scaling-study`.
#[derive(Args, Debug, Clone)]
pub struct LearnerArgs {
    /// Polynomial degree of the tessellated basis.
    #[arg(short, long, default_value_t = 1)]
    pub degree: u32,
    /// Trace bound of the kernel matrix (default 2 q).
    #[arg(long)]
    pub trace_bound: Option<f64>,
    /// Number of random PSD matrices for the random tessellated library.
    #[arg(long = "basis-size", default_value_t = 300)]
    pub basis_size: usize,
    /// Outer iterations of the saddle-point learner.
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Initial supergradient step (default: pilot search).
    #[arg(long)]
    pub step: Option<f64>,
    /// Average the last k rank-one kernels of the saddle learner.
    #[arg(long, default_value_t = 1)]
    pub average_last: usize,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Label column: `last`, a zero-based index or a header name.
    #[arg(long, default_value = "last")]
    pub label_column: LabelColumn,
    #[arg(short, long, default_value = "tessellated-saddle")]
    pub learner: Method,
    /// Box bound C.
    #[arg(short = 'c', long = "c", conflicts_with = "c_grid")]
    pub c: Option<f64>,
    /// Comma-separated C values; selects C by cross-validation.
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub learner_args: LearnerArgs,
    /// Model file to write.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Optional JSON training summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "last")]
    pub label_column: LabelColumn,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "last")]
    pub label_column: LabelColumn,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Dataset CSV files (labels in the last column unless overridden).
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long, default_value = "last")]
    pub label_column: LabelColumn,
    /// Learners to compare.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "tessellated-saddle,mkl-random-tess,mkl-gaussian-poly,mkl-combined"
    )]
    pub learners: Vec<Method>,
    #[arg(long, default_value_t = 30)]
    pub trials: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10,100")]
    pub c_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Base seed; trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub learner_args: LearnerArgs,
    /// Directory for records.csv, timings.csv and table.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    #[arg(long, value_enum, default_value = "spiral")]
    pub kind: Shape,
    /// Training-set sizes.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub test_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = tesskern::data::synth::SPIRAL_TURNS)]
    pub turns: f64,
    #[arg(long, value_delimiter = ',', default_value = "tessellated-saddle")]
    pub learners: Vec<Method>,
    /// Fixed C; without it C is chosen by cross-validation over the grid.
    #[arg(short = 'c', long = "c")]
    pub c: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10,100")]
    pub c_grid: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub learner_args: LearnerArgs,
    /// Directory for records.csv and timings.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// A failure with its exit-code class.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            error: anyhow::anyhow!(msg.into()),
        }
    }
}

impl From<tesskern::Error> for Failure {
    fn from(e: tesskern::Error) -> Self {
        use tesskern::Error as E;
        let code = if e.is_numerical() {
            EXIT_NUMERICAL
        } else if matches!(e, E::InvalidParameter(_)) {
            EXIT_USAGE
        } else {
            EXIT_IO
        };
        Failure { code, error: e.into() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            error: e.into(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure {
            code: EXIT_IO,
            error: e.into(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: EXIT_IO,
            error: e.into(),
        }
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Benchmark(a) => protocol::benchmark(&a),
        Command::ScalingStudy(a) => protocol::scaling_study(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
