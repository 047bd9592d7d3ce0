//! Command line front end: simulate germ-grain realisations, describe their
//! components, and decide whether two groups of images come from the same
//! distribution.

mod commands;
mod config;
mod models;

use std::fmt;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::models::{ModelName, ModelOpts};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unknown keys, missing required inputs, invalid values.
    Usage(String),
    Lib(randset::Error),
    /// Library error tied to a specific input file.
    InFile(PathBuf, randset::Error),
    /// Filesystem failure on a path the CLI itself touched.
    Io(PathBuf, io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::InFile(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl From<randset::Error> for CliError {
    fn from(e: randset::Error) -> Self {
        CliError::Lib(e)
    }
}

fn lib_exit_code(e: &randset::Error) -> u8 {
    match e {
        randset::Error::InvalidParam(_) | randset::Error::ShapeMismatch { .. } => 2,
        randset::Error::Io(_)
        | randset::Error::Decode { .. }
        | randset::Error::UnsupportedFormat(_) => 3,
        randset::Error::EmptyInput(_) | randset::Error::TooFewSamples { .. } => 4,
    }
}

impl CliError {
    /// 2 = usage, 3 = I/O or decoding, 4 = not enough data to test.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_, _) => 3,
            CliError::Lib(e) | CliError::InFile(_, e) => lib_exit_code(e),
        }
    }
}

/// Flags every subcommand understands.
#[derive(Debug, Clone, Args)]
pub struct CommonOpts {
    /// Config file with `key = value` defaults for any long flag
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed; falls back to config `seed`, then $RANDSET_SEED, then 0
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing [default: .]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Component extraction and image loading flags.
#[derive(Debug, Clone, Args)]
pub struct ExtractOpts {
    /// Foreground adjacency: four or eight [default: eight]
    #[arg(long, value_name = "MODE")]
    pub connectivity: Option<String>,
    /// Drop components with fewer pixels than this [default: 4]
    #[arg(long)]
    pub min_pixels: Option<usize>,
    /// Drop components touching the window border
    #[arg(long)]
    pub discard_border: bool,
    /// Swap foreground and background after loading
    #[arg(long)]
    pub invert: bool,
    /// Grey level at or above which a pixel is foreground [default: 128]
    #[arg(long)]
    pub threshold: Option<u8>,
}

/// Descriptor flags: how boundary curvature is probed and binned.
#[derive(Debug, Clone, Args)]
pub struct ShapeOpts {
    /// Radius of the occupancy disc in pixels [default: 5]
    #[arg(long)]
    pub radius: Option<u32>,
    /// Bin count of the curvature histogram [default: 10]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Occupancy foreground: component or image [default: component]
    #[arg(long, value_name = "SCOPE")]
    pub restrict: Option<String>,
}

/// Permutation test flags.
#[derive(Debug, Clone, Args)]
pub struct TestOpts {
    /// Largest coordinate-subset size in the histogram kernel [default: 2]
    #[arg(long)]
    pub depth: Option<usize>,
    /// Relabelling rounds per test [default: 999]
    #[arg(long)]
    pub permutations: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(
    name = "randset",
    version,
    about = "Compare random binary images by component shape: curvature histograms, \
             perimeter/area ratios, and joint permutation tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw seeded realisations of a germ-grain model as PBM images
    Simulate(SimulateArgs),
    /// Write per-component ratio and curvature-histogram tables
    Describe(DescribeArgs),
    /// Test two groups of images for equality in distribution
    Test(TestArgs),
    /// Repeated simulate-and-test runs between two models
    Experiment(ExperimentArgs),
    /// Pairwise similarity matrix over a directory of images
    Matrix(MatrixArgs),
    /// Render a CSV column as an SVG histogram over [0, 1]
    Hist(HistArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Germ-grain model to draw from
    #[arg(value_enum)]
    model: ModelName,
    /// Number of realisations to write [default: 1]
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    model_opts: ModelOpts,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Debug, Args)]
struct DescribeArgs {
    /// Input images (PBM or PNG)
    #[arg(required = true, value_name = "IMAGE")]
    images: Vec<PathBuf>,
    #[command(flatten)]
    shape: ShapeOpts,
    #[command(flatten)]
    extract: ExtractOpts,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Images forming the first sample
    #[arg(long = "side-a", required = true, num_args = 1.., value_name = "IMAGE")]
    side_a: Vec<PathBuf>,
    /// Images forming the second sample
    #[arg(long = "side-b", required = true, num_args = 1.., value_name = "IMAGE")]
    side_b: Vec<PathBuf>,
    /// Components drawn per side; 0 keeps every component [default: 10]
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    shape: ShapeOpts,
    #[command(flatten)]
    test: TestOpts,
    #[command(flatten)]
    extract: ExtractOpts,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Model behind the first sample
    #[arg(long = "model-a", value_enum)]
    model_a: ModelName,
    /// Model behind the second sample
    #[arg(long = "model-b", value_enum)]
    model_b: ModelName,
    /// Number of tests, hence rows of pvalues.csv [default: 100]
    #[arg(long)]
    pairs: Option<usize>,
    /// Components drawn per side [default: 10, bootstrap 100]
    #[arg(long)]
    k: Option<usize>,
    /// Pool components from fixed realisation sets and resample them,
    /// instead of simulating a fresh pair of images per test
    #[arg(long)]
    bootstrap: bool,
    /// Realisations pooled per side in bootstrap mode [default: 100]
    #[arg(long)]
    realisations: Option<usize>,
    /// Source realisations when deriving an empirical law [default: 25]
    #[arg(long)]
    law_realisations: Option<usize>,
    #[command(flatten)]
    model_opts: ModelOpts,
    #[command(flatten)]
    shape: ShapeOpts,
    #[command(flatten)]
    test: TestOpts,
    #[command(flatten)]
    extract: ExtractOpts,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// Directory scanned for .pbm and .png images
    #[arg(long, value_name = "DIR")]
    dir: PathBuf,
    /// Components drawn per image and repeat [default: 20]
    #[arg(long)]
    k: Option<usize>,
    /// Tests per image pair [default: 100]
    #[arg(long)]
    repeats: Option<usize>,
    #[command(flatten)]
    shape: ShapeOpts,
    #[command(flatten)]
    test: TestOpts,
    #[command(flatten)]
    extract: ExtractOpts,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Debug, Args)]
struct HistArgs {
    /// CSV file with a header row
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Column to bin [default: p_joint]
    #[arg(long)]
    column: Option<String>,
    /// Number of bins across [0, 1] [default: 20]
    #[arg(long)]
    bins: Option<usize>,
    #[command(flatten)]
    common: CommonOpts,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Describe(args) => commands::cmd_describe(args),
        Command::Test(args) => commands::cmd_test(args),
        Command::Experiment(args) => commands::cmd_experiment(args),
        Command::Matrix(args) => commands::cmd_matrix(args),
        Command::Hist(args) => commands::cmd_hist(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
