//! `tilr`: parse and evaluate LTLf formulas over fuzzy traces, refine
//! traces towards a target truth value, generate MNIST sequence datasets
//! and train perception models from sequence labels.

mod exit;
mod input;
mod learning;
mod logic;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tilr_core::{Implication, TraceMode};

#[derive(Parser, Debug)]
#[command(
    name = "tilr",
    version,
    about = "Temporal logic refinement of neural predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a formula and print it, its atoms and its desugared form.
    Parse(ParseArgs),
    /// Evaluate a formula on a fuzzy trace read from CSV.
    Eval(EvalArgs),
    /// Refine a fuzzy trace so that a formula reaches a target value.
    Refine(RefineArgs),
    /// Sample labelled symbolic traces and attach MNIST images.
    GenData(GenDataArgs),
    /// Train a perception model from labelled image sequences.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset.
    Test(TestArgs),
    /// Run a benchmark suite and write results.csv and summary.csv.
    Bench(BenchArgs),
}

/// A formula given as text or as a DECLARE pattern.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct FormulaArgs {
    /// Formula text, e.g. `G(p0 -> X p1)`.
    #[arg(short, long)]
    pub formula: Option<String>,
    /// DECLARE pattern, e.g. `response(p0,p1)`.
    #[arg(short, long)]
    pub pattern: Option<String>,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    /// Comma-separated atoms; inferred from the formula when omitted.
    #[arg(long, value_delimiter = ',')]
    pub atoms: Vec<String>,
    /// Also compile the formula for traces of this length and report the graph size.
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long, default_value = "material")]
    pub implication: Implication,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    /// CSV file with one column per atom and one row per instant.
    #[arg(short, long)]
    pub trace: PathBuf,
    /// Label atom value, `name=value`; repeatable.
    #[arg(short, long = "label")]
    pub labels: Vec<String>,
    #[arg(long, default_value = "material")]
    pub implication: Implication,
    /// Print the value at every instant instead of only the first.
    #[arg(long)]
    pub all_instants: bool,
}

#[derive(Args, Debug)]
pub struct RefineArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    /// CSV file with one column per atom and one row per instant.
    #[arg(short, long)]
    pub trace: PathBuf,
    /// Label atom value, `name=value`; repeatable.
    #[arg(short, long = "label")]
    pub labels: Vec<String>,
    /// Refine the knowledge formula linking the formula to this label
    /// (initialised to 0 unless given with `--label`).
    #[arg(long)]
    pub knowledge: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub target: f64,
    #[arg(long, default_value_t = 10)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value = "material")]
    pub implication: Implication,
    /// Write the refined trace here instead of standard output.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    /// Number of atoms (named p0, p1, ...) or a comma-separated list of names.
    #[arg(short, long, default_value = "2")]
    pub atoms: String,
    #[arg(short, long, default_value = "me")]
    pub mode: TraceMode,
    /// `exhaustive`, `stratified` or `short-split`; by default stratified
    /// for `me` and short-split for `nme`.
    #[arg(long)]
    pub protocol: Option<tilr_learn::data::Protocol>,
    #[arg(long)]
    pub min_len: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub max_len: usize,
    /// Symbolic traces over both splits (sampled protocols only).
    #[arg(long, default_value_t = 1000)]
    pub total: usize,
    #[arg(long, default_value_t = 5)]
    pub copies: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "TILR_MNIST_DIR")]
    pub mnist_dir: PathBuf,
    /// Output directory for train.jsonl and test.jsonl.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainOverrides {
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Formula or DECLARE pattern the data must be labelled with.
    #[arg(long)]
    pub formula: Option<String>,
    #[arg(long)]
    pub mode: Option<TraceMode>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub timeout_minutes: Option<f64>,
    #[arg(long)]
    pub implication: Option<Implication>,
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, env = "TILR_MNIST_DIR")]
    pub mnist_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub settings: TrainOverrides,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Evaluate on the test set after every epoch (`true`/`false`).
    #[arg(long)]
    pub eval_each_epoch: Option<bool>,
    #[arg(long, default_value = "model.json")]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "metrics.csv")]
    pub metrics: PathBuf,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset in JSON Lines.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, env = "TILR_MNIST_DIR")]
    pub mnist_dir: PathBuf,
    #[arg(long, default_value = "residuum")]
    pub implication: Implication,
    #[arg(long, default_value_t = 1.0)]
    pub target: f64,
    #[arg(long, default_value_t = 10)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// `single` (each template, traces up to length 4) or `conjunction`.
    #[arg(short, long)]
    pub suite: tilr_learn::bench::Suite,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<TraceMode>,
    #[arg(long, value_delimiter = ',')]
    pub atoms: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<usize>,
    /// Template indices (single) or formula indices 0..5 (conjunction).
    #[arg(long, value_delimiter = ',')]
    pub formulas: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub copies: usize,
    #[command(flatten)]
    pub settings: TrainOverrides,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse(a) => logic::parse(&a),
        Command::Eval(a) => logic::eval(&a),
        Command::Refine(a) => logic::refine(&a),
        Command::GenData(a) => learning::gen_data(&a),
        Command::Train(a) => learning::train(&a),
        Command::Test(a) => learning::test(&a),
        Command::Bench(a) => learning::bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::code_for(&e)
        }
    }
}
