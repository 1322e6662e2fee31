use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forest_explain::Error;

mod commands;

#[derive(Parser)]
#[command(name = "forest-explain", version, about = "Rule explanations for tree-ensemble classifiers")]
struct Cli {
    /// Progress messages on standard error; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a random forest and write model.json.
    Train(TrainArgs),
    /// Write every root-to-leaf rule of a model as rules.jsonl.
    Extract(ExtractArgs),
    /// Fidelity, scale and accuracy of raw rules or an explanation.
    Evaluate(EvaluateArgs),
    /// Search (phi, theta, psi, k) for the best-scoring explanation.
    Optexplain(ExplainArgs),
    /// Search (phi, theta, psi, k) for an explanation suited to class profiles.
    Proexplain(ExplainArgs),
    /// One interval profile per class.
    Profile(ProfileArgs),
    /// Classify rows with an explanation and list the rules that fired.
    Predict(PredictArgs),
    /// Paint class profiles over a pixel grid as PPM images.
    Render(RenderArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled CSV.
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value = "class")]
    label: String,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Unlimited when absent.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Features tried at each split; round(sqrt(n)) when absent.
    #[arg(long)]
    features_per_split: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    /// Hold out this fraction as test.csv and train on the rest.
    #[arg(long)]
    holdout: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
pub struct Manual {
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    psi: Option<f64>,
    /// Rules kept per group; with phi, theta and psi skips the search.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args, Clone)]
pub struct Search {
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 20)]
    swarm: usize,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV to evaluate on; labels are used for accuracy when present.
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "class")]
    label: String,
    /// Rules written by `extract`.
    #[arg(long, conflicts_with = "explanation")]
    rules: Option<PathBuf>,
    /// Explanation written by `optexplain` or `proexplain`.
    #[arg(long)]
    explanation: Option<PathBuf>,
    #[command(flatten)]
    manual: Manual,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset D; labels are ignored by the search.
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "class")]
    label: String,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    manual: Manual,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    model: PathBuf,
    /// Explanation written by `proexplain`; searched for when absent.
    #[arg(long, required_unless_present = "test")]
    explanation: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value = "class")]
    label: String,
    #[command(flatten)]
    search: Search,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    explanation: PathBuf,
    /// Rows to classify.
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "class")]
    label: String,
    /// Also write predictions.jsonl here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// Data whose observed ranges close open intervals.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value = "class")]
    label: String,
    /// Grid width; square grid when absent.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 3,
        Error::Parse { .. } => 4,
        Error::Data { .. } => 5,
        Error::Validation(_) => 6,
        Error::Contradiction { .. } => 7,
        Error::InvalidInput(_) => 8,
        Error::Infeasible(_) => 9,
        Error::Fitness { .. } => 10,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = commands::Log(cli.verbose);
    let result = match cli.command {
        Command::Train(a) => commands::train(a, log),
        Command::Extract(a) => commands::extract(a, log),
        Command::Evaluate(a) => commands::evaluate(a, log),
        Command::Optexplain(a) => commands::optexplain(a, log),
        Command::Proexplain(a) => commands::proexplain(a, log),
        Command::Profile(a) => commands::profile(a, log),
        Command::Predict(a) => commands::predict(a, log),
        Command::Render(a) => commands::render(a, log),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
