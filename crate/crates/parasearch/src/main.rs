use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use parasearch::pipeline::{
    cmd_analyze, cmd_collect, cmd_evaluate, cmd_label, cmd_preprocess, cmd_search, cmd_sweep,
    cmd_train_lm, cmd_train_surrogate, AnalyzeOpts, CollectOpts, EvaluateOpts, LabelOpts,
    PipelineConfig, PreprocessOpts, SearchOpts, SweepOpts, TrainLmOpts, TrainSurrogateOpts,
};
use parasearch::Result;

/// Paraphrase sentences by simulated annealing over word edits, train
/// surrogate objectives from the recorded searches, and diagnose how the
/// guided searches behave.
#[derive(Parser)]
#[command(name = "parasearch", version, arg_required_else_help = true)]
struct Cli {
    /// Flat `key = value` config file; command flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the vocabulary from a raw corpus.
    Preprocess(PreprocessOpts),
    /// Train the forward and backward n-gram language models.
    TrainLm(TrainLmOpts),
    /// Paraphrase a file of sentences, recording the search trajectories.
    Search(SearchOpts),
    /// Record baseline search trajectories over the training corpus.
    Collect(CollectOpts),
    /// Turn recorded trajectories into surrogate training data.
    Label(LabelOpts),
    /// Fit a surrogate objective on labeled data.
    TrainSurrogate(TrainSurrogateOpts),
    /// Score paraphrase outputs with BLEU and iBLEU.
    Evaluate(EvaluateOpts),
    /// Diagnose one trajectory file under a chosen objective.
    Analyze(AnalyzeOpts),
    /// Sweep the surrogate mixture weight and write diagnostic tables.
    Sweep(SweepOpts),
}

fn run(cli: &Cli) -> Result<String> {
    let cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match &cli.command {
        Command::Preprocess(opts) => cmd_preprocess(&cfg, opts),
        Command::TrainLm(opts) => cmd_train_lm(&cfg, opts),
        Command::Search(opts) => cmd_search(&cfg, opts),
        Command::Collect(opts) => cmd_collect(&cfg, opts),
        Command::Label(opts) => cmd_label(&cfg, opts),
        Command::TrainSurrogate(opts) => cmd_train_surrogate(&cfg, opts),
        Command::Evaluate(opts) => cmd_evaluate(&cfg, opts),
        Command::Analyze(opts) => cmd_analyze(&cfg, opts),
        Command::Sweep(opts) => cmd_sweep(&cfg, opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
