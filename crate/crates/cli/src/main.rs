//! Experiment driver: preprocessing, synthetic task generation, stratified
//! splits, training under the five schemes, evaluation, ablations, and the
//! gradient check.

mod commands;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "relxfer", version, about = "Bidirectional-LSTM relation classification with transfer training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize, blind, and validate a JSONL instance file.
    Preprocess(commands::PreprocessArgs),
    /// Generate a synthetic source/target task pair.
    Synth(commands::SynthArgs),
    /// Stratified per-class split of a JSONL instance file.
    Split(commands::SplitArgs),
    /// Train under baseline|mixed|seq-full|seq-partial|multi.
    Train(commands::TrainArgs),
    /// Evaluate a checkpoint on a labeled dataset.
    Evaluate(commands::EvaluateArgs),
    /// Source-size sweep or equal-size source comparison.
    Ablate(commands::AblateArgs),
    /// Verify analytic gradients against central finite differences.
    Gradcheck(commands::GradcheckArgs),
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Preprocess(args) => commands::preprocess(args),
        Command::Synth(args) => commands::synth(args),
        Command::Split(args) => commands::split(args),
        Command::Train(args) => commands::train(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Ablate(args) => commands::ablate(args),
        Command::Gradcheck(args) => commands::gradcheck(args),
    }
}
