//! `pplab`: train twin language models on picture-description transcripts,
//! score held-out speakers by paired perplexity, and probe the models.

mod commands;
mod options;
mod output;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pplab", version, about = "Paired-perplexity language models for dementia transcripts")]
struct Cli {
    /// Worker threads for LOOCV folds (default: all cores)
    #[arg(long, global = true, env = "PPLAB_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a directory of CHAT transcripts into a corpus file
    Preprocess(commands::preprocess::Args),
    /// Train one language model on one group of a corpus
    Train(commands::train::Args),
    /// Participant-level leave-one-out evaluation of twin models
    Loocv(commands::loocv::Args),
    /// Perplexity curves over frequency-band perturbed narratives
    Interrogate(commands::interrogate::Args),
    /// Mean log lexical frequency, band validation and the perplexity regression
    Lexfreq(commands::lexfreq::Args),
    /// Compare analytic and finite-difference gradients on a tiny model
    Gradcheck(commands::gradcheck::Args),
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Preprocess(a) => commands::preprocess::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Loocv(a) => commands::loocv::run(a, cli.jobs),
        Command::Interrogate(a) => commands::interrogate::run(a),
        Command::Lexfreq(a) => commands::lexfreq::run(a),
        Command::Gradcheck(a) => commands::gradcheck::run(a),
    }
}
