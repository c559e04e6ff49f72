use std::path::PathBuf;

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pplab_core::lm::{gradient_check, GradCheckReport};
use pplab_core::{LmConfig, TokenSequence, Vocabulary};

use crate::output::{write_json, Meta};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, default_value_t = 20)]
    vocab_size: usize,
    #[arg(long, default_value_t = 12)]
    embedding_dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "12")]
    layer_dims: Vec<usize>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    tie_embeddings: bool,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random tokens in the probe sequence
    #[arg(long, default_value_t = 12)]
    length: usize,
    /// JSON report; printed to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Output<'a> {
    report: &'a GradCheckReport,
    tolerance: f64,
    passed: bool,
}

pub fn run(a: Args) -> Result<()> {
    if a.vocab_size < 3 {
        bail!("--vocab-size must be at least 3");
    }
    let words: Vec<String> = (0..a.vocab_size - 2).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::from_tokens(words.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let tokens = (0..a.length).map(|_| words[rng.gen_range(0..words.len())].clone()).collect();
    let seq = TokenSequence::new("probe", 0, tokens);
    let config = LmConfig {
        embedding_dim: a.embedding_dim,
        layer_dims: a.layer_dims.clone(),
        tie_embeddings: a.tie_embeddings,
        weight_drop: 0.0,
        bptt_window: a.window,
        seed: a.seed,
        ..Default::default()
    };
    let report = gradient_check(&config, &vocab, &seq, a.epsilon)?;
    let passed = report.max_relative_error <= a.tolerance;
    let out = Output {
        report: &report,
        tolerance: a.tolerance,
        passed,
    };
    let meta = Meta::new("gradcheck", &serde_json::json!({ "lm_config": config, "epsilon": a.epsilon, "length": a.length }))?;
    match &a.out {
        Some(path) => write_json(path, &meta, &out)?,
        None => println!("{}", serde_json::to_string_pretty(&out)?),
    }
    eprintln!(
        "max relative error {:.3e} over {} parameters",
        report.max_relative_error, report.parameters_checked
    );
    if !passed {
        bail!("gradient check exceeded tolerance {:e}", a.tolerance);
    }
    Ok(())
}
