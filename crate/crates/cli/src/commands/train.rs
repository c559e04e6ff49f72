use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use pplab_core::lm::{init_params, load_embeddings, train, write_checkpoint_file};
use pplab_core::{Group, TrainReport, Vocabulary};

use super::read_corpus;
use crate::options::{effective_run_config, ConfigArgs, LmArgs};
use crate::output::{write_json, Meta};

#[derive(clap::Args)]
pub struct Args {
    /// Corpus produced by `preprocess`
    #[arg(long)]
    corpus: PathBuf,
    /// Which group's transcripts to train on
    #[arg(long, value_parser = parse_group)]
    group: Group,
    /// Checkpoint path; a `<out>.report.json` is written beside it
    #[arg(long)]
    out: PathBuf,
    /// Word vectors (`.vec` text format) to initialise the embeddings
    #[arg(long)]
    pretrained: Option<PathBuf>,
    /// Minimum corpus count for a word to get its own id
    #[arg(long)]
    min_count: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    lm: LmArgs,
}

pub fn parse_group(s: &str) -> Result<Group, String> {
    Group::parse(s).ok_or_else(|| format!("unknown group `{s}` (use control or dementia)"))
}

#[derive(Serialize)]
struct Output<'a> {
    group: Group,
    vocab_size: usize,
    transcripts: usize,
    train: &'a TrainReport,
}

pub fn run(a: Args) -> Result<()> {
    let mut run = effective_run_config(&a.config, &a.lm, a.pretrained.is_some())?;
    if let Some(m) = a.min_count {
        run.min_count = m;
    }
    if a.pretrained.is_some() {
        run.pretrained_embeddings = a.pretrained.clone();
    }
    run.validate()?;
    let corpus = read_corpus(&a.corpus)?;
    let seqs = corpus.group_sequences(a.group);
    if seqs.is_empty() {
        bail!("corpus has no {} transcripts", a.group);
    }
    // Vocabulary over the whole corpus, so a control and a dementia model
    // trained from the same file with the same seed can be interpolated.
    let vocab = Vocabulary::build(&corpus.all_sequences(), run.min_count)?;
    let table = run.pretrained_embeddings.as_deref().map(load_embeddings).transpose()?;
    let lm = &run.lm_config;
    let init = init_params::<f32>(lm, &vocab, lm.seed, table.as_ref())?;
    let (params, report) = train(&seqs, lm, &vocab, &init)?;
    write_checkpoint_file(&a.out, &params).with_context(|| format!("writing {}", a.out.display()))?;

    let meta = Meta::new("train", &run)?.input("corpus", &a.corpus);
    let mut report_path = a.out.clone().into_os_string();
    report_path.push(".report.json");
    write_json(
        &PathBuf::from(report_path),
        &meta,
        &Output {
            group: a.group,
            vocab_size: vocab.len(),
            transcripts: seqs.len(),
            train: &report,
        },
    )?;
    eprintln!(
        "trained {} model on {} transcripts, final loss {:.4}",
        a.group,
        seqs.len(),
        report.final_loss
    );
    Ok(())
}
