use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Serialize;

use pplab_core::corpus::{load_chat_dir, read_metadata_csv, PreprocessConfig};

use crate::output::{write_with_meta, Meta};

#[derive(clap::Args)]
pub struct Args {
    /// Directory searched recursively for `.cha` files
    #[arg(long)]
    chat_dir: PathBuf,
    /// CSV `participant_id,group,age,education,visit,mmse`; overrides headers
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// Output corpus, JSON lines
    #[arg(long)]
    out: PathBuf,
    /// Fail if any file cannot be parsed
    #[arg(long)]
    strict: bool,
    /// Do not append an end-of-utterance token after each utterance
    #[arg(long)]
    no_eos: bool,
}

#[derive(Serialize)]
struct Summary {
    files_parsed: usize,
    files_failed: usize,
    empty_transcripts: usize,
    participants: usize,
    transcripts: usize,
}

pub fn run(a: Args) -> Result<()> {
    let cfg = PreprocessConfig {
        append_eos: !a.no_eos,
        ..Default::default()
    };
    let sidecar = a.metadata.as_deref().map(read_metadata_csv).transpose()?;
    let (corpus, load) = load_chat_dir(&a.chat_dir, sidecar.as_deref(), &cfg)?;
    for (path, err) in &load.failures {
        eprintln!("failed: {}: {err}", path.display());
    }
    for w in &load.warnings {
        log::warn!("{w}");
    }
    if load.files_parsed == 0 {
        bail!("no CHAT file could be parsed under {}", a.chat_dir.display());
    }
    if a.strict && !load.failures.is_empty() {
        bail!("{} file(s) failed to parse", load.failures.len());
    }

    let summary = Summary {
        files_parsed: load.files_parsed,
        files_failed: load.failures.len(),
        empty_transcripts: load.empty_transcripts,
        participants: corpus.len(),
        transcripts: corpus.transcript_count(),
    };
    let mut meta = Meta::new("preprocess", &serde_json::json!({ "preprocess": cfg, "summary": summary }))?
        .input("chat_dir", &a.chat_dir);
    if let Some(m) = &a.metadata {
        meta = meta.input("metadata", m);
    }
    write_with_meta(&a.out, &meta, |w| Ok(corpus.write_jsonl(w)?))?;
    eprintln!(
        "parsed {} file(s), {} failed, {} empty; {} participants, {} transcripts",
        summary.files_parsed, summary.files_failed, summary.empty_transcripts, summary.participants, summary.transcripts
    );
    Ok(())
}
