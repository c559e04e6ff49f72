use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use pplab_core::lexstats::{
    mean_log_lexical_frequency, regression_dataset, spearman, FrequencyLexicon, PosSidecar, PosSource,
    RegressionResult, WordlistTagger,
};
use pplab_core::PairedScore;

use super::{load_variants, read_corpus};
use crate::output::{write_json, Meta};

#[derive(clap::Args)]
pub struct Args {
    /// Word frequency list, `word<TAB>per_million` per line
    #[arg(long)]
    lexicon: PathBuf,
    /// POS tags, JSON lines `{participant_id, visit, tags}`
    #[arg(long, conflicts_with_all = ["nouns", "verbs"])]
    pos: Option<PathBuf>,
    /// Noun list, one per line (with --verbs)
    #[arg(long, requires = "verbs")]
    nouns: Option<PathBuf>,
    #[arg(long, requires = "nouns")]
    verbs: Option<PathBuf>,
    /// Measure corpus transcripts
    #[arg(long, conflicts_with_all = ["narratives", "baseline"])]
    corpus: Option<PathBuf>,
    /// Measure band narratives and check the frequency rises with the band
    #[arg(long)]
    narratives: Option<PathBuf>,
    #[arg(long, requires = "substitutions")]
    baseline: Option<PathBuf>,
    #[arg(long)]
    substitutions: Option<PathBuf>,
    /// `scores.csv` from `loocv`; with --corpus, fits the frequency regression
    #[arg(long, requires = "corpus")]
    scores: Option<PathBuf>,
    /// Output JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Item {
    id: String,
    visit: u32,
    mean_log_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Serialize)]
struct Regression {
    participants: Vec<String>,
    excluded: Vec<(String, String)>,
    fit: RegressionResult,
}

#[derive(Serialize)]
struct Output {
    items: Vec<Item>,
    #[serde(skip_serializing_if = "Option::is_none")]
    band_spearman: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regression: Option<Regression>,
}

fn read_scores(path: &PathBuf) -> Result<Vec<PairedScore>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().collect::<Result<_, _>>().with_context(|| format!("parsing {}", path.display()))
}

pub fn run(a: Args) -> Result<()> {
    let lex = FrequencyLexicon::read(&a.lexicon)?;
    let pos: Box<dyn PosSource> = match (&a.pos, &a.nouns, &a.verbs) {
        (Some(p), None, None) => Box::new(PosSidecar::read(p)?),
        (None, Some(n), Some(v)) => Box::new(WordlistTagger::read(n, v)?),
        _ => bail!("give either --pos, or --nouns with --verbs"),
    };

    let measure = |seq: &pplab_core::TokenSequence| match pos.annotate(seq) {
        None => (None, Some("no POS annotation".to_string())),
        Some(tags) => match mean_log_lexical_frequency(seq, &tags, &lex) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };

    let mut out = Output {
        items: Vec::new(),
        band_spearman: None,
        regression: None,
    };
    let mut meta = Meta::new("lexfreq", &serde_json::json!({}))?.input("lexicon", &a.lexicon);
    if let Some(path) = &a.corpus {
        meta = meta.input("corpus", path);
        let corpus = read_corpus(path)?;
        for p in corpus.participants() {
            for seq in &p.transcripts {
                let (f, note) = measure(seq);
                out.items.push(Item {
                    id: p.participant_id.clone(),
                    visit: seq.visit,
                    mean_log_frequency: f,
                    note,
                });
            }
        }
        if let Some(scores_path) = &a.scores {
            meta = meta.input("scores", scores_path);
            let scores = read_scores(scores_path)?;
            let ds = regression_dataset(&corpus, &scores, &lex, pos.as_ref())?;
            let fit = ds.fit()?;
            out.regression = Some(Regression {
                participants: ds.participants,
                excluded: ds.excluded,
                fit,
            });
        }
    } else {
        let variants = load_variants(a.narratives.as_deref(), a.baseline.as_deref(), a.substitutions.as_deref())?;
        let mut bands = Vec::new();
        let mut freqs = Vec::new();
        for (band, seq) in &variants {
            let (f, note) = measure(seq);
            if let Some(f) = f {
                bands.push(band.severity() as f64);
                freqs.push(f);
            }
            out.items.push(Item {
                id: band.label().to_string(),
                visit: 0,
                mean_log_frequency: f,
                note,
            });
        }
        out.band_spearman = spearman(&bands, &freqs).ok();
    }
    write_json(&a.out, &meta, &out)?;
    if let Some(rho) = out.band_spearman {
        eprintln!("Spearman(band, mean log frequency) = {rho:.3}");
    }
    Ok(())
}
