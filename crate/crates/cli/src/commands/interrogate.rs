use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Serialize;

use pplab_core::eval::train_twins;
use pplab_core::lm::{load_embeddings, read_checkpoint_file};
use pplab_core::{interrogation::interrogate, PerturbationCurve};

use super::{load_variants, parse_alphas, read_corpus};
use crate::options::{effective_run_config, ConfigArgs, LmArgs};
use crate::output::{write_json, write_with_meta, Meta};

#[derive(clap::Args)]
pub struct Args {
    /// Control checkpoint (with --dem)
    #[arg(long, requires = "dem", conflicts_with = "corpus")]
    con: Option<PathBuf>,
    /// Dementia checkpoint (with --con)
    #[arg(long, requires = "con")]
    dem: Option<PathBuf>,
    /// Train both models on this corpus instead of loading checkpoints
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Comma-separated interpolation weights
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    alphas: Vec<f64>,
    /// Directory of `<band>.txt` narratives including `baseline.txt`
    #[arg(long)]
    narratives: Option<PathBuf>,
    /// Baseline narrative (with --substitutions)
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// CSV `word,band_low,band_high,replacement`
    #[arg(long)]
    substitutions: Option<PathBuf>,
    #[arg(long)]
    pretrained: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    lm: LmArgs,
}

#[derive(Serialize)]
struct Output<'a> {
    curve: &'a PerturbationCurve,
}

pub fn run(a: Args) -> Result<()> {
    let alphas = parse_alphas(&a.alphas)?;
    let variants = load_variants(a.narratives.as_deref(), a.baseline.as_deref(), a.substitutions.as_deref())?;

    let mut meta_config = serde_json::json!({ "alphas": a.alphas });
    let mut inputs = Vec::new();
    let (con, dem) = match (&a.con, &a.dem, &a.corpus) {
        (Some(c), Some(d), None) => {
            inputs.push(("con", c.clone()));
            inputs.push(("dem", d.clone()));
            (read_checkpoint_file(c)?, read_checkpoint_file(d)?)
        }
        (None, None, Some(path)) => {
            let run = effective_run_config(&a.config, &a.lm, a.pretrained.is_some())?;
            run.lm_config.validate()?;
            let table = a.pretrained.as_deref().map(load_embeddings).transpose()?;
            let corpus = read_corpus(path)?;
            let twins = train_twins(&corpus, &run.lm_config, run.lm_config.seed, a.min_count, table.as_ref())?;
            meta_config["lm_config"] = serde_json::to_value(&run.lm_config)?;
            meta_config["min_count"] = a.min_count.into();
            inputs.push(("corpus", path.clone()));
            (twins.con, twins.dem)
        }
        _ => bail!("give either --con and --dem checkpoints, or --corpus"),
    };
    let curve = interrogate(&con, &dem, &alphas, &variants)?;

    let mut meta = Meta::new("interrogate", &meta_config)?;
    for (k, p) in &inputs {
        meta = meta.input(k, p);
    }
    for (k, p) in [("narratives", &a.narratives), ("baseline", &a.baseline), ("substitutions", &a.substitutions)] {
        if let Some(p) = p {
            meta = meta.input(k, p);
        }
    }
    write_json(&a.out.join("curve.json"), &meta, &Output { curve: &curve })?;
    write_with_meta(&a.out.join("curve.csv"), &meta, |w| Ok(curve.write_csv(w)?))?;
    write_with_meta(&a.out.join("perplexity.csv"), &meta, |w| Ok(curve.write_perplexity_csv(w)?))?;
    for alpha in &a.alphas {
        let row: Vec<String> = curve
            .perplexities(*alpha)
            .iter()
            .map(|(b, p)| format!("{b}={p:.2}"))
            .collect();
        eprintln!("alpha {alpha}: {}", row.join(" "));
    }
    Ok(())
}
