pub mod gradcheck;
pub mod interrogate;
pub mod lexfreq;
pub mod loocv;
pub mod preprocess;
pub mod train;

use std::path::Path;

use anyhow::{bail, Context, Result};

use pplab_core::corpus::PreprocessConfig;
use pplab_core::interrogation::{generate_variants, narrative_from_text, read_narratives_dir, SubstitutionTable};
use pplab_core::{Corpus, FrequencyBand, InterpolationWeight, TokenSequence};

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    Corpus::read_jsonl_file(path).with_context(|| format!("reading corpus {}", path.display()))
}

pub fn parse_alphas(values: &[f64]) -> Result<Vec<InterpolationWeight>> {
    if values.is_empty() {
        bail!("at least one alpha is required");
    }
    values
        .iter()
        .map(|&a| InterpolationWeight::new(a).map_err(Into::into))
        .collect()
}

/// Band variants from either a directory of `<band>.txt` narratives or a
/// baseline narrative plus a substitution table.
pub fn load_variants(
    narratives: Option<&Path>,
    baseline: Option<&Path>,
    substitutions: Option<&Path>,
) -> Result<Vec<(FrequencyBand, TokenSequence)>> {
    let cfg = PreprocessConfig::default();
    match (narratives, baseline, substitutions) {
        (Some(dir), None, None) => Ok(read_narratives_dir(dir, &cfg)?),
        (None, Some(base), Some(table)) => {
            let text = std::fs::read_to_string(base).with_context(|| format!("reading {}", base.display()))?;
            let base = narrative_from_text(&text, FrequencyBand::Baseline, &cfg);
            let table = SubstitutionTable::read_csv(table)?;
            Ok(generate_variants(&base, &table))
        }
        _ => bail!("give either --narratives DIR, or --baseline FILE together with --substitutions CSV"),
    }
}
