use std::collections::BTreeMap;
use std::path::Path;

use super::FrequencyBand;
use crate::corpus::{preprocess_utterance, PreprocessConfig, TokenSequence, EOS_TOKEN};
use crate::error::{Error, Result};

/// Word substitutions keyed by the severity band at which they apply.
/// `None` as replacement deletes the word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubstitutionTable {
    entries: BTreeMap<String, Vec<(FrequencyBand, Option<String>)>>,
}

impl SubstitutionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, band: FrequencyBand, replacement: Option<&str>) -> Result<()> {
        if band == FrequencyBand::Baseline {
            return Err(Error::SubstitutionTable(format!(
                "`{word}`: substitutions cannot target the baseline band"
            )));
        }
        if let Some(r) = replacement {
            if !is_legal_token(r) {
                return Err(Error::SubstitutionTable(format!(
                    "`{word}`: replacement `{r}` is not a preprocessed token"
                )));
            }
        }
        let list = self.entries.entry(word.to_string()).or_default();
        if list.iter().any(|(b, _)| *b == band) {
            return Err(Error::SubstitutionTable(format!(
                "`{word}` has two entries for band {band}"
            )));
        }
        list.push((band, replacement.map(str::to_string)));
        list.sort_by_key(|(b, _)| *b);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replacement in force for `word` at `band`: the entry of the most
    /// severe band not exceeding `band`. `Some(None)` means deleted.
    pub fn resolve(&self, word: &str, band: FrequencyBand) -> Option<Option<&str>> {
        self.entries
            .get(word)?
            .iter()
            .rev()
            .find(|(b, _)| *b <= band)
            .map(|(_, r)| r.as_deref())
    }

    /// Reads `word,band_low,band_high,replacement`; an empty replacement
    /// deletes the word.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut table = Self::new();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let field = |k: usize| row.get(k).unwrap_or("");
            let bound = |k: usize| {
                field(k).parse::<f64>().map_err(|_| {
                    Error::SubstitutionTable(format!("row {}: bad band bound `{}`", i + 1, field(k)))
                })
            };
            let (low, high) = (bound(1)?, bound(2)?);
            let band = FrequencyBand::from_bounds(low, high).ok_or_else(|| {
                Error::SubstitutionTable(format!("row {}: unknown band {low}-{high}", i + 1))
            })?;
            let replacement = field(3);
            table.insert(
                field(0),
                band,
                (!replacement.is_empty()).then_some(replacement),
            )?;
        }
        Ok(table)
    }
}

fn is_legal_token(t: &str) -> bool {
    !t.is_empty()
        && t
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\'')
}

/// One variant per band, each applying every substitution whose band is no
/// more severe than its own.
pub fn generate_variants(base: &TokenSequence, table: &SubstitutionTable) -> Vec<(FrequencyBand, TokenSequence)> {
    FrequencyBand::ALL
        .into_iter()
        .map(|band| {
            let tokens = base
                .tokens
                .iter()
                .filter_map(|tok| match table.resolve(tok, band) {
                    None => Some(tok.clone()),
                    Some(Some(rep)) => Some(rep.to_string()),
                    Some(None) => None,
                })
                .collect();
            (
                band,
                TokenSequence::new(base.participant_id.clone(), base.visit, tokens),
            )
        })
        .collect()
}

/// Reads narratives stored as `<band label>.txt` (for example
/// `baseline.txt`, `1.5-2.0.txt`), one utterance per line, and preprocesses
/// them. Files with other names are ignored.
pub fn read_narratives_dir(dir: &Path, config: &PreprocessConfig) -> Result<Vec<(FrequencyBand, TokenSequence)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::file(dir, e))? {
        let path = entry?.path();
        if path.extension().is_none_or(|x| x != "txt") {
            continue;
        }
        let Some(band) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(FrequencyBand::parse)
        else {
            continue;
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
        out.push((band, narrative_from_text(&text, band, config)));
    }
    out.sort_by_key(|(b, _)| *b);
    if !out.iter().any(|(b, _)| *b == FrequencyBand::Baseline) {
        return Err(Error::MissingBaseline);
    }
    Ok(out)
}

pub fn narrative_from_text(text: &str, band: FrequencyBand, config: &PreprocessConfig) -> TokenSequence {
    let mut tokens = Vec::new();
    for line in text.lines() {
        let words = preprocess_utterance(line, config);
        if words.is_empty() {
            continue;
        }
        tokens.extend(words);
        if config.append_eos {
            tokens.push(EOS_TOKEN.to_string());
        }
    }
    TokenSequence::new(band.label(), 0, tokens)
}
