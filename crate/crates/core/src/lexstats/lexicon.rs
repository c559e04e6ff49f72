use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

/// Word frequencies per million, looked up case-insensitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyLexicon {
    per_million: HashMap<String, f64>,
}

impl FrequencyLexicon {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut per_million = HashMap::new();
        for (w, f) in pairs {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "frequency for `{}` must be positive, got {f}",
                    w.as_ref()
                )));
            }
            per_million.insert(w.as_ref().to_lowercase(), f);
        }
        Ok(Self { per_million })
    }

    /// `word<TAB>freq_per_million` lines; a first line whose frequency
    /// field is not numeric is treated as a header.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let word = fields.next().unwrap_or("").trim();
            let freq = fields.next().unwrap_or("").trim();
            match freq.parse::<f64>() {
                Ok(f) => pairs.push((word.to_string(), f)),
                Err(_) if idx == 0 => continue,
                Err(_) => {
                    return Err(Error::InvalidConfig(format!(
                        "lexicon line {}: bad frequency `{freq}`",
                        idx + 1
                    )))
                }
            }
        }
        Self::from_pairs(pairs)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        Self::parse(std::io::BufReader::new(file))
    }

    pub fn per_million(&self, word: &str) -> Option<f64> {
        self.per_million.get(&word.to_lowercase()).copied()
    }

    pub fn log10_frequency(&self, word: &str) -> Option<f64> {
        self.per_million(word).map(f64::log10)
    }

    pub fn len(&self) -> usize {
        self.per_million.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_million.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Verb,
    Other,
}

impl PosTag {
    /// Accepts coarse labels and Penn/Brown-style tags (`NN*`, `VB*`).
    pub fn parse(tag: &str) -> Self {
        let t = tag.trim().to_ascii_lowercase();
        match t.as_str() {
            "noun" | "n" => PosTag::Noun,
            "verb" | "v" => PosTag::Verb,
            _ if t.starts_with("nn") || t.starts_with("np") => PosTag::Noun,
            _ if t.starts_with("vb") => PosTag::Verb,
            _ => PosTag::Other,
        }
    }
}

/// One tag per lexical token of a transcript (end-of-utterance markers
/// excluded).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosAnnotation {
    pub tags: Vec<PosTag>,
}

pub trait PosSource {
    fn annotate(&self, seq: &TokenSequence) -> Option<PosAnnotation>;
}

/// Dictionary tagger from noun and verb word lists; a word on both lists
/// is tagged as a noun.
#[derive(Debug, Clone, Default)]
pub struct WordlistTagger {
    nouns: HashSet<String>,
    verbs: HashSet<String>,
}

impl WordlistTagger {
    pub fn new<I: IntoIterator<Item = S>, J: IntoIterator<Item = S>, S: AsRef<str>>(nouns: I, verbs: J) -> Self {
        Self {
            nouns: nouns.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
            verbs: verbs.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    /// Plain-text lists, one word per line.
    pub fn read(nouns: &Path, verbs: &Path) -> Result<Self> {
        let read = |p: &Path| -> Result<Vec<String>> {
            Ok(std::fs::read_to_string(p)
                .map_err(|e| Error::file(p, e))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect())
        };
        Ok(Self::new(read(nouns)?, read(verbs)?))
    }

    pub fn tag(&self, word: &str) -> PosTag {
        if self.nouns.contains(word) {
            PosTag::Noun
        } else if self.verbs.contains(word) {
            PosTag::Verb
        } else {
            PosTag::Other
        }
    }
}

impl PosSource for WordlistTagger {
    fn annotate(&self, seq: &TokenSequence) -> Option<PosAnnotation> {
        Some(PosAnnotation {
            tags: seq.lexical_tokens().map(|w| self.tag(w)).collect(),
        })
    }
}

#[derive(Debug, Deserialize)]
struct SidecarLine {
    participant_id: String,
    visit: u32,
    tags: Vec<String>,
}

/// Externally produced tags, JSON-lines `{participant_id, visit, tags}`.
#[derive(Debug, Clone, Default)]
pub struct PosSidecar {
    tags: HashMap<(String, u32), PosAnnotation>,
}

impl PosSidecar {
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut tags = HashMap::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SidecarLine = serde_json::from_str(&line)?;
            tags.insert(
                (rec.participant_id, rec.visit),
                PosAnnotation {
                    tags: rec.tags.iter().map(|t| PosTag::parse(t)).collect(),
                },
            );
        }
        Ok(Self { tags })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        Self::parse(std::io::BufReader::new(file))
    }
}

impl PosSource for PosSidecar {
    fn annotate(&self, seq: &TokenSequence) -> Option<PosAnnotation> {
        self.tags.get(&(seq.participant_id.clone(), seq.visit)).cloned()
    }
}
