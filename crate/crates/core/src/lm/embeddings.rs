//! Pre-trained word vectors in whitespace-separated text form.
//!
//! Each line is `token v1 … vD`. Lines whose token starts with
//! [`SUBWORD_SIGIL`] hold character n-gram vectors; n-grams are taken over
//! the word wrapped in `<` `>` boundary markers. An optional leading
//! `count dim` header line is skipped.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

pub const SUBWORD_SIGIL: &str = "##";
pub const MIN_NGRAM: usize = 3;
pub const MAX_NGRAM: usize = 6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: HashMap<String, Vec<f32>>,
    subwords: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn from_entries(
        dim: usize,
        words: Vec<(String, Vec<f32>)>,
        subwords: Vec<(String, Vec<f32>)>,
    ) -> Self {
        Self {
            dim,
            words: words.into_iter().collect(),
            subwords: subwords.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn subword_count(&self) -> usize {
        self.subwords.len()
    }

    /// Word vector, or the mean of the word's known n-gram vectors, or
    /// `None` when neither exists.
    pub fn lookup(&self, word: &str) -> Option<Vec<f32>> {
        if let Some(v) = self.words.get(word) {
            return Some(v.clone());
        }
        let grams: Vec<&Vec<f32>> = char_ngrams(word)
            .iter()
            .filter_map(|g| self.subwords.get(g))
            .collect();
        if grams.is_empty() {
            return None;
        }
        let mut mean = vec![0.0f64; self.dim];
        for g in &grams {
            for (m, &x) in mean.iter_mut().zip(g.iter()) {
                *m += x as f64;
            }
        }
        let n = grams.len() as f64;
        Some(mean.into_iter().map(|m| (m / n) as f32).collect())
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut table = EmbeddingTable::default();
        let mut dim: Option<usize> = None;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if lineno == 1 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                continue;
            }
            let values = rest
                .iter()
                .map(|f| f.parse::<f32>())
                .collect::<std::result::Result<Vec<f32>, _>>()
                .map_err(|e| Error::EmbeddingFormat {
                    line: lineno,
                    message: format!("bad number: {e}"),
                })?;
            if values.is_empty() {
                return Err(Error::EmbeddingFormat {
                    line: lineno,
                    message: format!("`{token}` has no vector"),
                });
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(Error::EmbeddingFormat {
                        line: lineno,
                        message: format!("expected {d} values, found {}", values.len()),
                    })
                }
                _ => {}
            }
            match token.strip_prefix(SUBWORD_SIGIL) {
                Some(gram) if !gram.is_empty() => {
                    table.subwords.insert(gram.to_string(), values);
                }
                _ => {
                    table.words.insert(token.to_string(), values);
                }
            }
        }
        table.dim = dim.ok_or_else(|| Error::EmptyInput("embedding file has no vectors".into()))?;
        Ok(table)
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    EmbeddingTable::parse(std::io::BufReader::new(file))
}

/// Distinct character n-grams (`MIN_NGRAM..=MAX_NGRAM`) of `<word>`.
pub fn char_ngrams(word: &str) -> BTreeSet<String> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = BTreeSet::new();
    for n in MIN_NGRAM..=MAX_NGRAM {
        if n > chars.len() {
            break;
        }
        for w in chars.windows(n) {
            out.insert(w.iter().collect());
        }
    }
    out
}
