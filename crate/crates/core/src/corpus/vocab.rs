use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{TokenSequence, EOS_TOKEN, UNK_TOKEN};
use crate::error::{Error, Result};

/// Dense token ↔ id map. Ids `0` and `1` are the reserved unknown and
/// end-of-sequence tokens; the rest follow in descending frequency, ties
/// broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    pub const UNK_ID: usize = 0;
    pub const EOS_ID: usize = 1;

    pub fn build(sequences: &[TokenSequence], min_count: usize) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be >= 1".into()));
        }
        if sequences.iter().all(|s| s.tokens.is_empty()) {
            return Err(Error::EmptyInput("no tokens to build a vocabulary from".into()));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for tok in sequences.iter().flat_map(|s| s.lexical_tokens()) {
            *counts.entry(tok).or_default() += 1;
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        Ok(Self::from_tokens(kept.into_iter().map(|(t, _)| t.to_string())))
    }

    /// Builds a vocabulary from non-reserved tokens in id order (ids start at 2).
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut id_to_token = vec![UNK_TOKEN.to_string(), EOS_TOKEN.to_string()];
        let mut token_to_id: HashMap<String, usize> = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        for tok in tokens {
            if token_to_id.contains_key(&tok) {
                continue;
            }
            token_to_id.insert(tok.clone(), id_to_token.len());
            id_to_token.push(tok);
        }
        Self {
            token_to_id,
            id_to_token,
        }
    }

    /// Reconstructs a vocabulary from its full id-ordered token list, as
    /// stored in checkpoints. The reserved tokens must lead.
    pub fn from_id_list(list: Vec<String>) -> Result<Self> {
        if list.len() < 2 || list[Self::UNK_ID] != UNK_TOKEN || list[Self::EOS_ID] != EOS_TOKEN {
            return Err(Error::InvalidConfig(
                "vocabulary list must start with the reserved tokens".into(),
            ));
        }
        let mut token_to_id = HashMap::with_capacity(list.len());
        for (i, tok) in list.iter().enumerate() {
            if token_to_id.insert(tok.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary token `{tok}`")));
            }
        }
        Ok(Self {
            token_to_id,
            id_to_token: list,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        Self::UNK_ID
    }

    pub fn eos_id(&self) -> usize {
        Self::EOS_ID
    }

    pub fn id(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(UNK_TOKEN).to_string())
            .collect()
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.id_to_token.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let list = Vec::<String>::deserialize(deserializer)?;
        Vocabulary::from_id_list(list).map_err(serde::de::Error::custom)
    }
}
