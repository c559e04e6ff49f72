//! Transcript normalisation: lowercase, strip CHAT annotation, noise,
//! fillers and punctuation (apostrophes survive).

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::chat::RawTranscript;
use super::{TokenSequence, EOS_TOKEN};

pub const DEFAULT_FILLERS: [&str; 7] = ["um", "uh", "ah", "er", "hm", "mhm", "eh"];

/// Unintelligible / untranscribed speech markers.
const SPEECH_NOISE: [&str; 3] = ["xxx", "yyy", "www"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub append_eos: bool,
    pub fillers: BTreeSet<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            append_eos: true,
            fillers: DEFAULT_FILLERS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn preprocess(raw: &RawTranscript, config: &PreprocessConfig) -> TokenSequence {
    let mut tokens = Vec::new();
    for utterance in &raw.utterances {
        let words = preprocess_utterance(utterance, config);
        if words.is_empty() {
            continue;
        }
        tokens.extend(words);
        if config.append_eos {
            tokens.push(EOS_TOKEN.to_string());
        }
    }
    TokenSequence {
        participant_id: raw.participant_id.clone(),
        visit: raw.visit_index,
        tokens,
    }
}

/// Normalises one utterance into lexical tokens.
pub fn preprocess_utterance(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let without_codes = bracket_codes().replace_all(text, " ");
    let mut out = Vec::new();
    for raw in without_codes.split_whitespace() {
        // &-fillers, &=events and &fragments
        if raw.starts_with('&') || is_omitted_word(raw) {
            continue;
        }
        let spoken = strip_parenthesised(raw);
        let spoken = match spoken.find('@') {
            Some(at) => &spoken[..at],
            None => &spoken[..],
        };
        let lowered = spoken.to_lowercase();
        for piece in lowered.split(|c: char| !is_token_char(c)) {
            if keep_token(piece, config) {
                out.push(piece.to_string());
            }
        }
    }
    out
}

fn keep_token(piece: &str, config: &PreprocessConfig) -> bool {
    !piece.is_empty()
        && !piece.chars().all(|c| c == '\'')
        && !config.fillers.contains(piece)
        && !SPEECH_NOISE.contains(&piece)
        && !is_omitted_word(piece)
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\''
}

// CHAT `0word` marks a word the speaker omitted.
fn is_omitted_word(token: &str) -> bool {
    let mut chars = token.chars();
    chars.next() == Some('0') && chars.next().is_some_and(|c| c.is_alphabetic())
}

// `(be)cause` -> `cause`; `(.)` and `(..)` pauses vanish entirely.
fn strip_parenthesised(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    let mut depth = 0usize;
    for ch in token.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => out.push(ch),
            _ => {}
        }
    }
    out
}

fn bracket_codes() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[[^\]]*\]").expect("static regex"))
}
