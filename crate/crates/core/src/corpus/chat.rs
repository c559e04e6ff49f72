//! Minimal CHAT (`.cha`) reader: participant tier extraction plus `@ID`
//! header metadata. Inline codes are left in place for the preprocessing
//! stage.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Group;
use crate::error::{Error, Result};

pub const PARTICIPANT_TAG: &str = "PAR";

/// Participant utterances from one CHAT file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTranscript {
    pub participant_id: String,
    pub visit_index: u32,
    /// Raw participant utterances, inline CHAT codes preserved.
    pub utterances: Vec<String>,
    pub mmse: Option<u8>,
    pub header: HeaderMeta,
}

/// Metadata recovered from the participant's `@ID` header line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HeaderMeta {
    pub group: Option<Group>,
    pub age: Option<f64>,
    pub education: Option<f64>,
}

/// Parses CHAT text. Identity fields are left empty/zero; see
/// [`parse_chat_file`] for the file-name convention that fills them.
pub fn parse_chat(text: &str) -> Result<RawTranscript> {
    if text.trim().is_empty() {
        return Err(Error::EmptyChat);
    }

    // Logical lines: tab-led continuation lines join the previous tier.
    let mut logical: Vec<(usize, String)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let lineno = idx + 1;
        if line.starts_with('\t') {
            if let Some((_, prev)) = logical.last_mut() {
                prev.push(' ');
                prev.push_str(line.trim());
                continue;
            }
            return Err(Error::ChatParse {
                line: lineno,
                message: "continuation line before any tier".into(),
            });
        }
        if line.trim().is_empty() {
            continue;
        }
        logical.push((lineno, line.to_string()));
    }

    let mut utterances = Vec::new();
    let mut header = HeaderMeta::default();
    let mut mmse = None;

    for (lineno, line) in &logical {
        let first = line.chars().next().unwrap_or(' ');
        match first {
            '@' => {
                if let Some(rest) = line.strip_prefix("@ID:") {
                    if let Some((meta, score)) = parse_id_header(rest.trim()) {
                        header = meta;
                        mmse = score.or(mmse);
                    }
                }
            }
            '*' | '%' => {
                let (tag, body) = split_tier(line, *lineno)?;
                if first == '*' && tag == PARTICIPANT_TAG {
                    let body = strip_bullets(body).trim().to_string();
                    if !body.is_empty() {
                        utterances.push(body);
                    }
                }
            }
            _ => {
                return Err(Error::ChatParse {
                    line: *lineno,
                    message: format!("unrecognised line start `{first}`"),
                })
            }
        }
    }

    Ok(RawTranscript {
        participant_id: String::new(),
        visit_index: 0,
        utterances,
        mmse,
        header,
    })
}

/// Reads and parses a `.cha` file. The file stem follows the DementiaBank
/// convention `<participant>-<visit>`; a stem without a numeric visit suffix
/// is taken whole as the participant id with visit 0.
pub fn parse_chat_file(path: &Path) -> Result<RawTranscript> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let mut raw = parse_chat(&text)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    let (pid, visit) = participant_from_stem(stem);
    raw.participant_id = pid;
    raw.visit_index = visit;
    Ok(raw)
}

pub fn participant_from_stem(stem: &str) -> (String, u32) {
    if let Some((pid, visit)) = stem.rsplit_once('-') {
        if let Ok(v) = visit.parse::<u32>() {
            if !pid.is_empty() {
                return (pid.to_string(), v);
            }
        }
    }
    (stem.to_string(), 0)
}

fn split_tier(line: &str, lineno: usize) -> Result<(&str, &str)> {
    let colon = line.find(':').ok_or_else(|| Error::ChatParse {
        line: lineno,
        message: "speaker tag without `:`".into(),
    })?;
    let tag = &line[1..colon];
    let rest = &line[colon + 1..];
    match rest.strip_prefix('\t') {
        Some(body) => Ok((tag, body)),
        None => Err(Error::ChatParse {
            line: lineno,
            message: format!("missing tab after `{}`", &line[..=colon]),
        }),
    }
}

// Media bullets are delimited by U+0015.
fn strip_bullets(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut inside = false;
    for ch in body.chars() {
        if ch == '\u{15}' {
            inside = !inside;
        } else if !inside {
            out.push(ch);
        }
    }
    out
}

/// `@ID:` fields are `lang|corpus|code|age|sex|group|ses|role|education|custom|`.
/// Only the `PAR` line is used. The custom field carries MMSE in DementiaBank.
fn parse_id_header(rest: &str) -> Option<(HeaderMeta, Option<u8>)> {
    let fields: Vec<&str> = rest.split('|').map(str::trim).collect();
    if fields.get(2).copied() != Some(PARTICIPANT_TAG) {
        return None;
    }
    let age = fields.get(3).and_then(|a| parse_age(a));
    let group = fields.get(5).and_then(|g| Group::from_header_label(g));
    let education = fields
        .get(8)
        .and_then(|e| e.parse::<f64>().ok())
        .filter(|e| e.is_finite());
    let mmse = fields
        .get(9)
        .and_then(|m| m.parse::<u8>().ok())
        .filter(|m| *m <= 30);
    Some((
        HeaderMeta {
            group,
            age,
            education,
        },
        mmse,
    ))
}

// CHAT ages look like `57;` or `57;06.`; only whole years are kept.
fn parse_age(field: &str) -> Option<f64> {
    let years = field.split(';').next()?.trim();
    years.parse::<f64>().ok()
}
