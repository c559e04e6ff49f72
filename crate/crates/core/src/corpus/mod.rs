//! Transcripts, participants and the participant-grouped corpus.

pub mod chat;
pub mod preprocess;
pub mod vocab;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chat::{parse_chat, parse_chat_file, HeaderMeta, RawTranscript};
pub use preprocess::{preprocess, preprocess_utterance, PreprocessConfig};
pub use vocab::Vocabulary;

/// Reserved strings; preprocessing can never produce them (`<` and `>` are
/// stripped).
pub const UNK_TOKEN: &str = "<unk>";
pub const EOS_TOKEN: &str = "<eos>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Dementia,
    Control,
}

impl Group {
    pub fn parse(label: &str) -> Option<Self> {
        match label.trim().to_ascii_lowercase().as_str() {
            "dementia" | "dat" | "ad" | "case" => Some(Group::Dementia),
            "control" | "con" => Some(Group::Control),
            _ => None,
        }
    }

    /// Maps DementiaBank `@ID` diagnosis labels. Possible and probable AD
    /// count as dementia; other diagnoses (MCI, vascular, ...) are unmapped.
    pub fn from_header_label(label: &str) -> Option<Self> {
        let l = label.to_ascii_lowercase();
        if l.is_empty() {
            None
        } else if l.contains("control") {
            Some(Group::Control)
        } else if l == "probablead" || l == "possiblead" || l == "ad" || l.contains("dementia") {
            Some(Group::Dementia)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Dementia => "dementia",
            Group::Control => "control",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A preprocessed transcript. `tokens` may contain [`EOS_TOKEN`] markers
/// between utterances; every other token is lowercase `[a-z0-9']+`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub participant_id: String,
    pub visit: u32,
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(participant_id: impl Into<String>, visit: u32, tokens: Vec<String>) -> Self {
        Self {
            participant_id: participant_id.into(),
            visit,
            tokens,
        }
    }

    pub fn from_words(words: &str) -> Self {
        Self::new("", 0, words.split_whitespace().map(str::to_string).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.lexical_tokens().next().is_none()
    }

    /// Tokens with the reserved markers skipped.
    pub fn lexical_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens
            .iter()
            .map(String::as_str)
            .filter(|t| *t != EOS_TOKEN && *t != UNK_TOKEN)
    }

    pub fn lexical_len(&self) -> usize {
        self.lexical_tokens().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub group: Group,
    pub age_at_baseline: Option<f64>,
    pub education: Option<f64>,
    pub transcripts: Vec<TokenSequence>,
    /// `(visit, mmse)` sorted by visit.
    pub mmse_history: Vec<(u32, u8)>,
}

impl ParticipantRecord {
    pub fn mmse_at(&self, visit: u32) -> Option<u8> {
        self.mmse_history
            .iter()
            .find(|(v, _)| *v == visit)
            .map(|(_, m)| *m)
    }

    /// MMSE of the latest visit that has one recorded.
    pub fn last_mmse(&self) -> Option<u8> {
        self.mmse_history.iter().max_by_key(|(v, _)| *v).map(|(_, m)| *m)
    }

    pub fn baseline_transcript(&self) -> Option<&TokenSequence> {
        self.transcripts.iter().min_by_key(|t| t.visit)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    participants: Vec<ParticipantRecord>,
}

impl Corpus {
    /// Validates participant-id uniqueness, per-participant visit uniqueness
    /// and non-empty transcript lists.
    pub fn new(participants: Vec<ParticipantRecord>) -> Result<Self> {
        let mut ids = HashSet::new();
        for p in &participants {
            if !ids.insert(p.participant_id.as_str()) {
                return Err(Error::DuplicateParticipant(p.participant_id.clone()));
            }
            if p.transcripts.is_empty() {
                return Err(Error::EmptyInput(format!(
                    "participant `{}` has no transcripts",
                    p.participant_id
                )));
            }
            let mut visits = HashSet::new();
            for t in &p.transcripts {
                if !visits.insert(t.visit) {
                    return Err(Error::DuplicateVisit {
                        participant: p.participant_id.clone(),
                        visit: t.visit,
                    });
                }
            }
        }
        Ok(Self { participants })
    }

    pub fn participants(&self) -> &[ParticipantRecord] {
        &self.participants
    }

    pub fn participant(&self, id: &str) -> Option<&ParticipantRecord> {
        self.participants.iter().find(|p| p.participant_id == id)
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn transcript_count(&self) -> usize {
        self.participants.iter().map(|p| p.transcripts.len()).sum()
    }

    pub fn group_count(&self, group: Group) -> usize {
        self.participants.iter().filter(|p| p.group == group).count()
    }

    pub fn group_sequences(&self, group: Group) -> Vec<TokenSequence> {
        self.participants
            .iter()
            .filter(|p| p.group == group)
            .flat_map(|p| p.transcripts.iter().cloned())
            .collect()
    }

    pub fn all_sequences(&self) -> Vec<TokenSequence> {
        self.participants
            .iter()
            .flat_map(|p| p.transcripts.iter().cloned())
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.participants {
            for t in &p.transcripts {
                let rec = TranscriptRecord {
                    participant_id: p.participant_id.clone(),
                    visit: t.visit,
                    group: p.group,
                    tokens: t.tokens.clone(),
                    mmse: p.mmse_at(t.visit),
                    age: p.age_at_baseline,
                    education: p.education,
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut by_id: BTreeMap<String, ParticipantRecord> = BTreeMap::new();
        let mut order = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TranscriptRecord = serde_json::from_str(&line)?;
            let entry = by_id.entry(rec.participant_id.clone()).or_insert_with(|| {
                order.push(rec.participant_id.clone());
                ParticipantRecord {
                    participant_id: rec.participant_id.clone(),
                    group: rec.group,
                    age_at_baseline: rec.age,
                    education: rec.education,
                    transcripts: Vec::new(),
                    mmse_history: Vec::new(),
                }
            });
            if entry.group != rec.group {
                return Err(Error::InvalidConfig(format!(
                    "participant `{}` has conflicting group labels",
                    rec.participant_id
                )));
            }
            if let Some(m) = rec.mmse {
                entry.mmse_history.push((rec.visit, m));
            }
            entry
                .transcripts
                .push(TokenSequence::new(rec.participant_id, rec.visit, rec.tokens));
        }
        let participants = order
            .into_iter()
            .map(|id| {
                let mut p = by_id.remove(&id).expect("inserted above");
                p.transcripts.sort_by_key(|t| t.visit);
                p.mmse_history.sort_by_key(|(v, _)| *v);
                p
            })
            .collect();
        Corpus::new(participants)
    }

    pub fn read_jsonl_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }
}

/// One line of the canonical corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub participant_id: String,
    pub visit: u32,
    pub group: Group,
    pub tokens: Vec<String>,
    pub mmse: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub education: Option<f64>,
}

/// Participant-level leave-one-out split: every transcript of `held_out`
/// goes to the test side, all others to training.
pub fn split_loocv(corpus: &Corpus, held_out: &str) -> Result<(Corpus, Vec<TokenSequence>)> {
    let held = corpus
        .participant(held_out)
        .ok_or_else(|| Error::UnknownParticipant(held_out.to_string()))?;
    let train = corpus
        .participants
        .iter()
        .filter(|p| p.participant_id != held_out)
        .cloned()
        .collect();
    Ok((Corpus { participants: train }, held.transcripts.clone()))
}

/// Row of the sidecar metadata CSV
/// (`participant_id,group,age,education,visit,mmse`).
#[derive(Debug, Clone, Deserialize)]
pub struct MetadataRow {
    pub participant_id: String,
    pub group: Option<String>,
    pub age: Option<f64>,
    pub education: Option<f64>,
    pub visit: Option<u32>,
    pub mmse: Option<u8>,
}

pub fn read_metadata_csv(path: &Path) -> Result<Vec<MetadataRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[derive(Debug, Default, Clone)]
pub struct LoadSummary {
    pub files_parsed: usize,
    pub failures: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
    pub empty_transcripts: usize,
}

/// Parses every `.cha` file under `dir` (recursively, in path order),
/// preprocesses it, attaches metadata
/// (sidecar rows override `@ID` headers) and assembles a corpus. Unparsable
/// files are reported in the summary rather than aborting the load.
pub fn load_chat_dir(
    dir: &Path,
    sidecar: Option<&[MetadataRow]>,
    config: &PreprocessConfig,
) -> Result<(Corpus, LoadSummary)> {
    let mut paths = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::file(&path, e.into())
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "cha") {
            paths.push(entry.into_path());
        }
    }

    let mut summary = LoadSummary::default();
    let mut raws = Vec::new();
    for path in paths {
        match parse_chat_file(&path) {
            Ok(raw) => {
                summary.files_parsed += 1;
                raws.push(raw);
            }
            Err(e) => summary.failures.push((path, e.to_string())),
        }
    }
    let corpus = assemble(raws, sidecar.unwrap_or(&[]), config, &mut summary)?;
    Ok((corpus, summary))
}

pub fn assemble(
    raws: Vec<RawTranscript>,
    sidecar: &[MetadataRow],
    config: &PreprocessConfig,
    summary: &mut LoadSummary,
) -> Result<Corpus> {
    #[derive(Default)]
    struct Pending {
        group: Option<Group>,
        age: Option<(u32, f64)>,
        education: Option<f64>,
        mmse: BTreeMap<u32, u8>,
        transcripts: Vec<TokenSequence>,
    }

    let mut pending: BTreeMap<String, Pending> = BTreeMap::new();
    for raw in raws {
        let entry = pending.entry(raw.participant_id.clone()).or_default();
        if let Some(g) = raw.header.group {
            entry.group.get_or_insert(g);
        }
        if let Some(a) = raw.header.age {
            // keep the age reported at the earliest visit
            if entry.age.map_or(true, |(v, _)| raw.visit_index < v) {
                entry.age = Some((raw.visit_index, a));
            }
        }
        if let Some(e) = raw.header.education {
            entry.education.get_or_insert(e);
        }
        if let Some(m) = raw.mmse {
            entry.mmse.insert(raw.visit_index, m);
        }
        if entry.transcripts.iter().any(|t| t.visit == raw.visit_index) {
            return Err(Error::DuplicateVisit {
                participant: raw.participant_id,
                visit: raw.visit_index,
            });
        }
        let seq = preprocess(&raw, config);
        if seq.is_empty() {
            summary.empty_transcripts += 1;
            summary.warnings.push(format!(
                "{} visit {}: empty after preprocessing",
                raw.participant_id, raw.visit_index
            ));
            continue;
        }
        entry.transcripts.push(seq);
    }

    for row in sidecar {
        let Some(entry) = pending.get_mut(&row.participant_id) else {
            continue;
        };
        if let Some(label) = row.group.as_deref().filter(|s| !s.is_empty()) {
            match Group::parse(label) {
                Some(g) => {
                    if entry.group.is_some_and(|h| h != g) {
                        summary.warnings.push(format!(
                            "{}: sidecar group `{g}` overrides header group",
                            row.participant_id
                        ));
                    }
                    entry.group = Some(g);
                }
                None => summary.warnings.push(format!(
                    "{}: unknown group label `{label}` in sidecar",
                    row.participant_id
                )),
            }
        }
        if let Some(a) = row.age {
            let visit = row.visit.unwrap_or(0);
            if let Some((v, old)) = entry.age {
                if v == visit && old != a {
                    summary
                        .warnings
                        .push(format!("{}: sidecar age overrides header", row.participant_id));
                }
            }
            if entry.age.map_or(true, |(v, _)| visit <= v) {
                entry.age = Some((visit, a));
            }
        }
        if let Some(e) = row.education {
            if entry.education.is_some_and(|old| old != e) {
                summary.warnings.push(format!(
                    "{}: sidecar education overrides header",
                    row.participant_id
                ));
            }
            entry.education = Some(e);
        }
        if let (Some(v), Some(m)) = (row.visit, row.mmse) {
            if entry.mmse.get(&v).is_some_and(|old| *old != m) {
                summary.warnings.push(format!(
                    "{} visit {v}: sidecar MMSE overrides header",
                    row.participant_id
                ));
            }
            entry.mmse.insert(v, m);
        }
    }

    let mut participants = Vec::new();
    for (id, mut p) in pending {
        let Some(group) = p.group else {
            summary
                .warnings
                .push(format!("{id}: no dementia/control group label, skipped"));
            continue;
        };
        if p.transcripts.is_empty() {
            summary.warnings.push(format!("{id}: no non-empty transcripts, skipped"));
            continue;
        }
        p.transcripts.sort_by_key(|t| t.visit);
        participants.push(ParticipantRecord {
            participant_id: id,
            group,
            age_at_baseline: p.age.map(|(_, a)| a),
            education: p.education,
            transcripts: p.transcripts,
            mmse_history: p.mmse.into_iter().collect(),
        });
    }
    Corpus::new(participants)
}
