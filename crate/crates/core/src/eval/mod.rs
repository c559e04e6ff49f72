//! Participant-level LOOCV over twin language models, paired scores and
//! the classification metrics built on them.
//!
//! Polarity is fixed: `diff = p_con − p_model`, and a larger diff is more
//! dementia-like (the control model is the more surprised one).

mod metrics;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_loocv, Corpus, Group, TokenSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::interrogation::{interpolate, InterpolationWeight};
use crate::lm::{
    init_params, load_embeddings, perplexity, train, EmbeddingTable, LmConfig, LmParameters,
};

pub use metrics::{acc_eer, auc, confidence_interval, EerPoint, CI_METHOD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedScore {
    pub participant_id: String,
    pub visit: u32,
    pub label: Group,
    pub p_con: f64,
    pub p_model: f64,
    pub diff: f64,
}

impl PairedScore {
    pub fn new(participant_id: impl Into<String>, visit: u32, label: Group, p_con: f64, p_model: f64) -> Self {
        PairedScore {
            participant_id: participant_id.into(),
            visit,
            label,
            p_con,
            p_model,
            diff: p_con - p_model,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub lm_config: LmConfig,
    pub alpha: Option<InterpolationWeight>,
    pub pretrained_embeddings: Option<PathBuf>,
    pub repetitions: usize,
    pub seeds: Vec<u64>,
    /// Minimum training-side count for a word to enter a fold's vocabulary.
    pub min_count: usize,
    /// Fold workers; `None` uses every available core.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lm_config: LmConfig::default(),
            alpha: None,
            pretrained_embeddings: None,
            repetitions: 1,
            seeds: vec![0],
            min_count: 1,
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.lm_config.validate()?;
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.seeds.len() != self.repetitions {
            return Err(Error::InvalidConfig(format!(
                "{} seeds given for {} repetitions",
                self.seeds.len(),
                self.repetitions
            )));
        }
        if self.min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionMetrics {
    pub seed: u64,
    pub auc_diff: f64,
    pub auc_p_con: f64,
    pub auc_p_model: f64,
    pub acc_eer_diff: f64,
    pub eer_threshold: f64,
}

/// Mean over repetitions; the half-width is absent for a single repetition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: Option<f64>,
}

impl MeanCi {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        match values.len() {
            0 => None,
            1 => Some(MeanCi { mean: values[0], half_width: None }),
            _ => confidence_interval(values)
                .ok()
                .map(|(mean, h)| MeanCi { mean, half_width: Some(h) }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub auc_diff: MeanCi,
    pub auc_p_con: MeanCi,
    pub auc_p_model: MeanCi,
    pub acc_eer_diff: MeanCi,
}

/// Which participants a subset report kept and dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetInfo {
    pub mmse_floor: u8,
    pub participants_included: usize,
    pub excluded_no_mmse: usize,
    pub excluded_below_floor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub repetitions: Vec<RepetitionMetrics>,
    pub summary: MetricSummary,
    pub ci_method: String,
    /// One list per repetition, in corpus order.
    pub scores: Vec<Vec<PairedScore>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<SubsetInfo>,
}

impl EvaluationReport {
    /// Computes every metric from per-repetition score lists.
    pub fn from_scores(seeds: &[u64], scores: Vec<Vec<PairedScore>>) -> Result<Self> {
        if seeds.len() != scores.len() {
            return Err(Error::InvalidConfig(format!(
                "{} seeds for {} score lists",
                seeds.len(),
                scores.len()
            )));
        }
        let repetitions = seeds
            .iter()
            .zip(&scores)
            .map(|(&seed, s)| repetition_metrics(seed, s))
            .collect::<Result<Vec<_>>>()?;
        let col = |f: fn(&RepetitionMetrics) -> f64| -> Result<MeanCi> {
            let v: Vec<f64> = repetitions.iter().map(f).collect();
            MeanCi::from_values(&v).ok_or_else(|| Error::EmptyInput("no repetitions".into()))
        };
        let summary = MetricSummary {
            auc_diff: col(|r| r.auc_diff)?,
            auc_p_con: col(|r| r.auc_p_con)?,
            auc_p_model: col(|r| r.auc_p_model)?,
            acc_eer_diff: col(|r| r.acc_eer_diff)?,
        };
        Ok(EvaluationReport {
            repetitions,
            summary,
            ci_method: CI_METHOD.to_string(),
            scores,
            subset: None,
        })
    }

    /// Per-transcript scores as CSV, one row per transcript and repetition.
    pub fn write_scores_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["repetition", "seed", "participant_id", "visit", "label", "p_con", "p_model", "diff"])?;
        for (rep, (m, scores)) in self.repetitions.iter().zip(&self.scores).enumerate() {
            for s in scores {
                w.write_record([
                    rep.to_string(),
                    m.seed.to_string(),
                    s.participant_id.clone(),
                    s.visit.to_string(),
                    s.label.as_str().to_string(),
                    s.p_con.to_string(),
                    s.p_model.to_string(),
                    s.diff.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Summary row: mean and half-width per metric.
    pub fn write_summary_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["repetitions".to_string()];
        let mut row = vec![self.repetitions.len().to_string()];
        let s = &self.summary;
        for (name, m) in [
            ("auc_diff", s.auc_diff),
            ("auc_p_con", s.auc_p_con),
            ("auc_p_model", s.auc_p_model),
            ("acc_eer_diff", s.acc_eer_diff),
        ] {
            header.push(name.to_string());
            header.push(format!("{name}_ci"));
            row.push(m.mean.to_string());
            row.push(m.half_width.map(|h| h.to_string()).unwrap_or_default());
        }
        w.write_record(&header)?;
        w.write_record(&row)?;
        w.flush()?;
        Ok(())
    }
}

fn repetition_metrics(seed: u64, scores: &[PairedScore]) -> Result<RepetitionMetrics> {
    let pick = |f: fn(&PairedScore) -> f64| -> Vec<(f64, Group)> {
        scores.iter().map(|s| (f(s), s.label)).collect()
    };
    let diff = pick(|s| s.diff);
    let eer = acc_eer(&diff)?;
    Ok(RepetitionMetrics {
        seed,
        auc_diff: auc(&diff)?,
        auc_p_con: auc(&pick(|s| s.p_con))?,
        auc_p_model: auc(&pick(|s| s.p_model))?,
        acc_eer_diff: eer.accuracy,
        eer_threshold: eer.threshold,
    })
}

/// Seed of one fold: the run seed mixed with a hash of the held-out
/// participant, so results do not depend on scheduling.
pub fn fold_seed(run_seed: u64, participant_id: &str) -> u64 {
    // FNV-1a then a splitmix64 finaliser.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in participant_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = run_seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Control and dementia models trained on one corpus, from one shared
/// initialisation, over one shared vocabulary.
#[derive(Debug, Clone)]
pub struct Twins {
    pub con: LmParameters<f32>,
    pub dem: LmParameters<f32>,
}

/// Trains both twins on `train_side`. The vocabulary is built from all of
/// its transcripts so the twins can be compared and interpolated.
pub fn train_twins(
    train_side: &Corpus,
    lm_config: &LmConfig,
    seed: u64,
    min_count: usize,
    pretrained: Option<&EmbeddingTable>,
) -> Result<Twins> {
    let con_seqs = train_side.group_sequences(Group::Control);
    let dem_seqs = train_side.group_sequences(Group::Dementia);
    if con_seqs.is_empty() || dem_seqs.is_empty() {
        let missing = if con_seqs.is_empty() { "control" } else { "dementia" };
        return Err(Error::EmptyInput(format!("training side has no {missing} transcripts")));
    }
    let vocab = Vocabulary::build(&train_side.all_sequences(), min_count)?;
    let init = init_params::<f32>(lm_config, &vocab, seed, pretrained)?;
    // Same initial weights, separate dropout streams.
    let mut cfg = lm_config.clone();
    cfg.seed = seed ^ 0x636f_6e;
    let (con, _) = train(&con_seqs, &cfg, &vocab, &init)?;
    cfg.seed = seed ^ 0x0064_656d;
    let (dem, _) = train(&dem_seqs, &cfg, &vocab, &init)?;
    Ok(Twins { con, dem })
}

fn score_fold(
    corpus: &Corpus,
    participant_id: &str,
    config: &RunConfig,
    run_seed: u64,
    pretrained: Option<&EmbeddingTable>,
) -> Result<Vec<PairedScore>> {
    let fold_err = |e: Error| Error::Fold {
        participant: participant_id.to_string(),
        message: e.to_string(),
    };
    let label = corpus
        .participant(participant_id)
        .ok_or_else(|| Error::UnknownParticipant(participant_id.to_string()))?
        .group;
    let (train_side, test): (Corpus, Vec<TokenSequence>) = split_loocv(corpus, participant_id)?;
    let seed = fold_seed(run_seed, participant_id);
    let twins = train_twins(&train_side, &config.lm_config, seed, config.min_count, pretrained)
        .map_err(fold_err)?;
    let model = match config.alpha {
        Some(a) => interpolate(&twins.dem, &twins.con, a).map_err(fold_err)?,
        None => twins.dem,
    };
    test.iter()
        .map(|seq| {
            let p_con = perplexity(&twins.con, seq)?;
            let p_model = perplexity(&model, seq)?;
            Ok(PairedScore::new(participant_id, seq.visit, label, p_con, p_model))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(fold_err)
}

/// Full LOOCV: one fold per participant, repeated once per seed.
///
/// Any failing fold fails the whole run; partial results are never
/// returned.
pub fn run_loocv(corpus: &Corpus, config: &RunConfig) -> Result<EvaluationReport> {
    let table = match &config.pretrained_embeddings {
        Some(path) => Some(load_embeddings(path)?),
        None => None,
    };
    run_loocv_with(corpus, config, table.as_ref())
}

/// As [`run_loocv`] with an already loaded embedding table (the path in
/// `config` is ignored).
pub fn run_loocv_with(
    corpus: &Corpus,
    config: &RunConfig,
    pretrained: Option<&EmbeddingTable>,
) -> Result<EvaluationReport> {
    config.validate()?;
    for g in [Group::Control, Group::Dementia] {
        if corpus.group_count(g) < 2 {
            return Err(Error::InvalidConfig(format!(
                "LOOCV needs at least 2 {g} participants, corpus has {}",
                corpus.group_count(g)
            )));
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let ids: Vec<&str> = corpus.participants().iter().map(|p| p.participant_id.as_str()).collect();
    let mut all = Vec::with_capacity(config.seeds.len());
    for &run_seed in &config.seeds {
        log::info!("LOOCV repetition with seed {run_seed}: {} folds", ids.len());
        let folds: Vec<Vec<PairedScore>> = pool.install(|| {
            ids.par_iter()
                .map(|id| score_fold(corpus, id, config, run_seed, pretrained))
                .collect::<Result<Vec<_>>>()
        })?;
        all.push(folds.into_iter().flatten().collect::<Vec<_>>());
    }
    EvaluationReport::from_scores(&config.seeds, all)
}

/// Recomputes the metrics over participants whose last recorded MMSE is at
/// least `mmse_floor`. Participants without any MMSE are excluded and
/// counted.
pub fn screening_subset(corpus: &Corpus, report: &EvaluationReport, mmse_floor: u8) -> Result<EvaluationReport> {
    let mut keep = std::collections::BTreeSet::new();
    let (mut no_mmse, mut below) = (0, 0);
    for p in corpus.participants() {
        match p.last_mmse() {
            None => no_mmse += 1,
            Some(m) if m < mmse_floor => below += 1,
            Some(_) => {
                keep.insert(p.participant_id.as_str());
            }
        }
    }
    if keep.is_empty() {
        return Err(Error::EmptyInput(format!("no participant has a last MMSE of {mmse_floor} or more")));
    }
    let scores: Vec<Vec<PairedScore>> = report
        .scores
        .iter()
        .map(|rep| rep.iter().filter(|s| keep.contains(s.participant_id.as_str())).cloned().collect())
        .collect();
    let seeds: Vec<u64> = report.repetitions.iter().map(|r| r.seed).collect();
    let mut sub = EvaluationReport::from_scores(&seeds, scores)?;
    sub.subset = Some(SubsetInfo {
        mmse_floor,
        participants_included: keep.len(),
        excluded_no_mmse: no_mmse,
        excluded_below_floor: below,
    });
    Ok(sub)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeveritySummary {
    pub mmse_ceiling: u8,
    /// Held-out dementia transcripts, all of them.
    pub overall: Option<MeanCi>,
    pub overall_transcripts: usize,
    /// Held-out dementia transcripts whose visit MMSE is at most the ceiling.
    pub severe: Option<MeanCi>,
    pub severe_transcripts: usize,
}

/// Model perplexity on held-out dementia transcripts: the per-repetition
/// mean, then mean and interval across repetitions. An empty subset is
/// reported as absent.
pub fn severity_perplexity_summary(corpus: &Corpus, report: &EvaluationReport, mmse_ceiling: u8) -> SeveritySummary {
    let is_severe = |s: &PairedScore| {
        corpus
            .participant(&s.participant_id)
            .and_then(|p| p.mmse_at(s.visit))
            .is_some_and(|m| m <= mmse_ceiling)
    };
    let mut overall = Vec::new();
    let mut severe = Vec::new();
    let (mut n_all, mut n_sev) = (0, 0);
    for rep in &report.scores {
        let dem: Vec<&PairedScore> = rep.iter().filter(|s| s.label == Group::Dementia).collect();
        let sev: Vec<&PairedScore> = dem.iter().copied().filter(|s| is_severe(s)).collect();
        n_all = dem.len();
        n_sev = sev.len();
        let mean = |v: &[&PairedScore]| v.iter().map(|s| s.p_model).sum::<f64>() / v.len() as f64;
        if !dem.is_empty() {
            overall.push(mean(&dem));
        }
        if !sev.is_empty() {
            severe.push(mean(&sev));
        }
    }
    SeveritySummary {
        mmse_ceiling,
        overall: MeanCi::from_values(&overall),
        overall_transcripts: n_all,
        severe: MeanCi::from_values(&severe),
        severe_transcripts: n_sev,
    }
}
