//! Paired-perplexity language modelling for picture-description transcripts.
//!
//! Twin LSTM language models are trained on control and dementia
//! transcripts; an unseen transcript is scored by the difference of the
//! two models' perplexities. The crate also covers the two ways of probing
//! such twins: interpolating their parameters, and measuring how their
//! perplexity responds to narratives whose words are pushed toward higher
//! lexical frequency.
//!
//! Modules:
//! - [`corpus`]: CHAT parsing, preprocessing, vocabularies, LOOCV splits
//! - [`lm`]: the language model, training, scoring, checkpoints
//! - [`interrogation`]: parameter interpolation and perturbation curves
//! - [`lexstats`]: lexical frequency, Spearman correlation, OLS
//! - [`eval`]: LOOCV orchestration and classification metrics

pub mod corpus;
pub mod error;
pub mod eval;
pub mod interrogation;
pub mod lexstats;
pub mod lm;

pub use corpus::{Corpus, Group, ParticipantRecord, TokenSequence, Vocabulary};
pub use error::{CheckpointError, Error, Result};
pub use eval::{EvaluationReport, PairedScore, RunConfig};
pub use interrogation::{FrequencyBand, InterpolationWeight, PerturbationCurve};
pub use lm::{LmConfig, LmParameters, TrainReport};
