//! Lexical frequency measurement and the statistics built on it.

pub mod lexicon;
pub mod ols;

use std::collections::BTreeSet;

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

pub use lexicon::{FrequencyLexicon, PosAnnotation, PosSidecar, PosSource, PosTag, WordlistTagger};
pub use ols::{
    ols_fit, regression_dataset, student_t_two_sided_p, Coefficient, RegressionDataset, RegressionResult,
};

/// Mean log10 frequency over the distinct noun and verb forms of a
/// transcript. Forms missing from the lexicon are left out of the mean;
/// no stemming is applied.
pub fn mean_log_lexical_frequency(
    seq: &TokenSequence,
    pos: &PosAnnotation,
    lex: &FrequencyLexicon,
) -> Result<f64> {
    let words: Vec<&str> = seq.lexical_tokens().collect();
    if words.len() != pos.tags.len() {
        return Err(Error::InvalidConfig(format!(
            "POS annotation has {} tags for {} tokens",
            pos.tags.len(),
            words.len()
        )));
    }
    let forms: BTreeSet<&str> = words
        .iter()
        .zip(&pos.tags)
        .filter(|(_, t)| matches!(t, PosTag::Noun | PosTag::Verb))
        .map(|(w, _)| *w)
        .collect();
    let logs: Vec<f64> = forms.iter().filter_map(|w| lex.log10_frequency(w)).collect();
    if logs.is_empty() {
        return Err(Error::Undefined(
            "no noun or verb found in the frequency lexicon".into(),
        ));
    }
    Ok(logs.iter().sum::<f64>() / logs.len() as f64)
}

/// 1-based ranks, tied values sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidConfig(format!(
            "spearman needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidConfig("spearman needs at least two pairs".into()));
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("zero rank variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}
