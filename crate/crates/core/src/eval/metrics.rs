//! Threshold-free and threshold-based classification metrics. Dementia is
//! the positive class; higher scores are more dementia-like.

use serde::{Deserialize, Serialize};

use crate::corpus::Group;
use crate::error::{Error, Result};

fn class_counts(scores: &[(f64, Group)]) -> Result<(usize, usize)> {
    let pos = scores.iter().filter(|(_, g)| *g == Group::Dementia).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Area under the ROC curve via the Mann-Whitney statistic: the
/// probability that a random dementia score exceeds a random control score,
/// ties counting one half.
pub fn auc(scores: &[(f64, Group)]) -> Result<f64> {
    let (pos, neg) = class_counts(scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0));
    // Sum of mid-ranks of positives, kept in half units to stay integral.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]].0 == scores[order[i]].0 {
            j += 1;
        }
        let twice_mid = (i + j + 2) as u64;
        let positives = order[i..=j]
            .iter()
            .filter(|&&k| scores[k].1 == Group::Dementia)
            .count() as u64;
        twice_rank_sum += twice_mid * positives;
        i = j + 1;
    }
    let p = pos as u64;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / 2.0 / (pos * neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerPoint {
    pub accuracy: f64,
    pub threshold: f64,
    pub false_positive_rate: f64,
    pub false_negative_rate: f64,
}

/// Accuracy at the equal-error-rate threshold.
///
/// Candidate thresholds are the midpoints between consecutive distinct
/// scores plus one point below the minimum and one above the maximum (so a
/// constant score set still has a candidate). Scores strictly above the
/// threshold are called dementia. The candidate minimising |FPR − FNR| is
/// chosen, the lowest threshold winning ties.
pub fn acc_eer(scores: &[(f64, Group)]) -> Result<EerPoint> {
    let (pos, neg) = class_counts(scores)?;
    let mut sorted: Vec<(f64, Group)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Lowest candidate: everything is called dementia.
    let (mut fp, mut fn_) = (neg as i64, 0i64);
    let mut best = (i64::MAX, 0.0, fp, fn_);
    let consider = |threshold: f64, fp: i64, fn_: i64, best: &mut (i64, f64, i64, i64)| {
        // |FP/neg − FN/pos| compared exactly as |FP·pos − FN·neg|
        let gap = (fp * pos as i64 - fn_ * neg as i64).abs();
        if gap < best.0 {
            *best = (gap, threshold, fp, fn_);
        }
    };
    consider(sorted[0].0 - 1.0, fp, fn_, &mut best);

    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == v {
            match sorted[i].1 {
                Group::Dementia => fn_ += 1,
                Group::Control => fp -= 1,
            }
            i += 1;
        }
        let threshold = if i < sorted.len() {
            v + (sorted[i].0 - v) / 2.0
        } else {
            v + 1.0
        };
        consider(threshold, fp, fn_, &mut best);
    }

    let (_, threshold, fp, fn_) = best;
    let correct = (pos as i64 - fn_) + (neg as i64 - fp);
    Ok(EerPoint {
        accuracy: correct as f64 / scores.len() as f64,
        threshold,
        false_positive_rate: fp as f64 / neg as f64,
        false_negative_rate: fn_ as f64 / pos as f64,
    })
}

/// Normal-approximation interval over repetitions:
/// `mean ± 1.96 · sd / √n` with the sample standard deviation.
pub fn confidence_interval(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "confidence interval needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, 1.96 * var.sqrt() / n.sqrt()))
}

pub const CI_METHOD: &str = "normal approximation: mean +/- 1.96 * sample sd / sqrt(repetitions)";
