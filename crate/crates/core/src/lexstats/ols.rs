//! Ordinary least squares with t-tests, and the participant-level dataset
//! linking paired perplexities to lexical frequency.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::lexicon::{FrequencyLexicon, PosSource};
use super::mean_log_lexical_frequency;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::eval::PairedScore;

/// Relative pivot size below which a column counts as collinear.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub n: usize,
    pub df_residual: usize,
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

/// Least squares via Householder QR. `x` is row-major with the intercept
/// supplied as an explicit column; `names` labels the columns.
pub fn ols_fit(x: &[Vec<f64>], y: &[f64], names: &[&str]) -> Result<RegressionResult> {
    let n = x.len();
    let p = names.len();
    if y.len() != n {
        return Err(Error::InvalidConfig(format!("{n} design rows but {} responses", y.len())));
    }
    if let Some(row) = x.iter().find(|r| r.len() != p) {
        return Err(Error::InvalidConfig(format!(
            "design row has {} columns, expected {p}",
            row.len()
        )));
    }
    if n <= p {
        return Err(Error::InvalidConfig(format!(
            "need more observations ({n}) than coefficients ({p})"
        )));
    }

    let xm = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let yv = DVector::from_column_slice(y);
    let qr = xm.clone().qr();
    let r = qr.r();

    let max_pivot = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    for j in 0..p {
        if r[(j, j)].abs() <= RANK_TOL * max_pivot.max(f64::MIN_POSITIVE) {
            return Err(collinearity(&r, j, names));
        }
    }

    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::InvalidConfig("triangular solve failed".into()))?;
    let fitted = &xm * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let df = n - p;
    let sigma2 = rss / df as f64;

    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidConfig("R is singular".into()))?;
    let cov_unscaled = &r_inv * r_inv.transpose();

    let coefficients = (0..p)
        .map(|j| {
            let estimate = beta[j];
            let std_error = (sigma2 * cov_unscaled[(j, j)]).sqrt();
            let t = if std_error > 0.0 {
                estimate / std_error
            } else if estimate == 0.0 {
                0.0
            } else {
                estimate.signum() * f64::INFINITY
            };
            Coefficient {
                name: names[j].to_string(),
                estimate,
                std_error,
                t,
                p_value: student_t_two_sided_p(t, df as f64),
            }
        })
        .collect();

    Ok(RegressionResult {
        coefficients,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        n,
        df_residual: df,
        residuals,
    })
}

// Column `j` is (numerically) a combination of earlier columns; name the
// ones carrying weight in that combination.
fn collinearity(r: &DMatrix<f64>, j: usize, names: &[&str]) -> Error {
    let mut with = Vec::new();
    if j > 0 {
        let head = r.view((0, 0), (j, j)).into_owned();
        let rhs = r.view((0, j), (j, 1)).into_owned();
        if let Some(coef) = head.solve_upper_triangular(&rhs) {
            let scale = coef.amax().max(f64::MIN_POSITIVE);
            for (k, c) in coef.iter().enumerate() {
                if c.abs() > 1e-8 * scale {
                    with.push(names[k].to_string());
                }
            }
        }
    }
    Error::RankDeficient {
        column: names[j].to_string(),
        with,
    }
}

pub const REGRESSION_COLUMNS: [&str; 6] = ["intercept", "p_dem", "p_con", "age", "education", "length"];

/// Baseline-visit rows linking lexical frequency to paired perplexities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDataset {
    pub columns: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub participants: Vec<String>,
    /// `(participant, reason)` for every dropped participant.
    pub excluded: Vec<(String, String)>,
}

impl RegressionDataset {
    pub fn fit(&self) -> Result<RegressionResult> {
        let names: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        ols_fit(&self.x, &self.y, &names)
    }
}

/// One row per participant from the earliest visit: response is the mean
/// log lexical frequency; predictors are intercept, dementia-model and
/// control-model perplexity, age, education and narrative length in
/// lexical tokens. Perplexities from several repetitions are averaged.
pub fn regression_dataset(
    corpus: &Corpus,
    scores: &[PairedScore],
    lex: &FrequencyLexicon,
    pos: &dyn PosSource,
) -> Result<RegressionDataset> {
    let mut by_transcript: BTreeMap<(&str, u32), (f64, f64, usize)> = BTreeMap::new();
    for s in scores {
        let e = by_transcript
            .entry((s.participant_id.as_str(), s.visit))
            .or_insert((0.0, 0.0, 0));
        e.0 += s.p_con;
        e.1 += s.p_model;
        e.2 += 1;
    }

    let mut ds = RegressionDataset {
        columns: REGRESSION_COLUMNS.iter().map(|s| s.to_string()).collect(),
        x: Vec::new(),
        y: Vec::new(),
        participants: Vec::new(),
        excluded: Vec::new(),
    };
    for p in corpus.participants() {
        let id = &p.participant_id;
        let Some(seq) = p.baseline_transcript() else { continue };
        let mut exclude = |reason: &str| {
            log::info!("regression: excluding {id}: {reason}");
            ds.excluded.push((id.clone(), reason.to_string()));
        };
        let Some(&(con, dem, k)) = by_transcript.get(&(id.as_str(), seq.visit)) else {
            exclude("no perplexity scores for baseline visit");
            continue;
        };
        let Some(age) = p.age_at_baseline else {
            exclude("missing age");
            continue;
        };
        let Some(education) = p.education else {
            exclude("missing education");
            continue;
        };
        let Some(tags) = pos.annotate(seq) else {
            exclude("no POS annotation");
            continue;
        };
        let freq = match mean_log_lexical_frequency(seq, &tags, lex) {
            Ok(f) => f,
            Err(e) => {
                exclude(&e.to_string());
                continue;
            }
        };
        let k = k as f64;
        ds.x.push(vec![1.0, dem / k, con / k, age, education, seq.lexical_len() as f64]);
        ds.y.push(freq);
        ds.participants.push(id.clone());
    }
    if ds.y.is_empty() {
        return Err(Error::EmptyInput("no participant has complete regression data".into()));
    }
    Ok(ds)
}
