use std::path::PathBuf;

use anyhow::Result;
use serde::Serialize;

use pplab_core::eval::{run_loocv, screening_subset, severity_perplexity_summary, SeveritySummary};
use pplab_core::EvaluationReport;

use super::{parse_alphas, read_corpus};
use crate::options::{effective_run_config, ConfigArgs, LmArgs};
use crate::output::{write_json, write_with_meta, Meta};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Score with `alpha * dementia + (1 - alpha) * control` instead of the
    /// dementia model
    #[arg(long)]
    alpha: Option<f64>,
    /// Word vectors used to initialise every fold's models
    #[arg(long)]
    pretrained: Option<PathBuf>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Comma-separated run seeds, one per repetition (default 0,1,2,...)
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    min_count: Option<usize>,
    /// Also report the subset whose last known MMSE is at least this
    #[arg(long)]
    screening_mmse: Option<u8>,
    /// MMSE ceiling for the severe-dementia perplexity summary
    #[arg(long, default_value_t = 10)]
    severity_mmse: u8,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    lm: LmArgs,
}

#[derive(Serialize)]
struct Output<'a> {
    report: &'a EvaluationReport,
    severity: SeveritySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    screening: Option<&'a EvaluationReport>,
}

pub fn run(a: Args, jobs: Option<usize>) -> Result<()> {
    let mut run = effective_run_config(&a.config, &a.lm, a.pretrained.is_some())?;
    if let Some(alpha) = a.alpha {
        run.alpha = Some(parse_alphas(&[alpha])?[0]);
    }
    if a.pretrained.is_some() {
        run.pretrained_embeddings = a.pretrained.clone();
    }
    if let Some(r) = a.repetitions {
        run.repetitions = r;
        if a.seeds.is_none() {
            run.seeds = (0..r as u64).collect();
        }
    }
    if let Some(s) = &a.seeds {
        run.seeds = s.clone();
        if a.repetitions.is_none() {
            run.repetitions = s.len();
        }
    }
    if let Some(m) = a.min_count {
        run.min_count = m;
    }
    if jobs.is_some() {
        run.jobs = jobs;
    }
    run.validate()?;

    let corpus = read_corpus(&a.corpus)?;
    let report = run_loocv(&corpus, &run)?;
    let severity = severity_perplexity_summary(&corpus, &report, a.severity_mmse);
    let screening = a
        .screening_mmse
        .map(|floor| screening_subset(&corpus, &report, floor))
        .transpose()?;

    let config = serde_json::json!({
        "run": run,
        "severity_mmse": a.severity_mmse,
        "screening_mmse": a.screening_mmse,
    });
    let meta = Meta::new("loocv", &config)?.input("corpus", &a.corpus);
    write_json(
        &a.out.join("report.json"),
        &meta,
        &Output {
            report: &report,
            severity,
            screening: screening.as_ref(),
        },
    )?;
    write_with_meta(&a.out.join("scores.csv"), &meta, |w| Ok(report.write_scores_csv(w)?))?;
    write_with_meta(&a.out.join("summary.csv"), &meta, |w| Ok(report.write_summary_csv(w)?))?;
    if let Some(s) = &screening {
        write_with_meta(&a.out.join("screening_summary.csv"), &meta, |w| Ok(s.write_summary_csv(w)?))?;
    }

    let s = &report.summary;
    eprintln!(
        "AUC(diff) {:.3}  AUC(P_con) {:.3}  AUC(P_model) {:.3}  acc@EER {:.3}",
        s.auc_diff.mean, s.auc_p_con.mean, s.auc_p_model.mean, s.acc_eer_diff.mean
    );
    Ok(())
}
