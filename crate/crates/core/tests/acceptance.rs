//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p pplab-core --test acceptance`. The process exits
//! non-zero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pplab_core::corpus::{TokenSequence, Vocabulary, EOS_TOKEN};
use pplab_core::eval::{acc_eer, auc, run_loocv, train_twins, RunConfig};
use pplab_core::interrogation::{interpolate, interrogate, InterpolationWeight};
use pplab_core::lexstats::{ols_fit, spearman};
use pplab_core::lm::{
    gradient_check, init_params, load_checkpoint, perplexity, save_checkpoint, train, LmConfig,
    LmParameters,
};
use pplab_core::{FrequencyBand, Group};

use common::synth::{perturbation_variants, synthetic_corpus, SynthParams};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

// ---------------------------------------------------------------- 1

fn gradient_check_criterion() -> Outcome {
    let vocab = Vocabulary::from_tokens(words(18));
    assert_eq!(vocab.len(), 20);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let toks: Vec<String> = (0..24).map(|_| format!("w{}", rng.gen_range(0..18))).collect();
    let seq = TokenSequence::new("g", 0, toks);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for tie in [true, false] {
        let config = LmConfig {
            embedding_dim: 12,
            layer_dims: vec![12],
            tie_embeddings: tie,
            bptt_window: 5,
            seed: 3,
            ..LmConfig::default()
        };
        let report = gradient_check(&config, &vocab, &seq, 1e-5).map_err(|e| e.to_string())?;
        worst = worst.max(report.max_relative_error);
        checked += report.parameters_checked;
    }
    check(worst < 1e-4, format!("max relative error {worst:.3e} over {checked} parameters"))
}

// ---------------------------------------------------------------- 2

fn perplexity_criterion() -> Outcome {
    let vocab = Vocabulary::from_tokens(words(48));
    let config = LmConfig {
        embedding_dim: 6,
        layer_dims: vec![6],
        ..LmConfig::default()
    };
    let uniform = LmParameters::<f64>::zeros(config, vocab.clone());
    let seq = TokenSequence::new("u", 0, words(30));
    let pp = perplexity(&uniform, &seq).map_err(|e| e.to_string())?;
    let uniform_err = (pp - vocab.len() as f64).abs();

    let sentence = "the boy is taking a cookie from the jar";
    let mut tokens = Vec::new();
    for _ in 0..30 {
        tokens.extend(sentence.split(' ').map(String::from));
        tokens.push(EOS_TOKEN.to_string());
    }
    let seqs = vec![TokenSequence::new("m", 0, tokens)];
    let vocab = Vocabulary::build(&seqs, 1).map_err(|e| e.to_string())?;
    let config = LmConfig {
        embedding_dim: 16,
        layer_dims: vec![16],
        batch_size: 2,
        bptt_window: 10,
        epochs: 200,
        learning_rate: 2.0,
        weight_drop: 0.0,
        seed: 5,
        ..LmConfig::default()
    };
    let init = init_params::<f32>(&config, &vocab, config.seed, None).map_err(|e| e.to_string())?;
    let (model, _) = train(&seqs, &config, &vocab, &init).map_err(|e| e.to_string())?;
    let memorised = perplexity(&model, &seqs[0]).map_err(|e| e.to_string())?;
    check(
        uniform_err < 1e-9 && memorised < 1.5,
        format!("uniform |PP - |V|| = {uniform_err:.1e}; memorised PP = {memorised:.4}"),
    )
}

// ---------------------------------------------------------------- 3

fn interpolation_criterion() -> Outcome {
    let vocab = Vocabulary::from_tokens(words(15));
    let config = LmConfig {
        embedding_dim: 5,
        layer_dims: vec![7, 5],
        ..LmConfig::default()
    };
    let w = |a: f64| InterpolationWeight::new(a).unwrap();
    let mut worst_mean: f64 = 0.0;
    let mut worst_self: f64 = 0.0;
    let mut exact = true;
    for seed in 0..20u64 {
        let dem: LmParameters<f64> = init_params(&config, &vocab, 2 * seed, None).unwrap();
        let con: LmParameters<f64> = init_params(&config, &vocab, 2 * seed + 1, None).unwrap();
        exact &= interpolate(&dem, &con, w(0.0)).unwrap() == con;
        exact &= interpolate(&dem, &con, w(1.0)).unwrap() == dem;
        let half = interpolate(&dem, &con, w(0.5)).unwrap();
        for ((h, d), c) in half.weights.tensors().iter().zip(dem.weights.tensors()).zip(con.weights.tensors()) {
            for ((x, a), b) in h.1.iter().zip(d.1).zip(c.1) {
                worst_mean = worst_mean.max((x - (a + b) / 2.0).abs());
            }
        }
        for a in [0.0, 0.3, 0.5, 0.75, 1.0] {
            let m = interpolate(&dem, &dem, w(a)).unwrap();
            for (x, y) in m.weights.tensors().iter().zip(dem.weights.tensors()) {
                for (p, q) in x.1.iter().zip(y.1) {
                    worst_self = worst_self.max((p - q).abs());
                }
            }
        }
    }
    check(
        exact && worst_mean <= 1e-12 && worst_self <= 1e-12,
        format!("alpha 0/1 exact: {exact}; alpha 0.5 vs mean {worst_mean:.1e}; self-interpolation {worst_self:.1e}"),
    )
}

// ---------------------------------------------------------------- 4

fn brute_auc(s: &[(f64, Group)]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for a in s.iter().filter(|x| x.1 == Group::Dementia) {
        for b in s.iter().filter(|x| x.1 == Group::Control) {
            pairs += 1.0;
            if a.0 > b.0 {
                wins += 1.0;
            } else if a.0 == b.0 {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Every candidate threshold, counted from scratch; the error-rate gap is
/// compared as an exact fraction.
fn sweep_eer(s: &[(f64, Group)]) -> (f64, f64) {
    let mut values: Vec<f64> = s.iter().map(|x| x.0).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut thresholds = vec![values[0] - 1.0];
    for w in values.windows(2) {
        thresholds.push(w[0] + (w[1] - w[0]) / 2.0);
    }
    thresholds.push(values[values.len() - 1] + 1.0);
    let pos = s.iter().filter(|x| x.1 == Group::Dementia).count() as i64;
    let neg = s.len() as i64 - pos;
    let mut best: Option<(i64, f64, f64)> = None;
    for t in thresholds {
        let fp = s.iter().filter(|x| x.1 == Group::Control && x.0 > t).count() as i64;
        let fn_ = s.iter().filter(|x| x.1 == Group::Dementia && x.0 <= t).count() as i64;
        let gap = (fp * pos - fn_ * neg).abs();
        let acc = (s.len() as i64 - fp - fn_) as f64 / s.len() as f64;
        if best.map_or(true, |b| gap < b.0) {
            best = Some((gap, t, acc));
        }
    }
    let (_, t, acc) = best.unwrap();
    (acc, t)
}

fn metrics_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = Vec::new();
    for set in 0..200 {
        let n = rng.gen_range(2..=50);
        let tied = set % 2 == 0;
        let scores: Vec<(f64, Group)> = (0..n)
            .map(|i| {
                let label = match i {
                    0 => Group::Dementia,
                    1 => Group::Control,
                    _ if rng.gen_bool(0.5) => Group::Dementia,
                    _ => Group::Control,
                };
                let v = if tied { rng.gen_range(0..6) as f64 } else { rng.gen_range(-3.0..3.0) };
                (v, label)
            })
            .collect();
        let a = auc(&scores).unwrap();
        if a != brute_auc(&scores) {
            mismatches.push(format!("set {set}: auc"));
        }
        let e = acc_eer(&scores).unwrap();
        if (e.accuracy, e.threshold) != sweep_eer(&scores) {
            mismatches.push(format!("set {set}: acc_eer"));
        }
        let transformed: Vec<(f64, Group)> = scores.iter().map(|&(v, g)| (v.exp() * 3.0 + 1.0, g)).collect();
        if auc(&transformed).unwrap() != a {
            mismatches.push(format!("set {set}: monotone transform"));
        }
        if !tied {
            let negated: Vec<(f64, Group)> = scores.iter().map(|&(v, g)| (-v, g)).collect();
            if (auc(&negated).unwrap() + a - 1.0).abs() > 1e-12 {
                mismatches.push(format!("set {set}: auc(-s) + auc(s) != 1"));
            }
        }
    }
    check(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "200 sets: auc, acc_eer, transform invariance all exact".into()
        } else {
            mismatches.join("; ")
        },
    )
}

// ---------------------------------------------------------------- 5

/// Normal equations XᵀX b = Xᵀy by Gaussian elimination with partial
/// pivoting.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

fn ols_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let names = ["intercept", "a", "b", "c"];
    let beta = [1.5, -2.0, 0.25, 3.0];
    let x: Vec<Vec<f64>> = (0..60)
        .map(|_| vec![1.0, rng.gen_range(-2.0..2.0), rng.gen_range(0.0..10.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let y_exact: Vec<f64> = x.iter().map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum()).collect();
    let fit = ols_fit(&x, &y_exact, &names).map_err(|e| e.to_string())?;
    let recover = fit
        .coefficients
        .iter()
        .zip(&beta)
        .map(|(c, b)| (c.estimate - b).abs())
        .fold(0.0, f64::max);

    let y: Vec<f64> = y_exact.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
    let fit = ols_fit(&x, &y, &names).map_err(|e| e.to_string())?;
    let oracle = normal_equations(&x, &y);
    let vs_oracle = fit
        .coefficients
        .iter()
        .zip(&oracle)
        .map(|(c, o)| (c.estimate - o).abs())
        .fold(0.0, f64::max);
    let r_norm = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
    let orth = (0..names.len())
        .map(|j| {
            let col_norm = x.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
            let dot: f64 = x.iter().zip(&fit.residuals).map(|(r, e)| r[j] * e).sum();
            dot.abs() / (col_norm * r_norm)
        })
        .fold(0.0, f64::max);
    check(
        recover < 1e-10 && vs_oracle < 1e-8 && orth < 1e-8,
        format!("noiseless error {recover:.1e}; vs normal equations {vs_oracle:.1e}; residual orthogonality {orth:.1e}"),
    )
}

// ---------------------------------------------------------------- 6

fn spearman_criterion() -> Outcome {
    let xs: Vec<f64> = (0..25).map(|i| i as f64 * 0.7 - 3.0).collect();
    let up: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
    let down: Vec<f64> = xs.iter().map(|x| -x * x * x).collect();
    let r_up = spearman(&xs, &up).map_err(|e| e.to_string())?;
    let r_down = spearman(&xs, &down).map_err(|e| e.to_string())?;
    // Ranks by hand: x -> 1, 2.5, 2.5, 4, 5 and y -> 1, 2, 3.5, 3.5, 5,
    // so rho = 8.75 / 9.5.
    let tied = spearman(&[1.0, 2.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 30.0, 30.0, 50.0]).map_err(|e| e.to_string())?;
    let tie_err = (tied - 35.0 / 38.0).abs();
    check(
        r_up == 1.0 && r_down == -1.0 && tie_err < 1e-12,
        format!("increasing {r_up}; decreasing {r_down}; tie case error {tie_err:.1e}"),
    )
}

// ---------------------------------------------------------------- 7

fn synthetic_run_config() -> RunConfig {
    RunConfig {
        lm_config: LmConfig {
            embedding_dim: 16,
            layer_dims: vec![16],
            batch_size: 4,
            bptt_window: 8,
            epochs: 4,
            learning_rate: 2.0,
            weight_drop: 0.0,
            ..LmConfig::default()
        },
        ..RunConfig::default()
    }
}

fn loocv_criterion() -> Outcome {
    let corpus = synthetic_corpus(&SynthParams::default(), 7);
    let report = run_loocv(&corpus, &synthetic_run_config()).map_err(|e| e.to_string())?;
    let m = report.repetitions[0];
    // Either direction of a raw perplexity counts as discrimination.
    let oriented = |a: f64| a.max(1.0 - a);
    let best_single = oriented(m.auc_p_con).max(oriented(m.auc_p_model));
    check(
        m.auc_diff > best_single && m.auc_diff >= 0.85,
        format!(
            "{} participants, {} transcripts: AUC(diff) {:.3}, AUC(P_con) {:.3}, AUC(P_dem) {:.3}, ACC_eer {:.3}",
            corpus.len(),
            corpus.transcript_count(),
            m.auc_diff,
            m.auc_p_con,
            m.auc_p_model,
            m.acc_eer_diff
        ),
    )
}

// ---------------------------------------------------------------- 8

fn perturbation_criterion() -> Outcome {
    let config = synthetic_run_config();
    let corpus = synthetic_corpus(&SynthParams::default(), 7);
    let twins = train_twins(&corpus, &config.lm_config, 11, 1, None).map_err(|e| e.to_string())?;
    let alphas = [InterpolationWeight::new(0.0).unwrap(), InterpolationWeight::new(0.75).unwrap()];
    let curve = interrogate(&twins.con, &twins.dem, &alphas, &perturbation_variants()).map_err(|e| e.to_string())?;
    let p_con: Vec<f64> = curve.perplexities(0.0).into_iter().map(|(_, p)| p).collect();
    let ranks: Vec<f64> = (0..p_con.len()).map(|r| r as f64).collect();
    let rho = spearman(&ranks, &p_con).map_err(|e| e.to_string())?;
    let strict = p_con.windows(2).all(|w| w[1] > w[0]);
    let top = FrequencyBand::From25To30;
    let at = |a: f64| curve.point(a, top).map(|p| p.mean_px_minus_po).unwrap_or(f64::NAN);
    let (e0, e75) = (at(0.0), at(0.75));
    check(
        rho > 0.9 && e75 <= e0,
        format!(
            "P_con by band [{}] (strictly increasing: {strict}), rho {rho:.3}; top band Px-Po alpha 0.75 {e75:.3} vs alpha 0 {e0:.3}",
            p_con.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 9

fn random_model(rng: &mut ChaCha8Rng) -> LmParameters<f32> {
    let vocab = Vocabulary::from_tokens(words(rng.gen_range(1..30)));
    let embedding_dim = rng.gen_range(1..9);
    let mut layer_dims: Vec<usize> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..9)).collect();
    let tie = rng.gen_bool(0.5);
    if tie {
        *layer_dims.last_mut().unwrap() = embedding_dim;
    }
    let config = LmConfig {
        embedding_dim,
        layer_dims,
        tie_embeddings: tie,
        learning_rate: rng.gen_range(0.01..50.0),
        weight_drop: rng.gen_range(0.0..1.0),
        seed: rng.gen(),
        ..LmConfig::default()
    };
    let mut model: LmParameters<f32> = init_params(&config, &vocab, rng.gen(), None).unwrap();
    // Arbitrary finite bit patterns, subnormals and signed zeros included.
    for t in model.weights.tensors_mut() {
        for v in t.iter_mut() {
            *v = loop {
                let x = f32::from_bits(rng.gen());
                if x.is_finite() {
                    break x;
                }
            };
        }
    }
    model
}

fn bits(m: &LmParameters<f32>) -> Vec<u32> {
    m.weights.tensors().iter().flat_map(|(_, d)| d.iter().map(|v| v.to_bits())).collect()
}

fn checkpoint_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut roundtrip_failures = 0;
    let mut sample = Vec::new();
    for _ in 0..50 {
        let m = random_model(&mut rng);
        let bytes = save_checkpoint(&m);
        match load_checkpoint(&bytes) {
            Ok(back) if back.config == m.config && back.vocab == m.vocab && bits(&back) == bits(&m) && save_checkpoint(&back) == bytes => {}
            _ => roundtrip_failures += 1,
        }
        sample = bytes;
    }

    let header_end = 12 + u32::from_le_bytes(sample[8..12].try_into().unwrap()) as usize;
    let (mut panics, mut accepted, mut rejected) = (0, 0, 0);
    for case in 0..3000 {
        let mut b = sample.clone();
        match case % 4 {
            0 => {
                for _ in 0..rng.gen_range(1..4) {
                    let at = rng.gen_range(0..header_end);
                    b[at] ^= rng.gen_range(1..=255u8);
                }
            }
            1 => b.truncate(rng.gen_range(0..header_end)),
            2 => b.insert(rng.gen_range(0..header_end), rng.gen()),
            _ => {
                let v: u32 = rng.gen();
                b[8..12].copy_from_slice(&v.to_le_bytes());
            }
        }
        match catch_unwind(AssertUnwindSafe(|| load_checkpoint(&b))) {
            Err(_) => panics += 1,
            Ok(Ok(_)) => accepted += 1,
            Ok(Err(_)) => rejected += 1,
        }
    }
    check(
        roundtrip_failures == 0 && panics == 0 && accepted == 0,
        format!("50 models, {roundtrip_failures} roundtrip failures; 3000 corrupted headers: {rejected} rejected, {accepted} accepted, {panics} panics"),
    )
}

// ---------------------------------------------------------------- 10

fn chat_golden_criterion() -> Outcome {
    let cases = common::golden_cases();
    let failed: Vec<String> = cases
        .iter()
        .filter(|(_, actual, expected)| actual != expected)
        .map(|(name, ..)| name.clone())
        .collect();
    check(
        cases.len() == 10 && failed.is_empty(),
        format!("{} fixtures, mismatches: {:?}", cases.len(), failed),
    )
}

fn main() {
    let criteria: [(u32, &str, Option<u64>, fn() -> Outcome); 10] = [
        (1, "gradient check", Some(5), gradient_check_criterion),
        (2, "perplexity identities", Some(30), perplexity_criterion),
        (3, "interpolation identities", None, interpolation_criterion),
        (4, "AUC and ACC_eer oracles", None, metrics_criterion),
        (5, "OLS", None, ols_criterion),
        (6, "Spearman", None, spearman_criterion),
        (7, "synthetic LOOCV", Some(300), loocv_criterion),
        (8, "perturbation curve", None, perturbation_criterion),
        (9, "checkpoint roundtrip and fuzz", None, checkpoint_criterion),
        (10, "CHAT golden files", None, chat_golden_criterion),
    ];
    let quiet_panics = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(d), Some(s)) if took > Duration::from_secs(s) => Err(format!("{d}; over the {s}s limit")),
            (o, _) => o,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>2} {name}: {detail} ({:.2}s)", took.as_secs_f64());
    }
    std::panic::set_hook(quiet_panics);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
