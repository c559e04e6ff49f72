//! Analytic-vs-numerical gradient comparison.
//!
//! The analytic gradient is computed in f64. The finite differences are
//! evaluated in double-double arithmetic: at ε = 1e-5 plain f64 rounding in
//! the forward pass leaves ~1e-10 of noise in each numerical derivative,
//! which swamps the many gradient entries of order 1e-7.

use serde::Serialize;

use super::config::LmConfig;
use twofloat::TwoFloat;

use super::network::{sequence_loss_in, window_backprop, Recurrent};
use super::tensor::Scalar;
use super::params::{init_params, LmParameters, Weights};
use crate::corpus::{TokenSequence, Vocabulary};
use crate::error::{Error, Result};

/// Absolute floor of the relative-error denominator, so entries whose true
/// gradient is ~0 are judged by absolute error instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `(tensor name, max relative error)`
    pub per_tensor: Vec<(String, f64)>,
    pub parameters_checked: usize,
}

impl GradCheckReport {
    pub fn tensor(&self, name: &str) -> Option<f64> {
        self.per_tensor.iter().find(|(n, _)| n == name).map(|(_, e)| *e)
    }
}

/// Window used for checking: the first `bptt_window` next-token
/// predictions of `seq`.
pub(crate) fn check_window(config: &LmConfig, vocab: &Vocabulary, seq: &TokenSequence) -> Result<(Vec<usize>, Vec<usize>)> {
    let ids = vocab.encode(&seq.tokens);
    if ids.len() < 2 {
        return Err(Error::EmptyInput("gradient check needs at least two tokens".into()));
    }
    let w = config.bptt_window.min(ids.len() - 1);
    Ok((ids[..w].to_vec(), ids[1..=w].to_vec()))
}

/// Gradient of the summed window cross-entropy from a zero state, no dropout.
pub fn analytic_gradient(params: &LmParameters<f64>, inputs: &[usize], targets: &[usize]) -> Weights<f64> {
    let mut grads = params.weights.zeros_like();
    let recurrent = Recurrent::plain(&params.weights);
    let mut state = params.zero_state();
    window_backprop(&params.weights, &recurrent, inputs, targets, &mut state, &mut grads);
    grads
}

/// Summed window cross-entropy from a zero state, computed in `T`.
pub fn window_loss<T: Scalar>(weights: &Weights<T>, layer_dims: &[usize], inputs: &[usize], targets: &[usize]) -> T {
    let mut state = super::params::LmState::zeros(layer_dims);
    sequence_loss_in(weights, inputs, targets, &mut state)
}

/// Compares the analytic gradient against central finite differences for
/// every parameter of a model initialised from `config.seed`.
pub fn gradient_check(config: &LmConfig, vocab: &Vocabulary, seq: &TokenSequence, epsilon: f64) -> Result<GradCheckReport> {
    let params = init_params::<f64>(config, vocab, config.seed, None)?;
    check_params(&params, seq, epsilon, |_| true)
}

/// Like [`gradient_check`] for explicit parameters, restricted to tensors
/// whose name passes `select`.
pub fn check_params(
    params: &LmParameters<f64>,
    seq: &TokenSequence,
    epsilon: f64,
    select: impl Fn(&str) -> bool,
) -> Result<GradCheckReport> {
    let (inputs, targets) = check_window(&params.config, &params.vocab, seq)?;
    let analytic = analytic_gradient(params, &inputs, &targets);
    let dims = &params.config.layer_dims;

    let specs = params.weights.specs();
    let analytic_tensors: Vec<Vec<f64>> = analytic.tensors().into_iter().map(|(_, d)| d.to_vec()).collect();
    let mut probe: Weights<TwoFloat> = params.weights.map(TwoFloat::from);
    let eps = TwoFloat::from(epsilon);
    let mut per_tensor = Vec::new();
    let mut checked = 0;
    let mut overall: f64 = 0.0;

    for (t, spec) in specs.iter().enumerate() {
        if !select(&spec.name) {
            continue;
        }
        let mut worst: f64 = 0.0;
        for k in 0..spec.len() {
            let original = probe.tensors_mut()[t][k];
            probe.tensors_mut()[t][k] = original + eps;
            let plus = window_loss(&probe, dims, &inputs, &targets);
            probe.tensors_mut()[t][k] = original - eps;
            let minus = window_loss(&probe, dims, &inputs, &targets);
            probe.tensors_mut()[t][k] = original;

            let numeric = ((plus - minus) / (eps * 2.0)).as_f64();
            let exact = analytic_tensors[t][k];
            worst = worst.max(relative_error(exact, numeric));
            checked += 1;
        }
        overall = overall.max(worst);
        per_tensor.push((spec.name.clone(), worst));
    }

    Ok(GradCheckReport {
        max_relative_error: overall,
        per_tensor,
        parameters_checked: checked,
    })
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}
