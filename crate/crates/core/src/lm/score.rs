use super::network::{forward_logits, sequence_loss};
use super::params::{LmParameters, LmState};
use super::tensor::{Matrix, Scalar};
use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

/// Runs each window of token ids through the model from its matching state.
///
/// Returns one `window × |V|` logit matrix per batch entry together with the
/// post-window states, so consecutive calls continue statefully.
pub fn forward<T: Scalar>(
    params: &LmParameters<T>,
    windows: &[Vec<usize>],
    states: &[LmState<T>],
) -> Result<(Vec<Matrix<T>>, Vec<LmState<T>>)> {
    if windows.len() != states.len() {
        return Err(Error::StateMismatch(format!(
            "{} windows but {} states",
            windows.len(),
            states.len()
        )));
    }
    let v = params.vocab.len();
    for w in windows {
        if let Some(&id) = w.iter().find(|&&id| id >= v) {
            return Err(Error::TokenOutOfRange { id, size: v });
        }
    }
    for s in states {
        if !s.matches(&params.config.layer_dims) {
            return Err(Error::StateMismatch(format!(
                "state does not match layer dims {:?}",
                params.config.layer_dims
            )));
        }
    }
    let mut logits = Vec::with_capacity(windows.len());
    let mut next = Vec::with_capacity(windows.len());
    for (w, s) in windows.iter().zip(states) {
        let mut state = s.clone();
        logits.push(forward_logits(&params.weights, w, &mut state));
        next.push(state);
    }
    Ok((logits, next))
}

/// Summed cross-entropy and scored-token count of one transcript, scored in
/// a single stateful pass from a zero state. The end-of-sequence token acts
/// as the initial context so every token, including the first, is
/// predicted. Out-of-vocabulary words score as the unknown token.
pub fn cross_entropy<T: Scalar>(params: &LmParameters<T>, seq: &TokenSequence) -> Result<(f64, usize)> {
    let targets = params.vocab.encode(&seq.tokens);
    if targets.is_empty() {
        return Err(Error::EmptyInput(format!(
            "cannot score empty transcript {} visit {}",
            seq.participant_id, seq.visit
        )));
    }
    let mut inputs = Vec::with_capacity(targets.len());
    inputs.push(params.vocab.eos_id());
    inputs.extend_from_slice(&targets[..targets.len() - 1]);
    let mut state = params.zero_state();
    let loss = sequence_loss(&params.weights, &inputs, &targets, &mut state);
    Ok((loss, targets.len()))
}

/// `exp(mean token cross-entropy)` of a transcript.
pub fn perplexity<T: Scalar>(params: &LmParameters<T>, seq: &TokenSequence) -> Result<f64> {
    let (loss, n) = cross_entropy(params, seq)?;
    Ok(perplexity_from_loss(loss / n as f64))
}

pub fn perplexity_from_loss(mean_loss: f64) -> f64 {
    mean_loss.exp()
}
