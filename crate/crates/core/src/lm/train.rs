use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Averaging, LmConfig};
use super::network::{window_backprop, Recurrent};
use super::params::{LmParameters, LmState, Weights};
use super::tensor::Scalar;
use crate::corpus::{TokenSequence, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-token training cross-entropy of each epoch.
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
    pub epochs_run: usize,
}

/// Concatenates encoded transcripts into one token stream.
pub fn encode_stream(seqs: &[TokenSequence], vocab: &Vocabulary) -> Vec<usize> {
    seqs.iter().flat_map(|s| vocab.encode(&s.tokens)).collect()
}

/// Splits a stream into `batch_size` equal contiguous columns, dropping the
/// remainder tail.
pub fn batchify(stream: &[usize], batch_size: usize) -> Vec<&[usize]> {
    let len = stream.len() / batch_size;
    (0..batch_size)
        .map(|b| &stream[b * len..(b + 1) * len])
        .collect()
}

/// Trains with SGD and truncated BPTT over `batch_size` parallel streams.
///
/// Each update uses the mean token loss of one `bptt_window` step across all
/// streams, clipped to `grad_clip` in global L2 norm. Recurrent states carry
/// over between windows and reset at each epoch. DropConnect masks on the
/// recurrent matrices are resampled per window. Everything random derives
/// from `config.seed`.
pub fn train<T: Scalar>(
    train_seqs: &[TokenSequence],
    config: &LmConfig,
    vocab: &Vocabulary,
    init: &LmParameters<T>,
) -> Result<(LmParameters<T>, TrainReport)> {
    config.validate()?;
    if &init.vocab != vocab {
        return Err(Error::ModelMismatch(
            "initial parameters were built for a different vocabulary".into(),
        ));
    }
    if !init.config.same_shape(config) {
        return Err(Error::ModelMismatch(
            "initial parameters do not match the configured architecture".into(),
        ));
    }

    let stream = encode_stream(train_seqs, vocab);
    if stream.is_empty() {
        return Err(Error::EmptyInput("training corpus is empty after encoding".into()));
    }
    let needed = config.batch_size * (config.bptt_window + 1);
    if stream.len() < needed {
        return Err(Error::CorpusTooSmall {
            tokens: stream.len(),
            batch_size: config.batch_size,
            bptt: config.bptt_window,
            needed,
        });
    }
    let columns = batchify(&stream, config.batch_size);
    let len = columns[0].len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = init.weights.clone();
    let mut average: Option<(Weights<T>, usize)> = None;
    let lr = T::from_f64_lossy(config.learning_rate);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut states: Vec<LmState<T>> = (0..config.batch_size)
            .map(|_| LmState::zeros(&config.layer_dims))
            .collect();
        let mut loss_sum = 0.0;
        let mut token_count = 0usize;
        let averaging = matches!(config.averaging, Averaging::AsgdAfterEpoch { epoch: k } if epoch > k);

        let mut pos = 0;
        while pos + 1 < len {
            let w = config.bptt_window.min(len - 1 - pos);
            let recurrent = Recurrent::drop_connect(&weights, config.weight_drop, &mut rng);
            let mut grads = weights.zeros_like();
            for (col, state) in columns.iter().zip(states.iter_mut()) {
                loss_sum += window_backprop(
                    &weights,
                    &recurrent,
                    &col[pos..pos + w],
                    &col[pos + 1..pos + w + 1],
                    state,
                    &mut grads,
                );
            }
            recurrent.mask_gradients(&mut grads);
            drop(recurrent);
            let n = (w * config.batch_size) as f64;
            token_count += w * config.batch_size;

            let norm = grads.squared_norm().sqrt() / n;
            let mut factor = 1.0 / n;
            if norm > config.grad_clip {
                factor *= config.grad_clip / norm;
            }
            let step = -lr * T::from_f64_lossy(factor);
            weights.zip_apply(&grads, |p, g| *p += step * g);

            if averaging {
                match &mut average {
                    None => average = Some((weights.clone(), 1)),
                    Some((avg, count)) => {
                        *count += 1;
                        let inv = T::from_f64_lossy(1.0 / *count as f64);
                        avg.zip_apply(&weights, |a, w| *a += (w - *a) * inv);
                    }
                }
            }
            pos += w;
        }

        let mean = loss_sum / token_count as f64;
        if !mean.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "training diverged at epoch {epoch} (loss {mean}); lower the learning rate"
            )));
        }
        epoch_losses.push(mean);
    }

    if let Some((avg, _)) = average {
        weights = avg;
    }
    let final_loss = *epoch_losses.last().expect("epochs >= 1");
    Ok((
        LmParameters {
            vocab: vocab.clone(),
            config: config.clone(),
            weights,
        },
        TrainReport {
            epoch_losses,
            final_loss,
            epochs_run: config.epochs,
        },
    ))
}
