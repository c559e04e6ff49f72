//! LSTM forward pass and truncated backpropagation through time.

use std::borrow::Cow;

use rand::Rng;

use super::params::{LmState, LstmLayer, Weights, GATES};
use super::tensor::{log_softmax_f64, sigmoid, softmax_in_place, Matrix, Scalar};

/// Recurrent matrices in effect for a forward pass: the stored ones, or
/// DropConnect-masked copies during training.
pub(crate) struct Recurrent<'a, T: Scalar> {
    matrices: Vec<Cow<'a, Matrix<T>>>,
    /// Per-layer entry multipliers (`0` or `1/(1-p)`) when masked.
    multipliers: Option<Vec<Vec<T>>>,
}

impl<'a, T: Scalar> Recurrent<'a, T> {
    pub fn plain(weights: &'a Weights<T>) -> Self {
        Self {
            matrices: weights.layers.iter().map(|l| Cow::Borrowed(&l.recurrent)).collect(),
            multipliers: None,
        }
    }

    pub fn drop_connect(weights: &'a Weights<T>, rate: f64, rng: &mut impl Rng) -> Self {
        if rate <= 0.0 {
            return Self::plain(weights);
        }
        let keep = if rate >= 1.0 {
            T::zero()
        } else {
            T::from_f64_lossy(1.0 / (1.0 - rate))
        };
        let mut matrices = Vec::with_capacity(weights.layers.len());
        let mut multipliers = Vec::with_capacity(weights.layers.len());
        for layer in &weights.layers {
            let mult: Vec<T> = (0..layer.recurrent.as_slice().len())
                .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
                .collect();
            let mut m = layer.recurrent.clone();
            for (v, &k) in m.as_mut_slice().iter_mut().zip(&mult) {
                *v *= k;
            }
            matrices.push(Cow::Owned(m));
            multipliers.push(mult);
        }
        Self {
            matrices,
            multipliers: Some(multipliers),
        }
    }

    /// Maps gradients w.r.t. the masked matrices back to the stored ones.
    pub fn mask_gradients(&self, grads: &mut Weights<T>) {
        if let Some(mults) = &self.multipliers {
            for (layer, mult) in grads.layers.iter_mut().zip(mults) {
                for (g, &k) in layer.recurrent.as_mut_slice().iter_mut().zip(mult) {
                    *g *= k;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
struct LayerCache<T> {
    x: Vec<T>,
    h_prev: Vec<T>,
    c_prev: Vec<T>,
    /// Activated gates, stacked i, f, g, o.
    gates: Vec<T>,
    tanh_c: Vec<T>,
}

fn lstm_cell<T: Scalar>(
    layer: &LstmLayer<T>,
    recurrent: &Matrix<T>,
    x: &[T],
    h: &mut [T],
    c: &mut [T],
) -> (Vec<T>, Vec<T>) {
    let hd = h.len();
    let mut z = layer.bias.clone();
    layer.input.gemv_acc(x, &mut z);
    recurrent.gemv_acc(h, &mut z);
    for (k, v) in z.iter_mut().enumerate() {
        *v = if k / hd == 2 { v.tanh() } else { sigmoid(*v) };
    }
    let mut tanh_c = vec![T::zero(); hd];
    for j in 0..hd {
        let (i, f, g, o) = (z[j], z[hd + j], z[2 * hd + j], z[3 * hd + j]);
        c[j] = f * c[j] + i * g;
        tanh_c[j] = c[j].tanh();
        h[j] = o * tanh_c[j];
    }
    (z, tanh_c)
}

/// Advances `state` by one token. The top hidden vector is left in
/// `state.hidden.last()`.
fn step<T: Scalar>(
    weights: &Weights<T>,
    recurrent: &Recurrent<'_, T>,
    token: usize,
    state: &mut LmState<T>,
    mut cache: Option<&mut Vec<LayerCache<T>>>,
) {
    let mut x: Vec<T> = weights.embedding.row(token).to_vec();
    for (l, layer) in weights.layers.iter().enumerate() {
        let h_prev = state.hidden[l].clone();
        let c_prev = state.cell[l].clone();
        let (gates, tanh_c) = lstm_cell(
            layer,
            &recurrent.matrices[l],
            &x,
            &mut state.hidden[l],
            &mut state.cell[l],
        );
        let next = state.hidden[l].clone();
        if let Some(cache) = cache.as_deref_mut() {
            cache.push(LayerCache {
                x,
                h_prev,
                c_prev,
                gates,
                tanh_c,
            });
        }
        x = next;
    }
}

fn logits_of<T: Scalar>(weights: &Weights<T>, top: &[T]) -> Vec<T> {
    let mut out = weights.output_bias.clone();
    weights.projection().gemv_acc(top, &mut out);
    out
}

/// Runs `tokens` through the network, returning one logit row per token.
pub(crate) fn forward_logits<T: Scalar>(
    weights: &Weights<T>,
    tokens: &[usize],
    state: &mut LmState<T>,
) -> Matrix<T> {
    let recurrent = Recurrent::plain(weights);
    let v = weights.vocab_size();
    let mut out = Vec::with_capacity(tokens.len() * v);
    for &tok in tokens {
        step(weights, &recurrent, tok, state, None);
        out.extend(logits_of(weights, state.hidden.last().expect("at least one layer")));
    }
    Matrix::from_vec(tokens.len(), v, out)
}

/// Summed next-token cross-entropy (natural log, f64 accumulation) of
/// `targets` given `inputs`, advancing `state`.
pub(crate) fn sequence_loss<T: Scalar>(
    weights: &Weights<T>,
    inputs: &[usize],
    targets: &[usize],
    state: &mut LmState<T>,
) -> f64 {
    debug_assert_eq!(inputs.len(), targets.len());
    let recurrent = Recurrent::plain(weights);
    let mut loss = 0.0;
    for (&inp, &tgt) in inputs.iter().zip(targets) {
        step(weights, &recurrent, inp, state, None);
        let logits = logits_of(weights, state.hidden.last().expect("at least one layer"));
        let max = logits
            .iter()
            .map(|v| v.as_f64())
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|v| (v.as_f64() - max).exp()).sum::<f64>().ln();
        loss += lse - logits[tgt].as_f64();
    }
    loss
}

/// Summed cross-entropy carried out entirely in `T`, for loss evaluations
/// that need more than double precision.
pub(crate) fn sequence_loss_in<T: Scalar>(
    weights: &Weights<T>,
    inputs: &[usize],
    targets: &[usize],
    state: &mut LmState<T>,
) -> T {
    debug_assert_eq!(inputs.len(), targets.len());
    let recurrent = Recurrent::plain(weights);
    let mut loss = T::zero();
    for (&inp, &tgt) in inputs.iter().zip(targets) {
        step(weights, &recurrent, inp, state, None);
        let logits = logits_of(weights, state.hidden.last().expect("at least one layer"));
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for &v in &logits {
            sum += (v - max).exp();
        }
        loss += max + sum.ln() - logits[tgt];
    }
    loss
}

/// Forward and backward over one window of one stream. Accumulates
/// gradients of the summed cross-entropy into `grads` (recurrent gradients
/// are w.r.t. the effective matrices; see [`Recurrent::mask_gradients`])
/// and returns the summed loss. `state` is advanced; no gradient flows
/// across the window start.
pub(crate) fn window_backprop<T: Scalar>(
    weights: &Weights<T>,
    recurrent: &Recurrent<'_, T>,
    inputs: &[usize],
    targets: &[usize],
    state: &mut LmState<T>,
    grads: &mut Weights<T>,
) -> f64 {
    debug_assert_eq!(inputs.len(), targets.len());
    let n_layers = weights.layers.len();
    let mut caches: Vec<Vec<LayerCache<T>>> = Vec::with_capacity(inputs.len());
    let mut dlogits: Vec<Vec<T>> = Vec::with_capacity(inputs.len());
    let mut tops: Vec<Vec<T>> = Vec::with_capacity(inputs.len());
    let mut loss = 0.0f64;

    for (&inp, &tgt) in inputs.iter().zip(targets) {
        let mut cache = Vec::with_capacity(n_layers);
        step(weights, recurrent, inp, state, Some(&mut cache));
        let top = state.hidden[n_layers - 1].clone();
        let mut probs = logits_of(weights, &top);
        let lp = log_softmax_f64(&probs);
        loss -= lp[tgt];
        softmax_in_place(&mut probs);
        probs[tgt] -= T::one();
        caches.push(cache);
        dlogits.push(probs);
        tops.push(top);
    }

    let tied = weights.output.is_none();
    let mut dh_next: Vec<Vec<T>> = weights
        .layers
        .iter()
        .map(|l| vec![T::zero(); l.hidden_dim()])
        .collect();
    let mut dc_next = dh_next.clone();

    for t in (0..inputs.len()).rev() {
        let dlogit = &dlogits[t];
        for (g, &d) in grads.output_bias.iter_mut().zip(dlogit) {
            *g += d;
        }
        let mut dh = vec![T::zero(); tops[t].len()];
        weights.projection().gemv_t_acc(dlogit, &mut dh);
        if tied {
            grads.embedding.outer_acc(dlogit, &tops[t]);
        } else {
            grads
                .output
                .as_mut()
                .expect("untied grads carry an output matrix")
                .outer_acc(dlogit, &tops[t]);
        }

        for l in (0..n_layers).rev() {
            let cache = &caches[t][l];
            let hd = cache.h_prev.len();
            for (a, b) in dh.iter_mut().zip(&dh_next[l]) {
                *a += *b;
            }
            let mut dz = vec![T::zero(); GATES * hd];
            for j in 0..hd {
                let i = cache.gates[j];
                let f = cache.gates[hd + j];
                let g = cache.gates[2 * hd + j];
                let o = cache.gates[3 * hd + j];
                let tc = cache.tanh_c[j];
                let d_o = dh[j] * tc * o * (T::one() - o);
                let dc = dh[j] * o * (T::one() - tc * tc) + dc_next[l][j];
                dz[j] = dc * g * i * (T::one() - i);
                dz[hd + j] = dc * cache.c_prev[j] * f * (T::one() - f);
                dz[2 * hd + j] = dc * i * (T::one() - g * g);
                dz[3 * hd + j] = d_o;
                dc_next[l][j] = dc * f;
            }
            let gl = &mut grads.layers[l];
            gl.input.outer_acc(&dz, &cache.x);
            gl.recurrent.outer_acc(&dz, &cache.h_prev);
            for (b, &d) in gl.bias.iter_mut().zip(&dz) {
                *b += d;
            }
            let mut dh_prev = vec![T::zero(); hd];
            recurrent.matrices[l].gemv_t_acc(&dz, &mut dh_prev);
            dh_next[l] = dh_prev;
            let mut dx = vec![T::zero(); cache.x.len()];
            weights.layers[l].input.gemv_t_acc(&dz, &mut dx);
            dh = dx;
        }
        let row = grads.embedding.row_mut(inputs[t]);
        for (g, &d) in row.iter_mut().zip(&dh) {
            *g += d;
        }
    }
    loss
}

/// Predictive distribution check helper: softmax of one logit row.
pub fn softmax_row<T: Scalar>(logits: &[T]) -> Vec<f64> {
    log_softmax_f64(logits)
        .into_iter()
        .map(f64::exp)
        .collect()
}
