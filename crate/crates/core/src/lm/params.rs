use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::LmConfig;
use super::embeddings::EmbeddingTable;
use super::tensor::{Matrix, Scalar};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub const GATES: usize = 4;

/// One LSTM layer. Gate blocks are stacked as input, forget, cell, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer<T> {
    /// `4h × in`
    pub input: Matrix<T>,
    /// `4h × h`
    pub recurrent: Matrix<T>,
    /// `4h`
    pub bias: Vec<T>,
}

impl<T: Scalar> LstmLayer<T> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input: Matrix::zeros(GATES * hidden, input_dim),
            recurrent: Matrix::zeros(GATES * hidden, hidden),
            bias: vec![T::zero(); GATES * hidden],
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.recurrent.cols()
    }
}

/// Every trainable tensor of a language model.
///
/// With tied embeddings the output projection is the embedding matrix
/// itself and `output` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights<T> {
    /// `|V| × embedding_dim`
    pub embedding: Matrix<T>,
    pub layers: Vec<LstmLayer<T>>,
    /// `|V| × top_dim`, untied models only.
    pub output: Option<Matrix<T>>,
    pub output_bias: Vec<T>,
}

/// Named view of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shapes [`Weights::zeros`] would allocate, computed without allocating.
/// Dimensions saturate instead of overflowing, so a nonsensical config
/// yields absurdly large shapes rather than a panic.
pub fn tensor_specs(config: &LmConfig, vocab_size: usize) -> Vec<TensorSpec> {
    let mut out = vec![spec("embedding", (vocab_size, config.embedding_dim))];
    let mut input_dim = config.embedding_dim;
    for (l, &h) in config.layer_dims.iter().enumerate() {
        let gates = h.saturating_mul(4);
        out.push(spec(&format!("layer{l}.input"), (gates, input_dim)));
        out.push(spec(&format!("layer{l}.recurrent"), (gates, h)));
        out.push(spec(&format!("layer{l}.bias"), (1, gates)));
        input_dim = h;
    }
    if !config.tie_embeddings {
        out.push(spec("output", (vocab_size, config.top_dim())));
    }
    out.push(spec("output_bias", (1, vocab_size)));
    out
}

impl<T: Scalar> Weights<T> {
    pub fn zeros(config: &LmConfig, vocab_size: usize) -> Self {
        let mut layers = Vec::with_capacity(config.layer_dims.len());
        let mut input_dim = config.embedding_dim;
        for &h in &config.layer_dims {
            layers.push(LstmLayer::zeros(input_dim, h));
            input_dim = h;
        }
        Self {
            embedding: Matrix::zeros(vocab_size, config.embedding_dim),
            layers,
            output: (!config.tie_embeddings).then(|| Matrix::zeros(vocab_size, config.top_dim())),
            output_bias: vec![T::zero(); vocab_size],
        }
    }

    pub fn zeros_like(&self) -> Self {
        self.map(|_| T::zero())
    }

    /// Output projection (`|V| × top_dim`).
    pub fn projection(&self) -> &Matrix<T> {
        self.output.as_ref().unwrap_or(&self.embedding)
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    /// Tensors in canonical order: embedding, per layer input/recurrent/bias,
    /// untied output matrix, output bias.
    pub fn tensors(&self) -> Vec<(TensorSpec, &[T])> {
        let mut out = vec![(spec("embedding", self.embedding.shape()), self.embedding.as_slice())];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((spec(&format!("layer{l}.input"), layer.input.shape()), layer.input.as_slice()));
            out.push((
                spec(&format!("layer{l}.recurrent"), layer.recurrent.shape()),
                layer.recurrent.as_slice(),
            ));
            out.push((spec(&format!("layer{l}.bias"), (1, layer.bias.len())), &layer.bias));
        }
        if let Some(o) = &self.output {
            out.push((spec("output", o.shape()), o.as_slice()));
        }
        out.push((spec("output_bias", (1, self.output_bias.len())), &self.output_bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = vec![self.embedding.as_mut_slice()];
        for layer in &mut self.layers {
            out.push(layer.input.as_mut_slice());
            out.push(layer.recurrent.as_mut_slice());
            out.push(&mut layer.bias);
        }
        if let Some(o) = &mut self.output {
            out.push(o.as_mut_slice());
        }
        out.push(&mut self.output_bias);
        out
    }

    pub fn specs(&self) -> Vec<TensorSpec> {
        self.tensors().into_iter().map(|(s, _)| s).collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, d)| d.len()).sum()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U + Copy) -> Weights<U> {
        Weights {
            embedding: self.embedding.map(f),
            layers: self
                .layers
                .iter()
                .map(|l| LstmLayer {
                    input: l.input.map(f),
                    recurrent: l.recurrent.map(f),
                    bias: l.bias.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
            output: self.output.as_ref().map(|o| o.map(f)),
            output_bias: self.output_bias.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Applies `f(self_entry, other_entry)` entrywise across identically
    /// shaped weights, in place.
    pub fn zip_apply(&mut self, other: &Weights<T>, f: impl Fn(&mut T, T)) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src.1) {
                f(d, s);
            }
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, d)| d.iter())
            .map(|v| {
                let x = v.as_f64();
                x * x
            })
            .sum()
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.tensors_mut() {
            for v in t {
                *v *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, d)| d.iter().all(|v| v.is_finite()))
    }
}

fn spec(name: &str, (rows, cols): (usize, usize)) -> TensorSpec {
    TensorSpec {
        name: name.to_string(),
        rows,
        cols,
    }
}

/// A complete language model: vocabulary, architecture and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LmParameters<T = f32> {
    pub vocab: Vocabulary,
    pub config: LmConfig,
    pub weights: Weights<T>,
}

impl<T: Scalar> LmParameters<T> {
    /// Zero weights shaped for `config` and `vocab`.
    pub fn zeros(config: LmConfig, vocab: Vocabulary) -> Self {
        let weights = Weights::zeros(&config, vocab.len());
        Self {
            vocab,
            config,
            weights,
        }
    }

    pub fn cast<U: Scalar>(&self) -> LmParameters<U> {
        LmParameters {
            vocab: self.vocab.clone(),
            config: self.config.clone(),
            weights: self.weights.map(|v| U::from_f64_lossy(v.as_f64())),
        }
    }

    pub fn zero_state(&self) -> LmState<T> {
        LmState::zeros(&self.config.layer_dims)
    }
}

/// Recurrent state of one stream: hidden and cell vectors per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LmState<T> {
    pub hidden: Vec<Vec<T>>,
    pub cell: Vec<Vec<T>>,
}

impl<T: Scalar> LmState<T> {
    pub fn zeros(layer_dims: &[usize]) -> Self {
        Self {
            hidden: layer_dims.iter().map(|&h| vec![T::zero(); h]).collect(),
            cell: layer_dims.iter().map(|&h| vec![T::zero(); h]).collect(),
        }
    }

    pub fn matches(&self, layer_dims: &[usize]) -> bool {
        self.hidden.len() == layer_dims.len()
            && self.cell.len() == layer_dims.len()
            && self
                .hidden
                .iter()
                .zip(&self.cell)
                .zip(layer_dims)
                .all(|((h, c), &d)| h.len() == d && c.len() == d)
    }
}

pub const EMBEDDING_INIT_RANGE: f64 = 0.1;

/// Initialises a model deterministically from `seed`.
///
/// Embeddings (and an untied output matrix) are uniform in ±0.1; LSTM
/// weights and biases are uniform in ±1/√h; the output bias starts at zero.
/// Vocabulary words covered by `pretrained` copy its vector instead.
pub fn init_params<T: Scalar>(
    config: &LmConfig,
    vocab: &Vocabulary,
    seed: u64,
    pretrained: Option<&EmbeddingTable>,
) -> Result<LmParameters<T>> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(Error::EmptyInput("vocabulary is empty".into()));
    }
    if let Some(table) = pretrained {
        if table.dim() != config.embedding_dim {
            return Err(Error::EmbeddingDim {
                table: table.dim(),
                model: config.embedding_dim,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Weights::<T>::zeros(config, vocab.len());
    fill_uniform(weights.embedding.as_mut_slice(), EMBEDDING_INIT_RANGE, &mut rng);
    for layer in &mut weights.layers {
        let k = 1.0 / (layer.hidden_dim() as f64).sqrt();
        fill_uniform(layer.input.as_mut_slice(), k, &mut rng);
        fill_uniform(layer.recurrent.as_mut_slice(), k, &mut rng);
        fill_uniform(&mut layer.bias, k, &mut rng);
    }
    if let Some(out) = &mut weights.output {
        fill_uniform(out.as_mut_slice(), EMBEDDING_INIT_RANGE, &mut rng);
    }

    if let Some(table) = pretrained {
        for (id, token) in vocab.tokens().iter().enumerate() {
            if id == vocab.unk_id() || id == vocab.eos_id() {
                continue;
            }
            if let Some(vec) = table.lookup(token) {
                for (dst, &src) in weights.embedding.row_mut(id).iter_mut().zip(vec.iter()) {
                    *dst = T::from_f64_lossy(src as f64);
                }
            }
        }
    }

    Ok(LmParameters {
        vocab: vocab.clone(),
        config: config.clone(),
        weights,
    })
}

fn fill_uniform<T: Scalar>(dst: &mut [T], range: f64, rng: &mut ChaCha8Rng) {
    for v in dst {
        *v = T::from_f64_lossy(rng.gen_range(-range..=range));
    }
}
