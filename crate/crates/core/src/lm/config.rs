use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iterate averaging applied during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    None,
    /// Average iterates from every update after epoch `epoch` (1-based)
    /// and return the average at the end of training.
    AsgdAfterEpoch { epoch: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    pub embedding_dim: usize,
    pub layer_dims: Vec<usize>,
    pub tie_embeddings: bool,
    /// DropConnect rate on the recurrent matrices during training.
    pub weight_drop: f64,
    pub batch_size: usize,
    pub bptt_window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Global gradient-norm clip.
    pub grad_clip: f64,
    pub seed: u64,
    pub averaging: Averaging,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 200,
            layer_dims: vec![800, 200],
            tie_embeddings: true,
            weight_drop: 0.5,
            batch_size: 20,
            bptt_window: 10,
            epochs: 20,
            learning_rate: 20.0,
            grad_clip: 0.25,
            seed: 0,
            averaging: Averaging::None,
        }
    }
}

impl LmConfig {
    /// Defaults for models initialised from pre-trained embeddings: a lower
    /// starting learning rate keeps more of the injected information.
    pub fn pretrained() -> Self {
        Self {
            learning_rate: 5.0,
            ..Self::default()
        }
    }

    pub fn top_dim(&self) -> usize {
        self.layer_dims.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be >= 1".into());
        }
        if self.layer_dims.is_empty() || self.layer_dims.contains(&0) {
            return bad("layer_dims must be non-empty with positive entries".into());
        }
        if self.tie_embeddings && self.top_dim() != self.embedding_dim {
            return bad(format!(
                "tied embeddings need the last layer ({}) to equal embedding_dim ({})",
                self.top_dim(),
                self.embedding_dim
            ));
        }
        if !(0.0..=1.0).contains(&self.weight_drop) {
            return bad(format!("weight_drop {} outside [0, 1]", self.weight_drop));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.bptt_window == 0 {
            return bad("bptt_window must be >= 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        if !(self.grad_clip > 0.0) {
            return bad(format!("grad_clip {} must be > 0", self.grad_clip));
        }
        if let Averaging::AsgdAfterEpoch { epoch } = self.averaging {
            if epoch >= self.epochs {
                return bad(format!(
                    "averaging starts after epoch {epoch} but training runs {} epochs",
                    self.epochs
                ));
            }
        }
        Ok(())
    }

    /// True when two configs produce parameter tensors of identical shapes.
    pub fn same_shape(&self, other: &LmConfig) -> bool {
        self.embedding_dim == other.embedding_dim
            && self.layer_dims == other.layer_dims
            && self.tie_embeddings == other.tie_embeddings
    }
}
