//! Flags shared by several subcommands and the config-file merge.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde_json::Value;

use pplab_core::lm::{Averaging, LmConfig};
use pplab_core::RunConfig;

/// Language-model flags; each overrides the config file when given.
#[derive(Args, Debug, Clone, Default)]
pub struct LmArgs {
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Comma-separated hidden sizes, bottom layer first
    #[arg(long, value_delimiter = ',')]
    pub layer_dims: Option<Vec<usize>>,
    #[arg(long)]
    pub tie_embeddings: Option<bool>,
    #[arg(long)]
    pub weight_drop: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub bptt_window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub grad_clip: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Switch to averaged SGD after this many epochs
    #[arg(long)]
    pub asgd_after_epoch: Option<usize>,
}

impl LmArgs {
    pub fn apply(&self, c: &mut LmConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &self.$f { c.$f = v.clone(); })*};
        }
        set!(embedding_dim, layer_dims, tie_embeddings, weight_drop, batch_size, bptt_window, epochs, learning_rate, grad_clip, seed);
        if let Some(k) = self.asgd_after_epoch {
            c.averaging = Averaging::AsgdAfterEpoch { epoch: k };
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// JSON run configuration; explicit flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Defaults (pre-trained defaults when embeddings are supplied), then the
/// config file, then flags.
pub fn effective_run_config(cfg: &ConfigArgs, lm: &LmArgs, pretrained: bool) -> Result<RunConfig> {
    let mut base = RunConfig::default();
    if pretrained {
        base.lm_config = LmConfig::pretrained();
    }
    if let Some(path) = &cfg.config {
        let file = read_json(path)?;
        let mut merged = serde_json::to_value(&base)?;
        merge(&mut merged, file);
        base = serde_json::from_value(merged).with_context(|| format!("invalid config file {}", path.display()))?;
    }
    lm.apply(&mut base.lm_config);
    Ok(base)
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
