//! Word-level LSTM language model.

pub mod checkpoint;
pub mod config;
pub mod embeddings;
pub mod gradcheck;
pub(crate) mod network;
pub mod params;
pub mod score;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint_file, save_checkpoint, write_checkpoint_file};
pub use config::{Averaging, LmConfig};
pub use embeddings::{load_embeddings, EmbeddingTable};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use network::softmax_row;
pub use params::{init_params, tensor_specs, LmParameters, LmState, LstmLayer, TensorSpec, Weights};
pub use score::{cross_entropy, forward, perplexity, perplexity_from_loss};
pub use tensor::{Matrix, Scalar};
pub use train::{train, TrainReport};
