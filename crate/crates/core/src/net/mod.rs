//! Trainable networks: a stacked bidirectional LSTM encoder projecting each
//! frame to F x K embeddings, and a small feed-forward network mapping
//! `[anchor extractor, primary embedding]` to the canonical space.

mod config;
mod encoder;
mod inference;
mod lstm;
mod mapper;
mod model;
mod params;
mod streaming;

pub use config::{InputScaling, ModelConfig, Variant};
pub use encoder::{EncoderMode, encode_primary, encode_primary_with_mode, input_features};
pub use inference::{InferenceConstants, InferenceInput, InferenceMode, infer_masks};
pub use mapper::map_canonical;
pub use model::{
    ExampleExtractors, LossProbe, PRESENCE_FLOOR_DB, TrainingExample, collect_extractors, compute_gradients, example_loss,
    example_loss_and_gradients,
};
pub use params::{Gradients, ModelParams, TensorSpec, init_params};
pub use streaming::StreamingMasker;
