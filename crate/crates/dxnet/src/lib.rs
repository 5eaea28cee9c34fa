//! Data handling, training orchestration, evaluation and the `dxnet`
//! command line on top of [`dxnet_core`].

pub mod checkpoint;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod extract;
pub mod manifest;
pub mod pipeline;
pub mod wav;

pub use error::{DxError, Result};
