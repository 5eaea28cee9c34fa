//! Numerical core for anchor-conditioned target speaker extraction.
//!
//! Everything in this crate is pure computation over in-memory buffers: the
//! STFT front end, the bidirectional LSTM encoder and feed-forward canonical
//! mapper with hand-written backpropagation, the extractor/attractor algebra,
//! the training loop, toy-signal synthesis, separation metrics and
//! embedding-space diagnostics. File formats and the command line live in the
//! `dxnet` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dsp;
pub mod error;
pub mod extractor;
mod linalg;
pub mod metrics;
pub mod net;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
