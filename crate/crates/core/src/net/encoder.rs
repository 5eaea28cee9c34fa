use alloc::vec;
use alloc::vec::Vec;

use super::config::InputScaling;
use super::lstm::{self, DirectionCache, LstmGrads, LstmWeights};
use super::params::ModelParams;
use crate::dsp::MagnitudeSpectrogram;
use crate::error::{Error, Result};
use crate::extractor::EmbeddingField;
use crate::linalg::{accumulate_column_sums, accumulate_input_grad, accumulate_weight_grad, matmul_bt, tanh};

/// How the backward-in-time LSTM direction sees the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncoderMode {
    #[default]
    Bidirectional,
    /// The backward direction only sees the current frame, so frame `t`'s
    /// embedding depends on frames `..=t` alone.
    Causal,
}

#[derive(Clone)]
struct LayerCache {
    input: Vec<f64>,
    input_dim: usize,
    dirs: [DirectionCache; 2],
}

#[derive(Clone)]
pub(crate) struct EncoderCache {
    frames: usize,
    layers: Vec<LayerCache>,
    top: Vec<f64>,
    /// Post-tanh embeddings, `T x (F K)`, identical to the field layout.
    pub embeddings: Vec<f64>,
}

/// Encoder input for a magnitude spectrogram under the configured scaling.
pub fn input_features(scaling: InputScaling, x: &MagnitudeSpectrogram) -> Vec<f64> {
    match scaling {
        InputScaling::Raw => x.as_slice().to_vec(),
        _ => {
            let peak = x.max_value();
            x.as_slice().iter().map(|&v| scaling.scale(v, peak)).collect()
        }
    }
}

pub(crate) fn check_bins(params: &ModelParams, x: &MagnitudeSpectrogram) -> Result<()> {
    let expected = params.config().num_bins;
    if x.num_bins() != expected {
        return Err(Error::ShapeMismatch {
            context: "encoder input bins",
            expected,
            found: x.num_bins(),
        });
    }
    Ok(())
}

pub(crate) fn forward(params: &ModelParams, features: &[f64], frames: usize, mode: EncoderMode) -> EncoderCache {
    run(params, features.to_vec(), Vec::new(), frames, mode)
}

/// Re-runs the encoder from stage `start` on, reusing everything `cached`
/// computed below it. Stages are the LSTM layers, then the projection; a
/// `start` past the projection returns the cache unchanged.
pub(crate) fn forward_from(
    params: &ModelParams,
    cached: &EncoderCache,
    start: usize,
    mode: EncoderMode,
) -> EncoderCache {
    let layers = cached.layers.len();
    if start > layers {
        return cached.clone();
    }
    let input = match cached.layers.get(start) {
        Some(layer) => layer.input.clone(),
        None => cached.top.clone(),
    };
    run(params, input, cached.layers[..start].to_vec(), cached.frames, mode)
}

fn run(
    params: &ModelParams,
    mut input: Vec<f64>,
    mut layers: Vec<LayerCache>,
    frames: usize,
    mode: EncoderMode,
) -> EncoderCache {
    let cfg = params.config();
    let h = cfg.rnn_hidden;
    let data = params.as_slice();
    let mut input_dim = if layers.is_empty() { cfg.num_bins } else { 2 * h };
    for slots in &params.layout.lstm[layers.len()..] {
        let fwd_w = LstmWeights::new(data, &slots[0], h);
        let bwd_w = LstmWeights::new(data, &slots[1], h);
        let fwd = lstm::forward(&fwd_w, &input, frames, false, false);
        let bwd = lstm::forward(&bwd_w, &input, frames, true, mode == EncoderMode::Causal);
        let mut out = vec![0.0; frames * 2 * h];
        for (t, row) in out.chunks_exact_mut(2 * h).enumerate() {
            row[..h].copy_from_slice(&fwd.hidden[t * h..(t + 1) * h]);
            row[h..].copy_from_slice(&bwd.hidden[t * h..(t + 1) * h]);
        }
        layers.push(LayerCache {
            input: core::mem::replace(&mut input, out),
            input_dim,
            dirs: [fwd, bwd],
        });
        input_dim = 2 * h;
    }
    let top = input;
    let mut embeddings = vec![0.0; frames * cfg.projection_dim()];
    matmul_bt(&top, 2 * h, params.slice(&params.layout.proj_w), &mut embeddings);
    let bias = params.slice(&params.layout.proj_b);
    for row in embeddings.chunks_exact_mut(bias.len()) {
        for (e, b) in row.iter_mut().zip(bias) {
            *e = tanh(*e + b);
        }
    }
    EncoderCache {
        frames,
        layers,
        top,
        embeddings,
    }
}

/// Accumulates parameter gradients for `d_embeddings` (same layout as the
/// field) into `grads`.
pub(crate) fn backward(params: &ModelParams, cache: &EncoderCache, d_embeddings: &[f64], grads: &mut [f64]) {
    let cfg = params.config();
    let h = cfg.rnn_hidden;
    let data = params.as_slice();
    let layout = &params.layout;

    let d_pre: Vec<f64> = d_embeddings
        .iter()
        .zip(&cache.embeddings)
        .map(|(d, e)| d * (1.0 - e * e))
        .collect();
    accumulate_column_sums(&d_pre, &mut grads[layout.proj_b.clone()]);
    accumulate_weight_grad(&d_pre, &cache.top, 2 * h, &mut grads[layout.proj_w.clone()]);
    let mut d_out = vec![0.0; cache.frames * 2 * h];
    accumulate_input_grad(&d_pre, params.slice(&layout.proj_w), 2 * h, &mut d_out);

    for (layer, slots) in cache.layers.iter().zip(&layout.lstm).rev() {
        let mut d_in = vec![0.0; cache.frames * layer.input_dim];
        for dir in 0..2 {
            let d_hidden: Vec<f64> = d_out
                .chunks_exact(2 * h)
                .flat_map(|row| row[dir * h..(dir + 1) * h].iter().copied())
                .collect();
            let w = LstmWeights::new(data, &slots[dir], h);
            let (w_in, rest) = split_three(grads, &slots[dir].w_in, &slots[dir].w_rec, &slots[dir].bias);
            let (w_rec, bias) = rest;
            lstm::backward(
                &w,
                &layer.dirs[dir],
                &layer.input,
                &d_hidden,
                LstmGrads { w_in, w_rec, bias },
                &mut d_in,
            );
        }
        d_out = d_in;
    }
}

/// Disjoint mutable views of three consecutive tensors laid out in order.
fn split_three<'a>(
    grads: &'a mut [f64],
    a: &core::ops::Range<usize>,
    b: &core::ops::Range<usize>,
    c: &core::ops::Range<usize>,
) -> (&'a mut [f64], (&'a mut [f64], &'a mut [f64])) {
    debug_assert!(a.end == b.start && b.end == c.start);
    let region = &mut grads[a.start..c.end];
    let (ga, rest) = region.split_at_mut(a.len());
    let (gb, gc) = rest.split_at_mut(b.len());
    (ga, (gb, gc))
}

/// Primary embeddings of a magnitude spectrogram.
pub fn encode_primary(params: &ModelParams, x: &MagnitudeSpectrogram) -> Result<EmbeddingField> {
    encode_primary_with_mode(params, x, EncoderMode::Bidirectional)
}

pub fn encode_primary_with_mode(
    params: &ModelParams,
    x: &MagnitudeSpectrogram,
    mode: EncoderMode,
) -> Result<EmbeddingField> {
    check_bins(params, x)?;
    let cfg = params.config();
    let features = input_features(cfg.input_scaling, x);
    let cache = forward(params, &features, x.num_frames(), mode);
    EmbeddingField::from_vec(cfg.num_bins, x.num_frames(), cfg.embed_dim, cache.embeddings)
}
