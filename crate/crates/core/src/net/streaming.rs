//! Frame-by-frame mask estimation for fixed-extractor inference.
//!
//! The forward LSTM direction carries state across frames; the backward
//! direction is evaluated on the current frame alone. Each pushed frame
//! therefore yields its mask immediately, matching
//! [`EncoderMode::Causal`](super::EncoderMode::Causal) offline encoding.

use alloc::vec;
use alloc::vec::Vec;

use super::config::InputScaling;
use super::inference::{InferenceConstants, InferenceMode, anchor_point, check_mode, pair, preset};
use super::lstm::{LstmWeights, cell_step};
use super::params::ModelParams;
use crate::dsp::MagnitudeSpectrogram;
use crate::error::{Error, Result};
use crate::extractor::{ExtractorVec, mask_value, nearest_attractor};
use crate::linalg::{dot, tanh};

#[derive(Debug, Clone)]
pub struct StreamingMasker {
    params: ModelParams,
    /// Anchor extractor fed to the canonical mapper, when scoring happens in
    /// the canonical space.
    mapper_anchor: Option<ExtractorVec>,
    extractor: ExtractorVec,
    /// Forward-direction `(h, c)` per layer.
    state: Vec<(Vec<f64>, Vec<f64>)>,
    started: bool,
    running_peak: f64,
}

impl StreamingMasker {
    /// Supports the single-mask fixed-extractor modes: preset, anchor and
    /// nearest. The anchor is encoded whole up front.
    pub fn new(
        params: ModelParams,
        constants: &InferenceConstants,
        mode: InferenceMode,
        anchor: &MagnitudeSpectrogram,
    ) -> Result<Self> {
        check_mode(&params, mode)?;
        let a = anchor_point(&params, Some(anchor))?;
        let (mapper_anchor, extractor) = match mode {
            InferenceMode::Preset => (Some(a), preset(constants)?.clone()),
            InferenceMode::Anchor => (None, a),
            InferenceMode::Nearest => (None, nearest_attractor(pair(constants)?, &a).clone()),
            InferenceMode::OracleMembership | InferenceMode::DanetOracle => {
                return Err(Error::InvalidConfig("mode cannot run frame by frame"));
            }
        };
        let h = params.config().rnn_hidden;
        let layers = params.config().num_rnn_layers;
        Ok(Self {
            params,
            mapper_anchor,
            extractor,
            state: vec![(vec![0.0; h], vec![0.0; h]); layers],
            started: false,
            running_peak: 0.0,
        })
    }

    /// Mask for one magnitude frame of `num_bins` values.
    pub fn push_frame(&mut self, magnitudes: &[f64]) -> Result<Vec<f64>> {
        let cfg = *self.params.config();
        if magnitudes.len() != cfg.num_bins {
            return Err(Error::ShapeMismatch {
                context: "streaming frame",
                expected: cfg.num_bins,
                found: magnitudes.len(),
            });
        }
        let h = cfg.rnn_hidden;
        let mut input: Vec<f64> = match cfg.input_scaling {
            InputScaling::Raw => magnitudes.to_vec(),
            scaling => {
                // Only the peak seen so far is known.
                self.running_peak = magnitudes.iter().copied().fold(self.running_peak, f64::max);
                magnitudes.iter().map(|&m| scaling.scale(m, self.running_peak)).collect()
            }
        };
        let data = self.params.as_slice();
        for (slots, (h_state, c_state)) in self.params.layout.lstm.iter().zip(&mut self.state) {
            let mut out = vec![0.0; 2 * h];
            for (dir, slot) in slots.iter().enumerate() {
                let w = LstmWeights::new(data, slot, h);
                let mut z: Vec<f64> = w.w_in.chunks_exact(w.input_dim).map(|row| dot(row, &input)).collect();
                let mut c = vec![0.0; h];
                let mut hid = vec![0.0; h];
                if dir == 0 {
                    let carry = self.started;
                    cell_step(
                        &w,
                        &mut z,
                        carry.then_some(h_state.as_slice()),
                        carry.then_some(c_state.as_slice()),
                        &mut c,
                        &mut hid,
                    );
                    h_state.copy_from_slice(&hid);
                    c_state.copy_from_slice(&c);
                } else {
                    cell_step(&w, &mut z, None, None, &mut c, &mut hid);
                }
                out[dir * h..(dir + 1) * h].copy_from_slice(&hid);
            }
            input = out;
        }
        self.started = true;

        let proj_w = self.params.slice(&self.params.layout.proj_w);
        let proj_b = self.params.slice(&self.params.layout.proj_b);
        let embeddings: Vec<f64> = proj_w
            .chunks_exact(2 * h)
            .zip(proj_b)
            .map(|(row, b)| tanh(dot(row, &input) + b))
            .collect();
        let scored = match &self.mapper_anchor {
            Some(a) => super::mapper::forward(&self.params, a.as_slice(), &embeddings)?.out,
            None => embeddings,
        };
        Ok(scored
            .chunks_exact(cfg.embed_dim)
            .map(|e| mask_value(dot(self.extractor.as_slice(), e)))
            .collect())
    }
}
