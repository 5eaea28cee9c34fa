//! Single-direction LSTM over a sequence, with backpropagation through time.
//!
//! Gate rows are ordered input, forget, cell candidate, output.

use alloc::vec;
use alloc::vec::Vec;

use super::params::LstmSlots;
use crate::linalg::{
    accumulate_column_sums, accumulate_input_grad, accumulate_weight_grad, axpy, dot, matmul_bt,
    sigmoid, tanh,
};

pub(crate) struct LstmWeights<'a> {
    pub w_in: &'a [f64],
    pub w_rec: &'a [f64],
    pub bias: &'a [f64],
    pub input_dim: usize,
    pub hidden: usize,
}

impl<'a> LstmWeights<'a> {
    pub fn new(params: &'a [f64], slots: &LstmSlots, hidden: usize) -> Self {
        Self {
            w_in: &params[slots.w_in.clone()],
            w_rec: &params[slots.w_rec.clone()],
            bias: &params[slots.bias.clone()],
            input_dim: slots.input_dim,
            hidden,
        }
    }
}

/// One cell update. `z` holds the input contribution `W x` on entry and the
/// activated gates on exit.
pub(crate) fn cell_step(
    w: &LstmWeights<'_>,
    z: &mut [f64],
    h_prev: Option<&[f64]>,
    c_prev: Option<&[f64]>,
    c_out: &mut [f64],
    h_out: &mut [f64],
) {
    let h = w.hidden;
    for (r, zr) in z.iter_mut().enumerate() {
        *zr += w.bias[r];
        if let Some(hp) = h_prev {
            *zr += dot(&w.w_rec[r * h..(r + 1) * h], hp);
        }
    }
    for j in 0..h {
        let i = sigmoid(z[j]);
        let f = sigmoid(z[h + j]);
        let g = tanh(z[2 * h + j]);
        let o = sigmoid(z[3 * h + j]);
        z[j] = i;
        z[h + j] = f;
        z[2 * h + j] = g;
        z[3 * h + j] = o;
        let c = f * c_prev.map_or(0.0, |c| c[j]) + i * g;
        c_out[j] = c;
        h_out[j] = o * tanh(c);
    }
}

#[derive(Clone)]
pub(crate) struct DirectionCache {
    pub frames: usize,
    pub reverse: bool,
    /// Each step starts from a zero state instead of the previous frame.
    pub stateless: bool,
    /// Activated gates, `T x 4H`, indexed by frame.
    pub gates: Vec<f64>,
    pub cells: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl DirectionCache {
    fn order(&self, step: usize) -> usize {
        if self.reverse {
            self.frames - 1 - step
        } else {
            step
        }
    }
}

pub(crate) fn forward(
    w: &LstmWeights<'_>,
    input: &[f64],
    frames: usize,
    reverse: bool,
    stateless: bool,
) -> DirectionCache {
    let h = w.hidden;
    let mut gates = vec![0.0; frames * 4 * h];
    matmul_bt(input, w.input_dim, w.w_in, &mut gates);
    let mut cache = DirectionCache {
        frames,
        reverse,
        stateless,
        gates,
        cells: vec![0.0; frames * h],
        hidden: vec![0.0; frames * h],
    };
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    for step in 0..frames {
        let t = cache.order(step);
        let carry = step > 0 && !stateless;
        let z = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let c_out = &mut cache.cells[t * h..(t + 1) * h];
        let h_out = &mut cache.hidden[t * h..(t + 1) * h];
        cell_step(
            w,
            z,
            carry.then_some(h_prev.as_slice()),
            carry.then_some(c_prev.as_slice()),
            c_out,
            h_out,
        );
        h_prev.copy_from_slice(h_out);
        c_prev.copy_from_slice(c_out);
    }
    cache
}

pub(crate) struct LstmGrads<'a> {
    pub w_in: &'a mut [f64],
    pub w_rec: &'a mut [f64],
    pub bias: &'a mut [f64],
}

/// Backpropagates `d_hidden` (`T x H`) through one direction, accumulating
/// weight gradients and adding the input gradient into `d_input`.
pub(crate) fn backward(
    w: &LstmWeights<'_>,
    cache: &DirectionCache,
    input: &[f64],
    d_hidden: &[f64],
    grads: LstmGrads<'_>,
    d_input: &mut [f64],
) {
    let h = w.hidden;
    let frames = cache.frames;
    let mut dz = vec![0.0; frames * 4 * h];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    for step in (0..frames).rev() {
        let t = cache.order(step);
        let prev = (step > 0 && !cache.stateless).then(|| cache.order(step - 1));
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let cells = &cache.cells[t * h..(t + 1) * h];
        let dz_t = &mut dz[t * 4 * h..(t + 1) * 4 * h];
        for j in 0..h {
            let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = tanh(cells[j]);
            let c_prev = prev.map_or(0.0, |p| cache.cells[p * h + j]);
            let dh = d_hidden[t * h + j] + dh_next[j];
            let d_o = dh * tc;
            let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
            dc_next[j] = dc * f;
            dz_t[j] = dc * g * i * (1.0 - i);
            dz_t[h + j] = dc * c_prev * f * (1.0 - f);
            dz_t[2 * h + j] = dc * i * (1.0 - g * g);
            dz_t[3 * h + j] = d_o * o * (1.0 - o);
        }
        dh_next.fill(0.0);
        match prev {
            Some(p) => {
                let h_prev = &cache.hidden[p * h..(p + 1) * h];
                for (r, &d) in dz_t.iter().enumerate() {
                    if d != 0.0 {
                        let row = r * h..(r + 1) * h;
                        axpy(d, &w.w_rec[row.clone()], &mut dh_next);
                        axpy(d, h_prev, &mut grads.w_rec[row]);
                    }
                }
            }
            None => dc_next.fill(0.0),
        }
    }
    accumulate_column_sums(&dz, grads.bias);
    accumulate_weight_grad(&dz, input, w.input_dim, grads.w_in);
    accumulate_input_grad(&dz, w.w_in, w.input_dim, d_input);
}
