use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, Variant};
use crate::error::{Error, Result};

/// Name, shape and position of one tensor inside the flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub dims: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LstmSlots {
    pub input_dim: usize,
    pub w_in: Range<usize>,
    pub w_rec: Range<usize>,
    pub bias: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct MapperSlots {
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    /// `[forward, backward]` per layer.
    pub lstm: Vec<[LstmSlots; 2]>,
    pub proj_w: Range<usize>,
    pub proj_b: Range<usize>,
    pub mapper: Option<MapperSlots>,
    pub tensors: Vec<TensorSpec>,
    pub total: usize,
}

impl Layout {
    fn new(cfg: &ModelConfig) -> Self {
        let mut tensors = Vec::new();
        let mut total = 0;
        let mut push = |name: String, dims: Vec<usize>| {
            let spec = TensorSpec {
                name,
                dims,
                offset: total,
            };
            total += spec.len();
            let range = spec.range();
            tensors.push(spec);
            range
        };
        let h = cfg.rnn_hidden;
        let mut lstm = Vec::with_capacity(cfg.num_rnn_layers);
        for layer in 0..cfg.num_rnn_layers {
            let input_dim = if layer == 0 { cfg.num_bins } else { 2 * h };
            let mut dir = |tag: &str| LstmSlots {
                input_dim,
                w_in: push(format!("encoder.l{layer}.{tag}.w_in"), vec![4 * h, input_dim]),
                w_rec: push(format!("encoder.l{layer}.{tag}.w_rec"), vec![4 * h, h]),
                bias: push(format!("encoder.l{layer}.{tag}.bias"), vec![4 * h]),
            };
            let fwd = dir("fwd");
            let bwd = dir("bwd");
            lstm.push([fwd, bwd]);
        }
        let proj_w = push("projection.weight".into(), vec![cfg.projection_dim(), 2 * h]);
        let proj_b = push("projection.bias".into(), vec![cfg.projection_dim()]);
        let mapper = (cfg.variant == Variant::Denet).then(|| {
            let k = cfg.embed_dim;
            MapperSlots {
                w1: push("mapper.w1".into(), vec![cfg.ff_hidden, 2 * k]),
                b1: push("mapper.b1".into(), vec![cfg.ff_hidden]),
                w2: push("mapper.w2".into(), vec![k, cfg.ff_hidden]),
                b2: push("mapper.b2".into(), vec![k]),
            }
        });
        Self {
            lstm,
            proj_w,
            proj_b,
            mapper,
            tensors,
            total,
        }
    }
}

impl Layout {
    /// Lowest encoder stage a parameter influences: its LSTM layer, then the
    /// projection, then everything above the encoder.
    pub fn stage_of(&self, index: usize) -> usize {
        for (layer, slots) in self.lstm.iter().enumerate() {
            if index < slots[1].bias.end {
                return layer;
            }
        }
        if index < self.proj_b.end {
            self.lstm.len()
        } else {
            self.lstm.len() + 1
        }
    }
}

/// All trainable weights in one flat buffer, addressed through a layout that
/// depends only on the [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: ModelConfig,
    pub(crate) layout: Layout,
    data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let data = vec![0.0; layout.total];
        Ok(Self {
            config,
            layout,
            data,
        })
    }

    /// Rebuilds parameters from named tensors, e.g. when loading a checkpoint.
    /// Every tensor of the layout must be present exactly once with matching
    /// dimensions.
    pub fn from_named_tensors<'a, I>(config: ModelConfig, tensors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a [usize], &'a [f64])>,
    {
        let mut params = Self::zeros(config)?;
        let mut seen = vec![false; params.layout.tensors.len()];
        for (name, dims, values) in tensors {
            let idx = params
                .layout
                .tensors
                .iter()
                .position(|t| t.name == name)
                .ok_or(Error::InvalidConfig("unknown tensor name"))?;
            let spec = &params.layout.tensors[idx];
            if spec.dims != dims || values.len() != spec.len() {
                return Err(Error::ShapeMismatch {
                    context: "named tensor",
                    expected: spec.len(),
                    found: values.len(),
                });
            }
            if seen[idx] {
                return Err(Error::InvalidConfig("duplicate tensor"));
            }
            seen[idx] = true;
            let range = spec.range();
            params.data[range].copy_from_slice(values);
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig("missing tensor"));
        }
        Ok(params)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.layout.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .tensors
            .iter()
            .find(|t| t.name == name)
            .map(|t| &self.data[t.range()])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn slice(&self, range: &Range<usize>) -> &[f64] {
        &self.data[range.clone()]
    }
}

/// Gradient buffer congruent with a [`ModelParams`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    data: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            data: vec![0.0; params.len()],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|g| g * g).sum())
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Uniform initialization in `±sqrt(1 / fan_in)`; biases start at zero except
/// the LSTM forget gates, which start at one.
pub fn init_params(cfg: ModelConfig, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = cfg.rnn_hidden;
    let layout = params.layout.clone();
    let mut fill = |range: &Range<usize>, fan_in: usize, data: &mut [f64]| {
        let bound = libm::sqrt(1.0 / fan_in as f64);
        for v in &mut data[range.clone()] {
            *v = rng.gen_range(-bound..bound);
        }
    };
    for layer in &layout.lstm {
        for dir in layer {
            fill(&dir.w_in, dir.input_dim, &mut params.data);
            fill(&dir.w_rec, h, &mut params.data);
            params.data[dir.bias.start + h..dir.bias.start + 2 * h].fill(1.0);
        }
    }
    fill(&layout.proj_w, 2 * h, &mut params.data);
    if let Some(m) = &layout.mapper {
        fill(&m.w1, 2 * cfg.embed_dim, &mut params.data);
        fill(&m.w2, cfg.ff_hidden, &mut params.data);
    }
    Ok(params)
}
