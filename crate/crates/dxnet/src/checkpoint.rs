//! Checkpoint files.
//!
//! Layout: `b"DXNET"`, a format version byte, a little-endian `u32` length
//! followed by that many bytes of UTF-8 JSON metadata, then one record per
//! tensor: `u32` name length, name bytes, `u32` rank, `rank` x `u32` dims and
//! the values as little-endian `f64`.

use std::fs;
use std::path::Path;

use dxnet_core::extractor::{AttractorPair, ExtractorVec};
use dxnet_core::net::{InferenceConstants, InputScaling, ModelConfig, ModelParams, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{DxError, Result};

pub const MAGIC: &[u8; 5] = b"DXNET";
pub const FORMAT_VERSION: u8 = 1;
/// Which source each fixed attractor was collected from.
pub const ATTRACTOR_ORDER: [&str; 2] = ["target", "interference"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub preset: String,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub grad_clip_norm: f64,
    pub curriculum: String,
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
    pub num_examples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub constants: InferenceConstants,
    pub training: TrainingMeta,
    /// Canonical extractors of every training example under the final weights.
    pub canonical_extractors: Vec<ExtractorVec>,
    /// Primary-space anchor extractors of every training example.
    pub anchor_extractors: Vec<ExtractorVec>,
}

impl Checkpoint {
    pub fn variant(&self) -> Variant {
        self.params.config().variant
    }

    /// The inference constant the variant relies on must be present.
    pub fn validate(&self) -> Result<()> {
        let k = self.params.config().embed_dim;
        let bad_dim = |v: &ExtractorVec| v.dim() != k;
        match self.variant() {
            Variant::Denet => match &self.constants.preset_extractor {
                None => return Err(DxError::Checkpoint("denet checkpoint lacks a preset extractor".into())),
                Some(p) if bad_dim(p) => return Err(DxError::Checkpoint("preset extractor has wrong dimension".into())),
                _ => {}
            },
            Variant::Danet => match &self.constants.attractor_pair {
                None => {
                    return Err(DxError::Checkpoint(
                        "danet checkpoint lacks the fixed attractor pair".into(),
                    ));
                }
                Some(p) if bad_dim(&p.first) || bad_dim(&p.second) => {
                    return Err(DxError::Checkpoint("attractor pair has wrong dimension".into()));
                }
                _ => {}
            },
            Variant::DanetAnchor => {}
        }
        if self
            .canonical_extractors
            .iter()
            .chain(&self.anchor_extractors)
            .any(bad_dim)
        {
            return Err(DxError::Checkpoint("stored extractor has wrong dimension".into()));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigJson {
    variant: String,
    num_rnn_layers: usize,
    rnn_hidden: usize,
    embed_dim: usize,
    ff_hidden: usize,
    num_bins: usize,
    input_scaling: String,
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    first: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct InferenceJson {
    preset_extractor: Option<Vec<f64>>,
    fixed_attractor_pair: Option<PairJson>,
    attractor_order: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ExtractorsJson {
    canonical: Vec<Vec<f64>>,
    anchor: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MetadataJson {
    config: ConfigJson,
    inference: InferenceJson,
    training: TrainingMeta,
    training_extractors: ExtractorsJson,
}

fn to_rows(v: &[ExtractorVec]) -> Vec<Vec<f64>> {
    v.iter().map(|e| e.0.clone()).collect()
}

fn from_rows(v: Vec<Vec<f64>>) -> Vec<ExtractorVec> {
    v.into_iter().map(ExtractorVec).collect()
}

fn corrupt(msg: impl Into<String>) -> DxError {
    DxError::Checkpoint(msg.into())
}

pub fn to_bytes(c: &Checkpoint) -> Result<Vec<u8>> {
    c.validate()?;
    if !c.training.final_loss.is_finite() || c.training.epoch_losses.iter().any(|l| !l.is_finite()) {
        return Err(corrupt("training losses must be finite"));
    }
    let cfg = c.params.config();
    let meta = MetadataJson {
        config: ConfigJson {
            variant: cfg.variant.name().into(),
            num_rnn_layers: cfg.num_rnn_layers,
            rnn_hidden: cfg.rnn_hidden,
            embed_dim: cfg.embed_dim,
            ff_hidden: cfg.ff_hidden,
            num_bins: cfg.num_bins,
            input_scaling: cfg.input_scaling.name().into(),
        },
        inference: InferenceJson {
            preset_extractor: c.constants.preset_extractor.as_ref().map(|p| p.0.clone()),
            fixed_attractor_pair: c.constants.attractor_pair.as_ref().map(|p| PairJson {
                first: p.first.0.clone(),
                second: p.second.0.clone(),
            }),
            attractor_order: ATTRACTOR_ORDER.iter().map(|s| s.to_string()).collect(),
        },
        training: c.training.clone(),
        training_extractors: ExtractorsJson {
            canonical: to_rows(&c.canonical_extractors),
            anchor: to_rows(&c.anchor_extractors),
        },
    };
    let json = serde_json::to_vec(&meta)?;
    let mut out = Vec::with_capacity(json.len() + 8 * c.params.len() + 1024);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&len_u32(json.len())?.to_le_bytes());
    out.extend_from_slice(&json);
    for spec in c.params.tensors() {
        out.extend_from_slice(&len_u32(spec.name.len())?.to_le_bytes());
        out.extend_from_slice(spec.name.as_bytes());
        out.extend_from_slice(&len_u32(spec.dims.len())?.to_le_bytes());
        for &d in &spec.dims {
            out.extend_from_slice(&len_u32(d)?.to_le_bytes());
        }
        for v in &c.params.as_slice()[spec.range()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn len_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| corrupt("section too large for the format"))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated file while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(corrupt("bad magic: not a dxnet checkpoint"));
    }
    let mut r = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let version = r.take(1, "version")?[0];
    if version != FORMAT_VERSION {
        return Err(corrupt(format!(
            "version mismatch: file has format {version}, expected {FORMAT_VERSION}"
        )));
    }
    let json_len = r.u32("metadata length")?;
    let meta: MetadataJson = serde_json::from_slice(r.take(json_len, "metadata")?)
        .map_err(|e| corrupt(format!("malformed metadata: {e}")))?;
    let c = &meta.config;
    let variant = Variant::parse(&c.variant).ok_or_else(|| corrupt(format!("unknown variant {}", c.variant)))?;
    let input_scaling = InputScaling::parse(&c.input_scaling)
        .ok_or_else(|| corrupt(format!("unknown input scaling {}", c.input_scaling)))?;
    let config = ModelConfig {
        variant,
        num_rnn_layers: c.num_rnn_layers,
        rnn_hidden: c.rnn_hidden,
        embed_dim: c.embed_dim,
        ff_hidden: c.ff_hidden,
        num_bins: c.num_bins,
        input_scaling,
    };
    config.validate()?;

    let mut tensors: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::new();
    while r.pos < bytes.len() {
        let name_len = r.u32("tensor name length")?;
        let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
            .map_err(|_| corrupt("tensor name is not UTF-8"))?
            .to_string();
        let rank = r.u32("tensor rank")?;
        if rank > 8 {
            return Err(corrupt(format!("tensor {name} has implausible rank {rank}")));
        }
        let dims = (0..rank).map(|_| r.u32("tensor dims")).collect::<Result<Vec<_>>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| corrupt(format!("tensor {name} is too large")))?;
        let data = r
            .take(count, "tensor data")?
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            .collect();
        tensors.push((name, dims, data));
    }
    let params = ModelParams::from_named_tensors(
        config,
        tensors.iter().map(|(n, d, v)| (n.as_str(), d.as_slice(), v.as_slice())),
    )
    .map_err(|e| corrupt(format!("tensor section does not match the config: {e}")))?;

    let inf = meta.inference;
    if inf.fixed_attractor_pair.is_some() && inf.attractor_order != ATTRACTOR_ORDER {
        return Err(corrupt(format!("unsupported attractor order {:?}", inf.attractor_order)));
    }
    let checkpoint = Checkpoint {
        params,
        constants: InferenceConstants {
            preset_extractor: inf.preset_extractor.map(ExtractorVec),
            attractor_pair: inf.fixed_attractor_pair.map(|p| AttractorPair {
                first: ExtractorVec(p.first),
                second: ExtractorVec(p.second),
            }),
        },
        training: meta.training,
        canonical_extractors: from_rows(meta.training_extractors.canonical),
        anchor_extractors: from_rows(meta.training_extractors.anchor),
    };
    checkpoint.validate()?;
    Ok(checkpoint)
}

pub fn save_checkpoint(c: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = to_bytes(c)?;
    fs::write(path, bytes).map_err(|e| DxError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| DxError::io(path, e))?;
    from_bytes(&bytes)
}
