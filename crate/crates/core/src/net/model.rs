//! Per-variant training forward pass and its exact gradient.
//!
//! * `denet`: anchor and mixture share the encoder; the anchor extractor is
//!   broadcast into the canonical mapper, the canonical extractor is the mean
//!   of canonical embeddings over the ideal target membership, and the mask is
//!   the sigmoid similarity to that extractor.
//! * `danet_anchor`: mask is the sigmoid similarity of primary mixture
//!   embeddings to the anchor extractor.
//! * `danet`: one attractor per source (target, interference) from the mixture
//!   embeddings; the reconstruction loss is summed over both sources.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::config::Variant;
use super::encoder::{self, EncoderCache, EncoderMode, check_bins, input_features};
use super::mapper::{self, MapperCache};
use super::params::{Gradients, ModelParams};
use crate::dsp::{MagnitudeSpectrogram, PresenceMask, presence_mask};
use crate::error::{Error, Result};
use crate::extractor::{ExtractorVec, MembershipMask, ideal_membership, mask_value};
use crate::linalg::{axpy, dot};

/// Presence / membership floor below the maximum magnitude, in dB.
pub const PRESENCE_FLOOR_DB: f64 = 40.0;

/// One supervised training item in magnitude space.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub mixture: MagnitudeSpectrogram,
    pub target: MagnitudeSpectrogram,
    /// Magnitude of the summed interference signal.
    pub interference: MagnitudeSpectrogram,
    pub target_membership: MembershipMask,
    /// Present mixture bins not assigned to the target.
    pub interference_membership: MembershipMask,
    pub anchor: Option<MagnitudeSpectrogram>,
    pub anchor_presence: Option<PresenceMask>,
}

impl TrainingExample {
    /// Builds memberships from the per-interferer magnitudes and the anchor
    /// presence function from the anchor magnitude.
    pub fn new(
        mixture: MagnitudeSpectrogram,
        target: MagnitudeSpectrogram,
        interferers: &[MagnitudeSpectrogram],
        interference: MagnitudeSpectrogram,
        anchor: Option<MagnitudeSpectrogram>,
    ) -> Result<Self> {
        mixture.check_same_shape(&interference, "training example")?;
        let target_membership = ideal_membership(&target, interferers, &mixture, PRESENCE_FLOOR_DB)?;
        let present = presence_mask(&mixture, PRESENCE_FLOOR_DB);
        let interference_membership = crate::dsp::TfGrid::from_vec(
            mixture.num_bins(),
            mixture.num_frames(),
            present
                .as_slice()
                .iter()
                .zip(target_membership.as_slice())
                .map(|(&p, &t)| p && !t)
                .collect(),
        )?;
        let anchor_presence = anchor.as_ref().map(|a| presence_mask(a, PRESENCE_FLOOR_DB));
        Ok(Self {
            mixture,
            target,
            interference,
            target_membership,
            interference_membership,
            anchor,
            anchor_presence,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.mixture.num_frames()
    }

    /// The same example restricted to a frame range of the mixture; the
    /// anchor is kept whole.
    pub fn crop(&self, frames: Range<usize>) -> Self {
        Self {
            mixture: self.mixture.frames(frames.clone()),
            target: self.target.frames(frames.clone()),
            interference: self.interference.frames(frames.clone()),
            target_membership: self.target_membership.frames(frames.clone()),
            interference_membership: self.interference_membership.frames(frames),
            anchor: self.anchor.clone(),
            anchor_presence: self.anchor_presence.clone(),
        }
    }

    fn anchor_parts(&self) -> Result<(&MagnitudeSpectrogram, &PresenceMask)> {
        match (&self.anchor, &self.anchor_presence) {
            (Some(a), Some(y)) => Ok((a, y)),
            _ => Err(Error::MissingInput("anchor")),
        }
    }
}

/// A mask head: `m = sigmoid(a . v)` against a reconstruction target.
struct Head {
    extractor: ExtractorVec,
    mask: Vec<f64>,
    /// Bins the extractor was averaged over, when it derives from the same
    /// field the mask is applied to.
    selection: Option<(MembershipMask, usize)>,
    reference: MagnitudeSpectrogram,
}

struct AnchorPass {
    cache: EncoderCache,
    presence: PresenceMask,
    count: usize,
    extractor: ExtractorVec,
}

struct ForwardPass {
    loss: f64,
    mixture: EncoderCache,
    anchor: Option<AnchorPass>,
    mapper: Option<MapperCache>,
    heads: Vec<Head>,
}

fn selected_mean(field: &[f64], dim: usize, y: &MembershipMask, empty: Error) -> Result<(ExtractorVec, usize)> {
    let mut sum = vec![0.0; dim];
    let mut count = 0;
    for (e, &sel) in field.chunks_exact(dim).zip(y.as_slice()) {
        if sel {
            axpy(1.0, e, &mut sum);
            count += 1;
        }
    }
    if count == 0 {
        return Err(empty);
    }
    let inv = 1.0 / count as f64;
    sum.iter_mut().for_each(|s| *s *= inv);
    Ok((ExtractorVec(sum), count))
}

fn head_mask(extractor: &ExtractorVec, field: &[f64]) -> Vec<f64> {
    field
        .chunks_exact(extractor.dim())
        .map(|e| mask_value(dot(extractor.as_slice(), e)))
        .collect()
}

fn reconstruction_error(x: &MagnitudeSpectrogram, s: &MagnitudeSpectrogram, m: &[f64]) -> f64 {
    x.as_slice()
        .iter()
        .zip(s.as_slice())
        .zip(m)
        .map(|((x, s), m)| {
            let r = s - x * m;
            r * r
        })
        .sum()
}

fn check_example(params: &ModelParams, ex: &TrainingExample) -> Result<()> {
    check_bins(params, &ex.mixture)?;
    ex.mixture.check_same_shape(&ex.target, "training example")?;
    ex.mixture.check_same_shape(&ex.target_membership, "training example")?;
    ex.mixture.check_same_shape(&ex.interference_membership, "training example")?;
    if ex.mixture.num_frames() == 0 {
        return Err(Error::EmptyInput("mixture"));
    }
    Ok(())
}

fn encode_anchor(params: &ModelParams, ex: &TrainingExample, reuse: Option<(&EncoderCache, usize)>) -> Result<AnchorPass> {
    let (anchor, presence) = ex.anchor_parts()?;
    check_bins(params, anchor)?;
    let cfg = params.config();
    let cache = match reuse {
        Some((cached, stage)) => encoder::forward_from(params, cached, stage, EncoderMode::Bidirectional),
        None => {
            let features = input_features(cfg.input_scaling, anchor);
            encoder::forward(params, &features, anchor.num_frames(), EncoderMode::Bidirectional)
        }
    };
    let (extractor, count) =
        selected_mean(&cache.embeddings, cfg.embed_dim, presence, Error::EmptyAnchorPresence)?;
    Ok(AnchorPass {
        cache,
        presence: presence.clone(),
        count,
        extractor,
    })
}

fn forward(params: &ModelParams, ex: &TrainingExample) -> Result<ForwardPass> {
    forward_with(params, ex, None)
}

/// Forward pass, optionally resuming the encoders of an earlier pass on the
/// same example from a given encoder stage.
fn forward_with(params: &ModelParams, ex: &TrainingExample, reuse: Option<(&ForwardPass, usize)>) -> Result<ForwardPass> {
    check_example(params, ex)?;
    let cfg = params.config();
    let k = cfg.embed_dim;
    let mixture = match reuse {
        Some((pass, stage)) => encoder::forward_from(params, &pass.mixture, stage, EncoderMode::Bidirectional),
        None => {
            let features = input_features(cfg.input_scaling, &ex.mixture);
            encoder::forward(params, &features, ex.mixture.num_frames(), EncoderMode::Bidirectional)
        }
    };
    let anchor_reuse = reuse.and_then(|(pass, stage)| pass.anchor.as_ref().map(|a| (&a.cache, stage)));

    let (anchor, mapper, heads) = match cfg.variant {
        Variant::Denet => {
            let anchor = encode_anchor(params, ex, anchor_reuse)?;
            let mapped = mapper::forward(params, anchor.extractor.as_slice(), &mixture.embeddings)?;
            let (extractor, count) =
                selected_mean(&mapped.out, k, &ex.target_membership, Error::EmptyMembership)?;
            let mask = head_mask(&extractor, &mapped.out);
            let head = Head {
                extractor,
                mask,
                selection: Some((ex.target_membership.clone(), count)),
                reference: ex.target.clone(),
            };
            (Some(anchor), Some(mapped), vec![head])
        }
        Variant::DanetAnchor => {
            let anchor = encode_anchor(params, ex, anchor_reuse)?;
            let extractor = anchor.extractor.clone();
            let mask = head_mask(&extractor, &mixture.embeddings);
            let head = Head {
                extractor,
                mask,
                selection: None,
                reference: ex.target.clone(),
            };
            (Some(anchor), None, vec![head])
        }
        Variant::Danet => {
            let sources = [
                (&ex.target_membership, &ex.target),
                (&ex.interference_membership, &ex.interference),
            ];
            let mut heads = Vec::with_capacity(2);
            for (membership, reference) in sources {
                let (extractor, count) =
                    selected_mean(&mixture.embeddings, k, membership, Error::EmptyMembership)?;
                let mask = head_mask(&extractor, &mixture.embeddings);
                heads.push(Head {
                    extractor,
                    mask,
                    selection: Some((membership.clone(), count)),
                    reference: reference.clone(),
                });
            }
            (None, None, heads)
        }
    };

    let loss = heads
        .iter()
        .map(|h| reconstruction_error(&ex.mixture, &h.reference, &h.mask))
        .sum::<f64>();
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { value: loss });
    }
    Ok(ForwardPass {
        loss,
        mixture,
        anchor,
        mapper,
        heads,
    })
}

/// Backpropagates one head into `d_field`; returns the gradient with respect
/// to an externally supplied extractor (zero-length when it was derived from
/// the field itself).
fn head_backward(head: &Head, x: &MagnitudeSpectrogram, field: &[f64], d_field: &mut [f64]) -> Vec<f64> {
    let k = head.extractor.dim();
    let mut d_extractor = vec![0.0; k];
    for ((((&m, &xv), &sv), e), de) in head
        .mask
        .iter()
        .zip(x.as_slice())
        .zip(head.reference.as_slice())
        .zip(field.chunks_exact(k))
        .zip(d_field.chunks_exact_mut(k))
    {
        let dz = -2.0 * xv * (sv - xv * m) * m * (1.0 - m);
        if dz != 0.0 {
            axpy(dz, head.extractor.as_slice(), de);
            axpy(dz, e, &mut d_extractor);
        }
    }
    match &head.selection {
        Some((y, count)) => {
            let scale = 1.0 / *count as f64;
            for (de, &sel) in d_field.chunks_exact_mut(k).zip(y.as_slice()) {
                if sel {
                    axpy(scale, &d_extractor, de);
                }
            }
            Vec::new()
        }
        None => d_extractor,
    }
}

fn backward(params: &ModelParams, ex: &TrainingExample, pass: &ForwardPass) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(params);
    let g = grads.as_mut_slice();
    let k = params.config().embed_dim;
    let mut d_mix = vec![0.0; pass.mixture.embeddings.len()];
    let mut d_anchor_extractor = vec![0.0; k];

    match &pass.mapper {
        Some(mapped) => {
            let anchor = pass.anchor.as_ref().ok_or(Error::MissingInput("anchor"))?;
            let mut d_canonical = vec![0.0; mapped.out.len()];
            for head in &pass.heads {
                head_backward(head, &ex.mixture, &mapped.out, &mut d_canonical);
            }
            mapper::backward(
                params,
                mapped,
                anchor.extractor.as_slice(),
                &pass.mixture.embeddings,
                &d_canonical,
                g,
                &mut d_mix,
                &mut d_anchor_extractor,
            )?;
        }
        None => {
            for head in &pass.heads {
                let d_ext = head_backward(head, &ex.mixture, &pass.mixture.embeddings, &mut d_mix);
                if !d_ext.is_empty() {
                    axpy(1.0, &d_ext, &mut d_anchor_extractor);
                }
            }
        }
    }

    if let Some(anchor) = &pass.anchor {
        let mut d_anchor = vec![0.0; anchor.cache.embeddings.len()];
        let scale = 1.0 / anchor.count as f64;
        for (de, &sel) in d_anchor.chunks_exact_mut(k).zip(anchor.presence.as_slice()) {
            if sel {
                axpy(scale, &d_anchor_extractor, de);
            }
        }
        encoder::backward(params, &anchor.cache, &d_anchor, g);
    }
    encoder::backward(params, &pass.mixture, &d_mix, g);
    Ok(grads)
}

/// Reconstruction loss of one example under the variant's training path.
pub fn example_loss(params: &ModelParams, ex: &TrainingExample) -> Result<f64> {
    forward(params, ex).map(|p| p.loss)
}

pub fn example_loss_and_gradients(params: &ModelParams, ex: &TrainingExample) -> Result<(f64, Gradients)> {
    let pass = forward(params, ex)?;
    let grads = backward(params, ex, &pass)?;
    Ok((pass.loss, grads))
}

/// Loss evaluator for finite-difference gradient checks. Changing one
/// coordinate only recomputes the encoder stages at or above the one owning
/// it; every result equals [`example_loss`] on the modified parameters.
pub struct LossProbe<'a> {
    params: ModelParams,
    ex: &'a TrainingExample,
    base: ForwardPass,
}

impl<'a> LossProbe<'a> {
    pub fn new(params: &ModelParams, ex: &'a TrainingExample) -> Result<Self> {
        let base = forward(params, ex)?;
        Ok(Self {
            params: params.clone(),
            ex,
            base,
        })
    }

    pub fn loss(&self) -> f64 {
        self.base.loss
    }

    /// Loss with parameter `index` set to `value`; the probe's parameters are
    /// restored afterwards.
    pub fn loss_with(&mut self, index: usize, value: f64) -> Result<f64> {
        let stage = self.params.layout.stage_of(index);
        let orig = core::mem::replace(&mut self.params.as_mut_slice()[index], value);
        let out = forward_with(&self.params, self.ex, Some((&self.base, stage))).map(|p| p.loss);
        self.params.as_mut_slice()[index] = orig;
        out
    }
}

/// Summed loss and gradient over a batch.
pub fn compute_gradients(params: &ModelParams, batch: &[TrainingExample]) -> Result<(f64, Gradients)> {
    let mut total = Gradients::zeros_like(params);
    let mut loss = 0.0;
    for ex in batch {
        let (l, g) = example_loss_and_gradients(params, ex)?;
        loss += l;
        total.add_assign(&g);
    }
    Ok((loss, total))
}

/// Extractors produced for one training example by the trained network.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleExtractors {
    /// Primary-space anchor extractor.
    pub anchor: Option<ExtractorVec>,
    /// Canonical-space extractor over the ideal target membership.
    pub canonical: Option<ExtractorVec>,
    /// Target and interference attractors in the primary space.
    pub attractors: Option<(ExtractorVec, ExtractorVec)>,
}

pub fn collect_extractors(params: &ModelParams, ex: &TrainingExample) -> Result<ExampleExtractors> {
    let pass = forward(params, ex)?;
    let anchor = pass.anchor.as_ref().map(|a| a.extractor.clone());
    let mut heads = pass.heads.into_iter().map(|h| h.extractor);
    Ok(match params.config().variant {
        Variant::Denet => ExampleExtractors {
            anchor,
            canonical: heads.next(),
            attractors: None,
        },
        Variant::DanetAnchor => ExampleExtractors {
            anchor,
            canonical: None,
            attractors: None,
        },
        Variant::Danet => {
            let first = heads.next();
            let second = heads.next();
            ExampleExtractors {
                anchor,
                canonical: None,
                attractors: first.zip(second),
            }
        }
    })
}
