//! Reconstruction loss, Adam with global-norm clipping, curriculum cropping
//! and the epoch loop.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::MagnitudeSpectrogram;
use crate::error::{Error, Result};
use crate::extractor::{AttractorPair, ExtractorVec, MaskField, preset_extractor};
use crate::net::{
    Gradients, InferenceConstants, ModelParams, TrainingExample, Variant, collect_extractors,
    example_loss_and_gradients,
};

/// `sum_{f,t} (s - x * m)^2`
pub fn reconstruction_loss(
    x: &MagnitudeSpectrogram,
    s: &MagnitudeSpectrogram,
    m: &MaskField,
) -> Result<f64> {
    x.check_same_shape(s, "reconstruction loss")?;
    x.check_same_shape(m, "reconstruction loss")?;
    Ok(x.as_slice()
        .iter()
        .zip(s.as_slice())
        .zip(m.as_slice())
        .map(|((x, s), m)| (s - x * m) * (s - x * m))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curriculum {
    /// Whole utterances every epoch.
    None,
    /// 100-frame crops for the first half of the epochs, 400-frame crops after.
    Frames100Then400,
}

impl Curriculum {
    /// Recurrent attractor baselines train on crops; anchor-conditioned
    /// models train on whole utterances.
    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Danet => Curriculum::Frames100Then400,
            Variant::Denet | Variant::DanetAnchor => Curriculum::None,
        }
    }

    /// Crop length for a zero-based epoch, `None` for whole utterances.
    pub fn crop_frames(self, epoch: usize, epochs: usize) -> Option<usize> {
        match self {
            Curriculum::None => None,
            Curriculum::Frames100Then400 => Some(if epoch < epochs / 2 { 100 } else { 400 }),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [Curriculum::None, Curriculum::Frames100Then400]
            .into_iter()
            .find(|c| c.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Curriculum::None => "none",
            Curriculum::Frames100Then400 => "frames_100_then_400",
        }
    }
}

/// Random `len`-frame window of an example; shorter examples pass through whole.
pub fn crop_example(ex: &TrainingExample, len: usize, rng: &mut impl Rng) -> TrainingExample {
    let frames = ex.num_frames();
    if frames <= len {
        return ex.clone();
    }
    let start = rng.gen_range(0..=frames - len);
    ex.crop(start..start + len)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub grad_clip_norm: f64,
    pub curriculum: Curriculum,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 1,
            learning_rate: 1e-3,
            grad_clip_norm: 5.0,
            curriculum: Curriculum::None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive"));
        }
        if !(self.grad_clip_norm > 0.0) {
            return Err(Error::InvalidConfig("gradient clip norm must be positive"));
        }
        Ok(())
    }
}

/// Adam optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step += 1;
        let bc1 = 1.0 - libm::pow(self.beta1, self.step as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.step as f64);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Produces per-example losses and gradients for a batch. Implementations may
/// evaluate examples concurrently but must return results in batch order.
pub trait GradientEvaluator {
    fn evaluate(&self, params: &ModelParams, batch: &[TrainingExample]) -> Result<Vec<(f64, Gradients)>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialEvaluator;

impl GradientEvaluator for SequentialEvaluator {
    fn evaluate(&self, params: &ModelParams, batch: &[TrainingExample]) -> Result<Vec<(f64, Gradients)>> {
        batch
            .iter()
            .map(|ex| example_loss_and_gradients(params, ex))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Summed loss over the batch, before the update.
    pub loss: f64,
    pub grad_norm: f64,
}

/// One optimizer update on the summed batch loss.
pub fn train_step<E: GradientEvaluator + ?Sized>(
    params: &mut ModelParams,
    batch: &[TrainingExample],
    cfg: &TrainConfig,
    opt: &mut Adam,
    evaluator: &E,
) -> Result<StepReport> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let results = evaluator.evaluate(params, batch)?;
    let mut grads = Gradients::zeros_like(params);
    let mut loss = 0.0;
    // Summed in batch order so the result does not depend on evaluation order.
    for (l, g) in &results {
        loss += l;
        grads.add_assign(g);
    }
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { value: loss });
    }
    let grad_norm = clip_global_norm(&mut grads, cfg.grad_clip_norm);
    if !grad_norm.is_finite() {
        return Err(Error::NonFinite("gradients"));
    }
    opt.update(params.as_mut_slice(), grads.as_slice());
    Ok(StepReport { loss, grad_norm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    /// Mean per-example loss for each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainingHistory {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Runs `cfg.epochs` epochs of shuffled mini-batch training. `on_epoch`
/// receives the one-based epoch number and its mean per-example loss.
pub fn train_model<E: GradientEvaluator + ?Sized>(
    params: &mut ModelParams,
    examples: &[TrainingExample],
    cfg: &TrainConfig,
    evaluator: &E,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainingHistory> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Adam::new(params.len(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let crop = cfg.curriculum.crop_frames(epoch, cfg.epochs);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<TrainingExample> = chunk
                .iter()
                .map(|&i| match crop {
                    Some(len) => crop_example(&examples[i], len, &mut rng),
                    None => examples[i].clone(),
                })
                .collect();
            total += train_step(params, &batch, cfg, &mut opt, evaluator)?.loss;
        }
        if !params.is_finite() {
            return Err(Error::NonFinite("parameters"));
        }
        let mean = total / examples.len() as f64;
        epoch_losses.push(mean);
        on_epoch(epoch + 1, mean);
    }
    Ok(TrainingHistory { epoch_losses })
}

/// Extractors of every training example under the final weights, and the
/// inference constants derived from them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainedConstants {
    pub constants: InferenceConstants,
    pub canonical_extractors: Vec<ExtractorVec>,
    pub anchor_extractors: Vec<ExtractorVec>,
    pub attractors: Vec<(ExtractorVec, ExtractorVec)>,
}

pub fn collect_inference_constants(
    params: &ModelParams,
    examples: &[TrainingExample],
) -> Result<TrainedConstants> {
    let mut out = TrainedConstants::default();
    for ex in examples {
        let e = collect_extractors(params, ex)?;
        out.canonical_extractors.extend(e.canonical);
        out.anchor_extractors.extend(e.anchor);
        out.attractors.extend(e.attractors);
    }
    out.constants = constants_from_extractors(params.config().variant, &out.canonical_extractors, &out.attractors)?;
    Ok(out)
}

/// Preset extractor or fixed attractor pair from per-example extractors.
pub fn constants_from_extractors(
    variant: Variant,
    canonical: &[ExtractorVec],
    attractors: &[(ExtractorVec, ExtractorVec)],
) -> Result<InferenceConstants> {
    let mut constants = InferenceConstants::default();
    match variant {
        Variant::Denet => constants.preset_extractor = Some(preset_extractor(canonical)?),
        Variant::Danet => {
            let (first, second): (Vec<_>, Vec<_>) = attractors.iter().cloned().unzip();
            constants.attractor_pair = Some(AttractorPair {
                first: preset_extractor(&first)?,
                second: preset_extractor(&second)?,
            });
        }
        Variant::DanetAnchor => {}
    }
    Ok(constants)
}
