//! Manifest loading and the training driver.

use std::path::Path;

use dxnet_core::dsp::{MagnitudeSpectrogram, StftConfig, Waveform, stft};
use dxnet_core::net::{
    Gradients, InputScaling, ModelConfig, ModelParams, TrainingExample, Variant, example_loss_and_gradients, init_params,
};
use dxnet_core::train::{Curriculum, GradientEvaluator, TrainConfig, collect_inference_constants, train_model};
use rayon::prelude::*;

use crate::checkpoint::{Checkpoint, TrainingMeta};
use crate::error::{DxError, Result};
use crate::manifest::{Manifest, SampleManifestEntry};
use crate::wav::read_wav;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "DXNET_THREADS";

/// Every waveform an entry refers to, truncated to a common mixture length.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedEntry {
    pub entry: SampleManifestEntry,
    pub anchor: Waveform,
    pub mixture: Waveform,
    pub target: Waveform,
    pub interferers: Vec<Waveform>,
}

impl LoadedEntry {
    /// Sum of the interferer waveforms.
    pub fn interference(&self) -> Waveform {
        let mut sum = vec![0.0; self.mixture.len()];
        for w in &self.interferers {
            sum.iter_mut().zip(&w.samples).for_each(|(s, x)| *s += x);
        }
        Waveform {
            samples: sum,
            sample_rate_hz: self.mixture.sample_rate_hz,
        }
    }
}

pub fn load_entry(manifest: &Manifest, entry: &SampleManifestEntry) -> Result<LoadedEntry> {
    let read = |p: &str| read_wav(&manifest.resolve(p));
    let anchor = read(&entry.anchor_path)?;
    let mixture = read(&entry.mixture_path)?;
    let target = read(&entry.target_path)?;
    let interferers = entry
        .interferer_paths
        .iter()
        .map(|p| read(p))
        .collect::<Result<Vec<_>>>()?;
    let len = interferers
        .iter()
        .map(Waveform::len)
        .fold(mixture.len().min(target.len()), usize::min);
    Ok(LoadedEntry {
        entry: entry.clone(),
        anchor,
        mixture: mixture.truncated(len),
        target: target.truncated(len),
        interferers: interferers.iter().map(|w| w.truncated(len)).collect(),
    })
}

pub fn magnitude(w: &Waveform, stft_cfg: &StftConfig) -> Result<MagnitudeSpectrogram> {
    Ok(stft(w, stft_cfg)?.magnitude())
}

/// Builds the magnitude-domain training item. The anchor is attached only
/// for variants that consume it.
pub fn training_example(item: &LoadedEntry, variant: Variant, stft_cfg: &StftConfig) -> Result<TrainingExample> {
    let mag = |w: &Waveform| magnitude(w, stft_cfg);
    let interferers = item.interferers.iter().map(mag).collect::<Result<Vec<_>>>()?;
    let anchor = if variant.uses_anchor() {
        Some(mag(&item.anchor)?)
    } else {
        None
    };
    Ok(TrainingExample::new(
        mag(&item.mixture)?,
        mag(&item.target)?,
        &interferers,
        mag(&item.interference())?,
        anchor,
    )?)
}

pub fn load_examples(manifest: &Manifest, variant: Variant, stft_cfg: &StftConfig) -> Result<Vec<TrainingExample>> {
    manifest
        .entries
        .par_iter()
        .map(|e| training_example(&load_entry(manifest, e)?, variant, stft_cfg))
        .collect()
}

/// Worker count from `DXNET_THREADS`, defaulting to the available cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(DxError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` inside a rayon pool sized by [`thread_count`].
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| DxError::Usage(format!("cannot start worker threads: {e}")))?;
    pool.install(f)
}

/// Evaluates batch items on the current rayon pool, preserving batch order.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonEvaluator;

impl GradientEvaluator for RayonEvaluator {
    fn evaluate(
        &self,
        params: &ModelParams,
        batch: &[TrainingExample],
    ) -> dxnet_core::Result<Vec<(f64, Gradients)>> {
        batch
            .par_iter()
            .map(|ex| example_loss_and_gradients(params, ex))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub variant: Variant,
    /// `desk` or `paper`.
    pub preset: String,
    /// Overrides the preset's input scaling.
    pub input_scaling: Option<InputScaling>,
    pub train: TrainConfig,
}

impl TrainOptions {
    pub fn new(variant: Variant, preset: &str, epochs: usize, seed: u64) -> Self {
        Self {
            variant,
            preset: preset.to_string(),
            input_scaling: None,
            train: TrainConfig {
                epochs,
                seed,
                curriculum: Curriculum::for_variant(variant),
                ..TrainConfig::default()
            },
        }
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let stft_cfg = StftConfig::standard();
        ModelConfig::preset(&self.preset, self.variant)
            .map(|mut c| {
                if let Some(s) = self.input_scaling {
                    c.input_scaling = s;
                }
                c.with_num_bins(stft_cfg.num_bins())
            })
            .ok_or_else(|| DxError::Usage(format!("unknown preset {:?} (expected desk or paper)", self.preset)))
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config()?;
        self.train.validate().map_err(|e| DxError::Usage(e.to_string()))
    }
}

/// Trains on already-loaded examples and gathers the inference constants.
pub fn train_examples(
    examples: &[TrainingExample],
    opts: &TrainOptions,
    on_epoch: impl FnMut(usize, f64),
) -> Result<Checkpoint> {
    opts.validate()?;
    let config = opts.model_config()?;
    let mut params = init_params(config, opts.train.seed)?;
    let history = train_model(&mut params, examples, &opts.train, &RayonEvaluator, on_epoch)?;
    // One pass over the training set with the final weights.
    let per_example: Vec<_> = examples
        .par_iter()
        .map(|ex| collect_inference_constants(&params, std::slice::from_ref(ex)))
        .collect::<dxnet_core::Result<_>>()?;
    let mut canonical = Vec::new();
    let mut anchor = Vec::new();
    let mut attractors = Vec::new();
    for c in per_example {
        canonical.extend(c.canonical_extractors);
        anchor.extend(c.anchor_extractors);
        attractors.extend(c.attractors);
    }
    let constants = dxnet_core::train::constants_from_extractors(config.variant, &canonical, &attractors)?;
    let t = &opts.train;
    Ok(Checkpoint {
        params,
        constants,
        training: TrainingMeta {
            preset: opts.preset.clone(),
            seed: t.seed,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            grad_clip_norm: t.grad_clip_norm,
            curriculum: t.curriculum.name().to_string(),
            final_loss: history.final_loss().unwrap_or(f64::NAN),
            epoch_losses: history.epoch_losses,
            num_examples: examples.len(),
        },
        canonical_extractors: canonical,
        anchor_extractors: anchor,
    })
}

pub fn train_from_manifest(
    manifest_path: &Path,
    opts: &TrainOptions,
    on_epoch: impl FnMut(usize, f64),
) -> Result<Checkpoint> {
    opts.validate()?;
    let manifest = crate::manifest::read_manifest(manifest_path)?;
    let examples = load_examples(&manifest, opts.variant, &StftConfig::standard())?;
    train_examples(&examples, opts, on_epoch)
}
