//! Synthetic toy corpus: parametric harmonic "speakers" mixed at random SIRs.
//!
//! Speakers fall into three disjoint pools: training targets, held-out test
//! targets and interferers. All speaker parameters are drawn before any
//! utterance, so runs with the same seed but a different interferer count
//! share their speakers.

use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use dxnet_core::dsp::Waveform;
use dxnet_core::synth::{ToySpeakerSpec, mix_at_sir, synth_speaker_utterance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{DxError, Result};
use crate::manifest::{SampleManifestEntry, write_manifest};
use crate::wav::write_wav;

/// Anchor length in seconds.
pub const ANCHOR_DURATION_S: f64 = 0.9;
const UTTERANCE_DURATION_S: RangeInclusive<f64> = 1.0..=1.6;
/// Mixtures are rescaled (with their sources) so the peak stays below this.
const MAX_PEAK: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    /// Number of training target speakers.
    pub n_speakers: usize,
    pub utts_per_speaker: usize,
    pub sir_min_db: f64,
    pub sir_max_db: f64,
    pub n_interferers: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_speakers: 8,
            utts_per_speaker: 25,
            sir_min_db: 0.0,
            sir_max_db: 10.0,
            n_interferers: 1,
            seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(DxError::Usage(m.to_string()));
        if self.n_speakers < 2 {
            return usage("--speakers must be at least 2");
        }
        if self.utts_per_speaker == 0 {
            return usage("--utts must be at least 1");
        }
        if !(self.sir_min_db.is_finite() && self.sir_max_db.is_finite()) {
            return usage("SIR bounds must be finite");
        }
        if self.sir_min_db > self.sir_max_db {
            return usage("--sir-min must not exceed --sir-max");
        }
        if self.n_interferers == 0 {
            return usage("--interferers must be at least 1");
        }
        if self.n_interferers > self.interferer_pool_size() {
            return usage("--interferers exceeds the interferer pool size");
        }
        Ok(())
    }

    pub fn test_speakers(&self) -> usize {
        (self.n_speakers / 4).max(2)
    }

    pub fn interferer_pool_size(&self) -> usize {
        (self.n_speakers / 2).max(4)
    }
}

/// Speaker parameters of a corpus, pool by pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerPools {
    pub train: Vec<ToySpeakerSpec>,
    pub test: Vec<ToySpeakerSpec>,
    pub interferers: Vec<ToySpeakerSpec>,
}

pub fn draw_speakers(cfg: &CorpusConfig) -> SpeakerPools {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut all: Vec<ToySpeakerSpec> = Vec::new();
    // Each pool is stratified on its own, so targets and interferers cover
    // the same pitch range.
    let mut draw = |prefix: &str, n: usize, all: &mut Vec<ToySpeakerSpec>| loop {
        let ids = (0..n).map(|i| format!("{prefix}{i:03}")).collect();
        let pool = ToySpeakerSpec::stratified(ids, &mut rng);
        let distinct = pool.iter().enumerate().all(|(i, s)| {
            all.iter().chain(&pool[..i]).all(|o| o.differing_fields(s) >= 2)
        });
        if distinct {
            all.extend(pool.iter().cloned());
            break pool;
        }
    };
    let train = draw("spk", cfg.n_speakers, &mut all);
    let test = draw("test", cfg.test_speakers(), &mut all);
    let interferers = draw("int", cfg.interferer_pool_size(), &mut all);
    SpeakerPools {
        train,
        test,
        interferers,
    }
}

/// Writes the corpus below `out_dir` and returns the train and test entries.
pub fn build_toy_corpus(
    cfg: &CorpusConfig,
    out_dir: &Path,
) -> Result<(Vec<SampleManifestEntry>, Vec<SampleManifestEntry>)> {
    cfg.validate()?;
    let pools = draw_speakers(cfg);
    let mut out = Vec::new();
    for (split, targets, stream) in [("train", &pools.train, 1u64), ("test", &pools.test, 2)] {
        let dir = out_dir.join(split);
        fs::create_dir_all(&dir).map_err(|e| DxError::io(&dir, e))?;
        let jobs: Vec<(usize, &ToySpeakerSpec)> = targets
            .iter()
            .flat_map(|s| std::iter::repeat_n(s, cfg.utts_per_speaker))
            .enumerate()
            .collect();
        let entries = jobs
            .into_par_iter()
            .map(|(idx, spk)| {
                let seed = entry_seed(cfg.seed, stream, idx as u64);
                let id = format!("{split}_{idx:05}");
                write_entry(cfg, &pools.interferers, spk, &id, seed, out_dir, split)
            })
            .collect::<Result<Vec<_>>>()?;
        write_manifest(&out_dir.join(format!("{split}.jsonl")), &entries)?;
        out.push(entries);
    }
    let test = out.pop().unwrap_or_default();
    let train = out.pop().unwrap_or_default();
    Ok((train, test))
}

fn entry_seed(seed: u64, stream: u64, idx: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * idx as u128);
    rng.r#gen()
}

fn write_entry(
    cfg: &CorpusConfig,
    pool: &[ToySpeakerSpec],
    target_spk: &ToySpeakerSpec,
    id: &str,
    seed: u64,
    out_dir: &Path,
    split: &str,
) -> Result<SampleManifestEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration = |rng: &mut ChaCha8Rng| rng.gen_range(UTTERANCE_DURATION_S);
    let target = synth_speaker_utterance(target_spk, duration(&mut rng), rng.r#gen())?;
    let anchor = synth_speaker_utterance(target_spk, ANCHOR_DURATION_S, rng.r#gen())?;
    let chosen = rand::seq::index::sample(&mut rng, pool.len(), cfg.n_interferers);
    let mut interferers = Vec::with_capacity(cfg.n_interferers);
    for i in chosen.iter() {
        interferers.push(synth_speaker_utterance(&pool[i], duration(&mut rng), rng.r#gen())?);
    }
    let sir_db = if cfg.sir_min_db == cfg.sir_max_db {
        cfg.sir_min_db
    } else {
        rng.gen_range(cfg.sir_min_db..=cfg.sir_max_db)
    };
    let mix = mix_at_sir(&target, &interferers, sir_db)?;
    let peak = mix.mixture.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = if peak > MAX_PEAK { MAX_PEAK / peak } else { 1.0 };
    let scaled = |w: &Waveform| Waveform {
        samples: w.samples.iter().map(|x| x * scale).collect(),
        sample_rate_hz: w.sample_rate_hz,
    };

    let rel = |suffix: &str| format!("{split}/{id}_{suffix}.wav");
    let save = |rel: &str, w: &Waveform| write_wav(&out_dir.join(rel), w);
    let entry = SampleManifestEntry {
        id: id.to_string(),
        anchor_path: rel("anchor"),
        mixture_path: rel("mix"),
        target_path: rel("target"),
        interferer_paths: (0..interferers.len()).map(|k| rel(&format!("int{k}"))).collect(),
        sir_db,
        speaker_id: target_spk.speaker_id.clone(),
    };
    save(&entry.anchor_path, &anchor)?;
    save(&entry.mixture_path, &scaled(&mix.mixture))?;
    save(&entry.target_path, &scaled(&mix.target))?;
    for (path, w) in entry.interferer_paths.iter().zip(&mix.interferers) {
        save(path, &scaled(w))?;
    }
    Ok(entry)
}
