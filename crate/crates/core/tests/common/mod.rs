#![allow(dead_code)]

use dxnet_core::dsp::{MagnitudeSpectrogram, TfGrid};
use dxnet_core::net::{InputScaling, ModelConfig, TrainingExample, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tiny_config(variant: Variant) -> ModelConfig {
    ModelConfig {
        variant,
        num_rnn_layers: 2,
        rnn_hidden: 5,
        embed_dim: 3,
        ff_hidden: 6,
        num_bins: 6,
        input_scaling: InputScaling::PeakNormalized,
    }
}

pub fn random_magnitude(bins: usize, frames: usize, rng: &mut impl Rng) -> MagnitudeSpectrogram {
    let data = (0..bins * frames).map(|_| rng.gen_range(0.0f64..1.0).powi(2)).collect();
    TfGrid::from_vec(bins, frames, data).unwrap()
}

/// Random magnitudes where the mixture is the bin-wise sum of target and
/// interference, so both sources own some bins.
pub fn random_example(bins: usize, frames: usize, anchor_frames: usize, seed: u64) -> TrainingExample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = random_magnitude(bins, frames, &mut rng);
    let interference = random_magnitude(bins, frames, &mut rng);
    let mixture = TfGrid::from_vec(
        bins,
        frames,
        target
            .as_slice()
            .iter()
            .zip(interference.as_slice())
            .map(|(a, b)| a + b)
            .collect(),
    )
    .unwrap();
    let anchor = random_magnitude(bins, anchor_frames, &mut rng);
    TrainingExample::new(
        mixture,
        target,
        &[interference.clone()],
        interference,
        Some(anchor),
    )
    .unwrap()
}

use dxnet_core::dsp::{StftConfig, stft};
use dxnet_core::synth::{ToySpeakerSpec, mix_at_sir, synth_speaker_utterance};

/// A one-second two-speaker mixture at 10 dB SIR with a 0.9 s anchor. The
/// speakers sit in separate bands (low pitch and formant against high pitch
/// and formant) so that the phase-cancellation floor of magnitude masking
/// stays well below 1% of the untrained loss.
pub fn toy_example(seed: u64) -> TrainingExample {
    let target = ToySpeakerSpec {
        speaker_id: "t".into(),
        f0_hz: 80.0,
        harmonic_decay: 0.6,
        formant_center_hz: 400.0,
        am_rate_hz: 4.0,
    };
    let other = ToySpeakerSpec {
        speaker_id: "i".into(),
        f0_hz: 400.0,
        harmonic_decay: 0.85,
        formant_center_hz: 3000.0,
        am_rate_hz: 5.0,
    };
    let t = synth_speaker_utterance(&target, 1.0, seed).unwrap();
    let i = synth_speaker_utterance(&other, 1.0, seed + 1).unwrap();
    let anchor = synth_speaker_utterance(&target, 0.9, seed + 2).unwrap();
    let mix = mix_at_sir(&t, &[i], 10.0).unwrap();
    let cfg = StftConfig::standard();
    let mag = |w| stft(w, &cfg).unwrap().magnitude();
    TrainingExample::new(
        mag(&mix.mixture),
        mag(&mix.target),
        &[mag(&mix.interferers[0])],
        mag(&mix.interference),
        Some(mag(&anchor)),
    )
    .unwrap()
}
