mod common;

use common::{random_example, random_magnitude, tiny_config};
use dxnet_core::extractor::{AttractorPair, ExtractorVec};
use dxnet_core::net::{
    EncoderMode, InferenceConstants, InferenceInput, InferenceMode, InputScaling, StreamingMasker, init_params,
    infer_masks,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn constants() -> InferenceConstants {
    InferenceConstants {
        preset_extractor: Some(ExtractorVec(vec![0.3, -0.2, 0.5])),
        attractor_pair: Some(AttractorPair {
            first: ExtractorVec(vec![0.4, 0.1, -0.3]),
            second: ExtractorVec(vec![-0.2, 0.6, 0.2]),
        }),
    }
}

fn check(mode: InferenceMode, scaling: InputScaling) {
    let mut cfg = tiny_config(mode.variant());
    cfg.input_scaling = scaling;
    let params = init_params(cfg, 2).unwrap();
    let ex = random_example(6, 9, 5, 13);
    let mut mixture = ex.mixture.clone();
    // put the global peak in the first frame so running and global peak
    // normalization agree
    mixture.as_mut_slice()[0] = 10.0;
    let anchor = ex.anchor.clone().unwrap();
    let input = InferenceInput {
        mixture: &mixture,
        anchor: Some(&anchor),
        membership: None,
    };
    let offline = infer_masks(&params, &constants(), mode, input, EncoderMode::Causal).unwrap();
    let mut streaming = StreamingMasker::new(params, &constants(), mode, &anchor).unwrap();
    for t in 0..mixture.num_frames() {
        let frame = streaming.push_frame(mixture.frame(t)).unwrap();
        for (a, b) in frame.iter().zip(offline[0].frame(t)) {
            assert!((a - b).abs() <= 1e-12, "{mode} frame {t}: {a} vs {b}");
        }
    }
}

#[test]
fn streaming_matches_offline_causal_encoding() {
    for mode in [InferenceMode::Preset, InferenceMode::Anchor, InferenceMode::Nearest] {
        check(mode, InputScaling::Raw);
        check(mode, InputScaling::PeakNormalized);
        check(mode, InputScaling::LogCompressed);
    }
}

#[test]
fn early_masks_do_not_depend_on_later_frames() {
    let params = init_params(tiny_config(InferenceMode::Anchor.variant()), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let anchor = random_magnitude(6, 4, &mut rng);
    let a = random_magnitude(6, 8, &mut rng);
    let b = random_magnitude(6, 8, &mut rng);
    let mut m1 = StreamingMasker::new(params.clone(), &constants(), InferenceMode::Anchor, &anchor).unwrap();
    let mut m2 = StreamingMasker::new(params, &constants(), InferenceMode::Anchor, &anchor).unwrap();
    for t in 0..4 {
        assert_eq!(m1.push_frame(a.frame(t)).unwrap(), m2.push_frame(a.frame(t)).unwrap());
    }
    // futures diverge; what was already emitted cannot change
    let x = m1.push_frame(a.frame(4)).unwrap();
    let y = m2.push_frame(b.frame(4)).unwrap();
    assert_ne!(x, y);
}

#[test]
fn oracle_modes_are_rejected_for_streaming() {
    let params = init_params(tiny_config(InferenceMode::DanetOracle.variant()), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let anchor = random_magnitude(6, 4, &mut rng);
    assert!(StreamingMasker::new(params, &constants(), InferenceMode::DanetOracle, &anchor).is_err());
}
