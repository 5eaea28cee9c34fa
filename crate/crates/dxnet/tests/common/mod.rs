#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dxnet::checkpoint::Checkpoint;
use dxnet::corpus::{CorpusConfig, build_toy_corpus};
use dxnet::pipeline::{TrainOptions, train_from_manifest};
use dxnet_core::net::Variant;

/// Two training speakers with two utterances each.
pub fn small_corpus(dir: &Path, n_interferers: usize, seed: u64) -> PathBuf {
    let cfg = CorpusConfig {
        n_speakers: 2,
        utts_per_speaker: 2,
        n_interferers,
        seed,
        ..CorpusConfig::default()
    };
    build_toy_corpus(&cfg, dir).unwrap();
    dir.to_path_buf()
}

pub fn quick_checkpoint(corpus: &Path, variant: Variant) -> Checkpoint {
    let opts = TrainOptions::new(variant, "desk", 1, 3);
    train_from_manifest(&corpus.join("train.jsonl"), &opts, |_, _| {}).unwrap()
}
