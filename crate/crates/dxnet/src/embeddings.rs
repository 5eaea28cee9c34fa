//! Canonical-space embedding dump for PCA plots: stored training extractors
//! plus every present mixture bin, labelled by ideal membership.

use std::path::Path;

use dxnet_core::analysis::{Pca3, pca3};
use dxnet_core::dsp::{StftConfig, Waveform, presence_mask, stft};
use dxnet_core::extractor::anchor_extractor;
use dxnet_core::net::{PRESENCE_FLOOR_DB, Variant, encode_primary, map_canonical};
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::error::{DxError, Result};
use crate::extract::{References, reference_membership};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLabel {
    Extractor,
    TargetBin,
    InterfererBin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingRow {
    pub label: PointLabel,
    pub pc1: f64,
    pub pc2: f64,
    pub pc3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDump {
    pub rows: Vec<EmbeddingRow>,
    pub pca: Pca3,
    /// `(bin, frame)` of each bin row, in row order after the extractors.
    pub bins: Vec<(usize, usize)>,
}

impl EmbeddingDump {
    fn mean_distance_to_extractors(&self, label: PointLabel) -> f64 {
        let centroid = |rows: &mut dyn Iterator<Item = &EmbeddingRow>| {
            let mut c = [0.0; 3];
            let mut n = 0.0;
            for r in rows {
                c[0] += r.pc1;
                c[1] += r.pc2;
                c[2] += r.pc3;
                n += 1.0;
            }
            c.map(|x| x / n)
        };
        let c = centroid(&mut self.rows.iter().filter(|r| r.label == PointLabel::Extractor));
        let picked: Vec<_> = self.rows.iter().filter(|r| r.label == label).collect();
        let sum: f64 = picked
            .iter()
            .map(|r| ((r.pc1 - c[0]).powi(2) + (r.pc2 - c[1]).powi(2) + (r.pc3 - c[2]).powi(2)).sqrt())
            .sum();
        sum / picked.len() as f64
    }

    /// Mean projected distance of target and interferer bins to the
    /// extractor centroid.
    pub fn bin_distances(&self) -> (f64, f64) {
        (
            self.mean_distance_to_extractors(PointLabel::TargetBin),
            self.mean_distance_to_extractors(PointLabel::InterfererBin),
        )
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| DxError::Usage(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| DxError::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| DxError::io(path, e))
    }
}

pub fn dump_embeddings(
    ckpt: &Checkpoint,
    anchor: &Waveform,
    mixture: &Waveform,
    refs: References<'_>,
) -> Result<EmbeddingDump> {
    if ckpt.variant() != Variant::Denet {
        return Err(DxError::Usage(format!(
            "dump-embeddings needs a denet checkpoint, this one is {}",
            ckpt.variant()
        )));
    }
    if ckpt.canonical_extractors.is_empty() {
        return Err(DxError::Checkpoint("checkpoint stores no training extractors".into()));
    }
    let stft_cfg = StftConfig::standard();
    let anchor_mag = stft(anchor, &stft_cfg)?.magnitude();
    let mix_mag = stft(mixture, &stft_cfg)?.magnitude();
    let v_anchor = encode_primary(&ckpt.params, &anchor_mag)?;
    let a = anchor_extractor(&v_anchor, &presence_mask(&anchor_mag, PRESENCE_FLOOR_DB))?;
    let canonical = map_canonical(&ckpt.params, &a, &encode_primary(&ckpt.params, &mix_mag)?)?;
    let membership = reference_membership(&mix_mag, refs, &stft_cfg)?;
    let present = presence_mask(&mix_mag, PRESENCE_FLOOR_DB);

    let mut points: Vec<Vec<f64>> = ckpt.canonical_extractors.iter().map(|e| e.0.clone()).collect();
    let mut labels = vec![PointLabel::Extractor; points.len()];
    let mut bins = Vec::new();
    for t in 0..mix_mag.num_frames() {
        for f in 0..mix_mag.num_bins() {
            if !*present.get(f, t) {
                continue;
            }
            points.push(canonical.embedding(f, t).to_vec());
            labels.push(if *membership.get(f, t) {
                PointLabel::TargetBin
            } else {
                PointLabel::InterfererBin
            });
            bins.push((f, t));
        }
    }
    let pca = pca3(&points)?;
    let rows = pca
        .projected
        .iter()
        .zip(labels)
        .map(|(p, label)| EmbeddingRow {
            label,
            pc1: p[0],
            pc2: p[1],
            pc3: p[2],
        })
        .collect();
    Ok(EmbeddingDump { rows, pca, bins })
}
