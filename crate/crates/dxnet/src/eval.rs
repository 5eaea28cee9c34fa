//! Evaluation reports: per-entry and mean SI-SDR / SDR for the unprocessed
//! mixture, a separator under test and the ideal binary mask.
//!
//! Scores use the single-reference projection SDR; no perceptual metric is
//! computed.

use std::fs;
use std::path::Path;

use dxnet_core::dsp::{StftConfig, TfGrid, Waveform, stft};
use dxnet_core::metrics::{oracle_select, sdr, si_sdr};
use dxnet_core::net::InferenceMode;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::{DxError, Result};
use crate::extract::{References, check_mode, extract, reference_membership, resynthesize};
use crate::manifest::Manifest;
use crate::pipeline::{LoadedEntry, load_entry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub si_sdr_db: f64,
    pub sdr_db: f64,
}

impl Scores {
    pub fn of(estimate: &Waveform, reference: &Waveform) -> Result<Self> {
        Ok(Self {
            si_sdr_db: si_sdr(&estimate.samples, &reference.samples)?,
            sdr_db: sdr(&estimate.samples, &reference.samples)?,
        })
    }

    fn mean(rows: impl Iterator<Item = Scores>) -> Self {
        let (mut a, mut b, mut n) = (0.0, 0.0, 0usize);
        for s in rows {
            a += s.si_sdr_db;
            b += s.sdr_db;
            n += 1;
        }
        let n = n.max(1) as f64;
        Self {
            si_sdr_db: a / n,
            sdr_db: b / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub id: String,
    pub speaker_id: String,
    pub sir_db: f64,
    pub num_interferers: usize,
    pub unprocessed: Scores,
    pub model: Scores,
    pub ideal_mask: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub unprocessed: Scores,
    pub model: Scores,
    pub ideal_mask: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// What produced the `model` rows, e.g. `denet/preset`.
    pub model: String,
    pub entries: Vec<EntryReport>,
    pub aggregate: Aggregate,
}

impl EvalReport {
    pub fn from_entries(model: String, entries: Vec<EntryReport>) -> Self {
        let aggregate = Aggregate {
            count: entries.len(),
            unprocessed: Scores::mean(entries.iter().map(|e| e.unprocessed)),
            model: Scores::mean(entries.iter().map(|e| e.model)),
            ideal_mask: Scores::mean(entries.iter().map(|e| e.ideal_mask)),
        };
        Self {
            model,
            entries,
            aggregate,
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "speaker_id",
            "sir_db",
            "num_interferers",
            "unprocessed_si_sdr_db",
            "unprocessed_sdr_db",
            "model_si_sdr_db",
            "model_sdr_db",
            "ideal_mask_si_sdr_db",
            "ideal_mask_sdr_db",
        ])
        .map_err(csv_err)?;
        let mut row = |id: &str, spk: &str, sir: String, n: String, s: [Scores; 3]| {
            let mut rec = vec![id.to_string(), spk.to_string(), sir, n];
            for x in s {
                rec.push(x.si_sdr_db.to_string());
                rec.push(x.sdr_db.to_string());
            }
            w.write_record(rec).map_err(csv_err)
        };
        for e in &self.entries {
            row(
                &e.id,
                &e.speaker_id,
                e.sir_db.to_string(),
                e.num_interferers.to_string(),
                [e.unprocessed, e.model, e.ideal_mask],
            )?;
        }
        let a = &self.aggregate;
        row("mean", "", String::new(), String::new(), [a.unprocessed, a.model, a.ideal_mask])?;
        let bytes = w.into_inner().map_err(|e| DxError::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Writes the JSON report and its CSV mirror next to it.
    pub fn write(&self, json_path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(json_path, json).map_err(|e| DxError::io(json_path, e))?;
        let csv_path = json_path.with_extension("csv");
        fs::write(&csv_path, self.to_csv()?).map_err(|e| DxError::io(&csv_path, e))
    }
}

fn csv_err(e: csv::Error) -> DxError {
    DxError::Usage(format!("csv: {e}"))
}

/// Binary-mask reconstruction from the ideal target membership.
pub fn ideal_mask_estimate(item: &LoadedEntry, stft_cfg: &StftConfig) -> Result<Waveform> {
    let spec = stft(&item.mixture, stft_cfg)?;
    let refs = References {
        target: &item.target,
        interferers: &item.interferers,
    };
    let y = reference_membership(&spec.magnitude(), refs, stft_cfg)?;
    let mask = TfGrid::from_vec(
        y.num_bins(),
        y.num_frames(),
        y.as_slice().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    )?;
    resynthesize(&spec, &mask, item.mixture.len(), stft_cfg)
}

/// Scores an arbitrary separator over every manifest entry, in manifest order.
pub fn evaluate_with<F>(manifest: &Manifest, label: &str, separate: F) -> Result<EvalReport>
where
    F: Fn(&LoadedEntry) -> Result<Waveform> + Sync,
{
    let stft_cfg = StftConfig::standard();
    let entries = manifest
        .entries
        .par_iter()
        .map(|e| {
            let item = load_entry(manifest, e)?;
            let estimate = separate(&item)?;
            Ok(EntryReport {
                id: e.id.clone(),
                speaker_id: e.speaker_id.clone(),
                sir_db: e.sir_db,
                num_interferers: item.interferers.len(),
                unprocessed: Scores::of(&item.mixture, &item.target)?,
                model: Scores::of(&estimate, &item.target)?,
                ideal_mask: Scores::of(&ideal_mask_estimate(&item, &stft_cfg)?, &item.target)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_entries(label.to_string(), entries))
}

/// Model estimate for one entry. `danet-oracle` keeps whichever attractor
/// stream scores best against the target.
pub fn model_estimate(ckpt: &Checkpoint, mode: InferenceMode, item: &LoadedEntry) -> Result<Waveform> {
    let refs = References {
        target: &item.target,
        interferers: &item.interferers,
    };
    let mut streams = extract(ckpt, mode, Some(&item.anchor), &item.mixture, Some(refs), false)?;
    if streams.len() == 1 {
        return Ok(streams.remove(0));
    }
    let (idx, _) = oracle_select(&streams, &item.target)?;
    Ok(streams.swap_remove(idx))
}

pub fn eval_report(ckpt: &Checkpoint, manifest: &Manifest, mode: InferenceMode) -> Result<EvalReport> {
    check_mode(ckpt, mode)?;
    let label = format!("{}/{}", ckpt.variant(), mode);
    evaluate_with(manifest, &label, |item| model_estimate(ckpt, mode, item))
}
