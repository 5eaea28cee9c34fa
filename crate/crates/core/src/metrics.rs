//! Separation quality measures and oracle stream selection.
//!
//! Inputs of unequal length are compared over their common prefix, since
//! overlap-add resynthesis can add padding samples.

use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::linalg::dot;

/// Every reported ratio is clamped to `±SDR_CAP_DB`.
pub const SDR_CAP_DB: f64 = 100.0;

fn common<'a>(est: &'a [f64], reference: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
    let n = est.len().min(reference.len());
    if n == 0 {
        return Err(Error::EmptyInput("signal"));
    }
    let reference = &reference[..n];
    if reference.iter().all(|&r| r == 0.0) {
        return Err(Error::ZeroReference);
    }
    Ok((&est[..n], reference))
}

fn ratio_db(signal: f64, residual: f64) -> f64 {
    if residual <= 0.0 {
        return if signal > 0.0 { SDR_CAP_DB } else { -SDR_CAP_DB };
    }
    if signal <= 0.0 {
        return -SDR_CAP_DB;
    }
    (10.0 * libm::log10(signal / residual)).clamp(-SDR_CAP_DB, SDR_CAP_DB)
}

/// Scale-invariant SDR: the estimate is split into its projection onto the
/// reference and the orthogonal residual.
pub fn si_sdr(est: &[f64], reference: &[f64]) -> Result<f64> {
    let (est, reference) = common(est, reference)?;
    let alpha = dot(est, reference) / dot(reference, reference);
    let mut signal = 0.0;
    let mut residual = 0.0;
    for (e, r) in est.iter().zip(reference) {
        let s = alpha * r;
        signal += s * s;
        residual += (e - s) * (e - s);
    }
    Ok(ratio_db(signal, residual))
}

/// Single-reference projection SDR, computed from inner products alone:
/// `|s|^2 = <e, r>^2 / |r|^2` and the residual by Pythagoras.
pub fn sdr(est: &[f64], reference: &[f64]) -> Result<f64> {
    let (est, reference) = common(est, reference)?;
    let cross = dot(est, reference);
    let signal = cross * cross / dot(reference, reference);
    let residual = (dot(est, est) - signal).max(0.0);
    Ok(ratio_db(signal, residual))
}

/// Stream with the highest SDR against `reference`; ties keep the lowest index.
pub fn oracle_select<'a>(streams: &'a [Waveform], reference: &Waveform) -> Result<(usize, &'a Waveform)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in streams.iter().enumerate() {
        let score = sdr(&s.samples, &reference.samples)?;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    let (idx, _) = best.ok_or(Error::EmptyInput("stream list"))?;
    Ok((idx, &streams[idx]))
}
