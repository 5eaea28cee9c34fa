//! 16 kHz mono WAV input and output.

use std::path::Path;

use dxnet_core::dsp::{SAMPLE_RATE_HZ, Waveform};
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{DxError, Result};

/// Reads a mono 16 kHz file stored as 16-bit PCM or 32-bit float.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let wav_err = |source| DxError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let bad = |reason: String| DxError::AudioFormat {
        path: path.to_path_buf(),
        reason,
    };
    if spec.channels != 1 {
        return Err(bad(format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_rate != SAMPLE_RATE_HZ {
        return Err(bad(format!("{} Hz, expected {SAMPLE_RATE_HZ} Hz", spec.sample_rate)));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(wav_err)?,
        (fmt, bits) => return Err(bad(format!("{bits}-bit {fmt:?} samples"))),
    };
    Ok(Waveform::new(samples, spec.sample_rate)?)
}

/// Writes 16-bit PCM mono; samples are clipped to [-1, 1).
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let wav_err = |source| DxError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &w.samples {
        let q = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(q).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}
