//! Target extraction from a mixture with a trained checkpoint.

use dxnet_core::dsp::{ComplexSpectrogram, MagnitudeSpectrogram, StftConfig, TfGrid, Waveform, istft, stft};
use dxnet_core::extractor::{MaskField, MembershipMask, ideal_membership};
use dxnet_core::net::{
    EncoderMode, InferenceInput, InferenceMode, PRESENCE_FLOOR_DB, StreamingMasker, infer_masks,
};

use crate::checkpoint::Checkpoint;
use crate::error::{DxError, Result};

/// Reference signals, needed only by the oracle modes.
#[derive(Debug, Clone, Copy)]
pub struct References<'a> {
    pub target: &'a Waveform,
    pub interferers: &'a [Waveform],
}

/// Ideal target membership of the mixture bins.
pub fn reference_membership(
    mixture: &MagnitudeSpectrogram,
    refs: References<'_>,
    stft_cfg: &StftConfig,
) -> Result<MembershipMask> {
    let len = refs
        .interferers
        .iter()
        .map(Waveform::len)
        .fold(refs.target.len(), usize::min);
    let mag = |w: &Waveform| -> Result<MagnitudeSpectrogram> { Ok(stft(&w.truncated(len), stft_cfg)?.magnitude()) };
    let target = mag(refs.target)?;
    let interferers = refs.interferers.iter().map(mag).collect::<Result<Vec<_>>>()?;
    if target.shape() != mixture.shape() {
        return Err(DxError::Usage(format!(
            "reference signals span {} frames but the mixture spans {}",
            target.num_frames(),
            mixture.num_frames()
        )));
    }
    Ok(ideal_membership(&target, &interferers, mixture, PRESENCE_FLOOR_DB)?)
}

/// Checks that the checkpoint supports `mode` before any audio is processed.
pub fn check_mode(ckpt: &Checkpoint, mode: InferenceMode) -> Result<()> {
    if mode.variant() != ckpt.variant() {
        return Err(DxError::Usage(format!(
            "mode {mode} needs a {} checkpoint, but this checkpoint is {}",
            mode.variant(),
            ckpt.variant()
        )));
    }
    Ok(())
}

/// Masks for the mixture spectrogram. With `streaming`, frames are processed
/// strictly left to right through the causal encoder.
pub fn infer_mixture_masks(
    ckpt: &Checkpoint,
    mode: InferenceMode,
    anchor: Option<&Waveform>,
    mixture: &ComplexSpectrogram,
    refs: Option<References<'_>>,
    streaming: bool,
    stft_cfg: &StftConfig,
) -> Result<Vec<MaskField>> {
    check_mode(ckpt, mode)?;
    let mix_mag = mixture.magnitude();
    let anchor_mag = match anchor {
        Some(a) if mode.needs_anchor() => Some(stft(a, stft_cfg)?.magnitude()),
        None if mode.needs_anchor() => {
            return Err(DxError::Usage(format!("mode {mode} needs an anchor utterance")));
        }
        _ => None,
    };
    let membership = match (mode, refs) {
        (InferenceMode::OracleMembership, Some(r)) => Some(reference_membership(&mix_mag, r, stft_cfg)?),
        (InferenceMode::OracleMembership, None) => {
            return Err(DxError::Usage(
                "oracle mode needs the target and interferer references".into(),
            ));
        }
        _ => None,
    };
    if streaming {
        let anchor_mag = anchor_mag.as_ref().ok_or_else(|| DxError::Usage("streaming needs an anchor".into()))?;
        let mut masker = StreamingMasker::new(ckpt.params.clone(), &ckpt.constants, mode, anchor_mag)
            .map_err(|e| DxError::Usage(format!("mode {mode} cannot stream: {e}")))?;
        let mut data = Vec::with_capacity(mix_mag.len());
        for t in 0..mix_mag.num_frames() {
            data.extend(masker.push_frame(mix_mag.frame(t))?);
        }
        return Ok(vec![TfGrid::from_vec(mix_mag.num_bins(), mix_mag.num_frames(), data)?]);
    }
    let input = InferenceInput {
        mixture: &mix_mag,
        anchor: anchor_mag.as_ref(),
        membership: membership.as_ref(),
    };
    Ok(infer_masks(
        &ckpt.params,
        &ckpt.constants,
        mode,
        input,
        EncoderMode::Bidirectional,
    )?)
}

/// Applies a mask to the mixture spectrogram and resynthesizes with the
/// mixture phase, trimmed to `len` samples.
pub fn resynthesize(mixture: &ComplexSpectrogram, mask: &MaskField, len: usize, stft_cfg: &StftConfig) -> Result<Waveform> {
    let w = istft(&mixture.apply_mask(mask)?, stft_cfg)?;
    Ok(w.truncated(len))
}

/// One estimate per mask: a single waveform for every mode except
/// `danet-oracle`, which yields one per fixed attractor.
pub fn extract(
    ckpt: &Checkpoint,
    mode: InferenceMode,
    anchor: Option<&Waveform>,
    mixture: &Waveform,
    refs: Option<References<'_>>,
    streaming: bool,
) -> Result<Vec<Waveform>> {
    let stft_cfg = StftConfig::standard();
    let spec = stft(mixture, &stft_cfg)?;
    if spec.num_bins() != ckpt.params.config().num_bins {
        return Err(DxError::Usage(format!(
            "checkpoint expects {} frequency bins, the analysis gives {}",
            ckpt.params.config().num_bins,
            spec.num_bins()
        )));
    }
    infer_mixture_masks(ckpt, mode, anchor, &spec, refs, streaming, &stft_cfg)?
        .iter()
        .map(|m| resynthesize(&spec, m, mixture.len(), &stft_cfg))
        .collect()
}
