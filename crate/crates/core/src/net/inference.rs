use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::config::Variant;
use super::encoder::{EncoderMode, encode_primary, encode_primary_with_mode};
use super::mapper::map_canonical;
use super::model::PRESENCE_FLOOR_DB;
use super::params::ModelParams;
use crate::dsp::{MagnitudeSpectrogram, presence_mask};
use crate::error::{Error, Result};
use crate::extractor::{
    AttractorPair, ExtractorVec, MaskField, MembershipMask, anchor_extractor, canonical_extractor,
    nearest_attractor, similarity_mask,
};

/// Inference-time constants gathered from the training data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InferenceConstants {
    /// Mean canonical extractor (canonical-space network).
    pub preset_extractor: Option<ExtractorVec>,
    /// Mean target / interference attractors (speaker-independent network).
    pub attractor_pair: Option<AttractorPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferenceMode {
    /// Canonical embeddings scored against the preset extractor.
    Preset,
    /// Canonical extractor from the ideal membership (needs references).
    OracleMembership,
    /// Primary embeddings scored against the anchor extractor.
    Anchor,
    /// Fixed attractor closest to the anchor extractor.
    Nearest,
    /// Both fixed attractors; the caller keeps the better stream.
    DanetOracle,
}

impl InferenceMode {
    pub const ALL: [InferenceMode; 5] = [
        InferenceMode::Preset,
        InferenceMode::OracleMembership,
        InferenceMode::Anchor,
        InferenceMode::Nearest,
        InferenceMode::DanetOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InferenceMode::Preset => "preset",
            InferenceMode::OracleMembership => "oracle",
            InferenceMode::Anchor => "anchor",
            InferenceMode::Nearest => "nearest",
            InferenceMode::DanetOracle => "danet-oracle",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "oracle-membership" => Some(InferenceMode::OracleMembership),
            _ => Self::ALL.into_iter().find(|m| m.name() == name),
        }
    }

    /// The only variant whose checkpoints support this mode.
    pub fn variant(self) -> Variant {
        match self {
            InferenceMode::Preset | InferenceMode::OracleMembership => Variant::Denet,
            InferenceMode::Anchor => Variant::DanetAnchor,
            InferenceMode::Nearest | InferenceMode::DanetOracle => Variant::Danet,
        }
    }

    pub fn needs_anchor(self) -> bool {
        !matches!(self, InferenceMode::DanetOracle)
    }
}

impl fmt::Display for InferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InferenceInput<'a> {
    pub mixture: &'a MagnitudeSpectrogram,
    pub anchor: Option<&'a MagnitudeSpectrogram>,
    /// Ideal target membership, required by [`InferenceMode::OracleMembership`].
    pub membership: Option<&'a MembershipMask>,
}

pub(crate) fn check_mode(params: &ModelParams, mode: InferenceMode) -> Result<()> {
    let variant = params.config().variant;
    if mode.variant() != variant {
        return Err(Error::WrongVariant {
            operation: mode.name(),
            variant,
        });
    }
    Ok(())
}

pub(crate) fn anchor_point(params: &ModelParams, anchor: Option<&MagnitudeSpectrogram>) -> Result<ExtractorVec> {
    let anchor = anchor.ok_or(Error::MissingInput("anchor"))?;
    let v = encode_primary(params, anchor)?;
    anchor_extractor(&v, &presence_mask(anchor, PRESENCE_FLOOR_DB))
}

pub(crate) fn preset(constants: &InferenceConstants) -> Result<&ExtractorVec> {
    constants
        .preset_extractor
        .as_ref()
        .ok_or(Error::MissingInput("preset extractor"))
}

pub(crate) fn pair(constants: &InferenceConstants) -> Result<&AttractorPair> {
    constants
        .attractor_pair
        .as_ref()
        .ok_or(Error::MissingInput("fixed attractor pair"))
}

/// Target mask(s) for a mixture. Every mode yields one mask except
/// [`InferenceMode::DanetOracle`], which yields one per fixed attractor.
pub fn infer_masks(
    params: &ModelParams,
    constants: &InferenceConstants,
    mode: InferenceMode,
    input: InferenceInput<'_>,
    encoder_mode: EncoderMode,
) -> Result<Vec<MaskField>> {
    check_mode(params, mode)?;
    let v_mix = encode_primary_with_mode(params, input.mixture, encoder_mode)?;
    match mode {
        InferenceMode::Preset | InferenceMode::OracleMembership => {
            let a = anchor_point(params, input.anchor)?;
            let canonical = map_canonical(params, &a, &v_mix)?;
            let extractor = if mode == InferenceMode::Preset {
                preset(constants)?.clone()
            } else {
                let y = input.membership.ok_or(Error::MissingInput("target membership"))?;
                canonical_extractor(&canonical, y)?
            };
            Ok(vec![similarity_mask(&extractor, &canonical)?])
        }
        InferenceMode::Anchor => {
            let a = anchor_point(params, input.anchor)?;
            Ok(vec![similarity_mask(&a, &v_mix)?])
        }
        InferenceMode::Nearest => {
            let a = anchor_point(params, input.anchor)?;
            let chosen = nearest_attractor(pair(constants)?, &a);
            Ok(vec![similarity_mask(chosen, &v_mix)?])
        }
        InferenceMode::DanetOracle => {
            let p = pair(constants)?;
            Ok(vec![
                similarity_mask(&p.first, &v_mix)?,
                similarity_mask(&p.second, &v_mix)?,
            ])
        }
    }
}
