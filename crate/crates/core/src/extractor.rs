//! Extractor / attractor algebra over embedding fields.
//!
//! An extractor is the mean embedding over a selected set of T-F bins; a mask
//! is the sigmoid of the inner product between each bin's embedding and an
//! extractor point.

use alloc::vec;
use alloc::vec::Vec;

use crate::dsp::{BinaryMask, MagnitudeSpectrogram, TfGrid};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, sigmoid};

/// Ideal target-speech assignment of mixture bins.
pub type MembershipMask = BinaryMask;

/// Soft mask with every entry strictly inside (0, 1).
pub type MaskField = TfGrid<f64>;

/// Largest value below 1.0; saturated sigmoids are pinned here so masks stay
/// strictly inside the unit interval.
const MASK_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;
const MASK_FLOOR: f64 = f64::MIN_POSITIVE;

#[inline]
pub(crate) fn mask_value(z: f64) -> f64 {
    sigmoid(z).clamp(MASK_FLOOR, MASK_CEIL)
}

/// F x T x K embeddings, stored `[(t * F + f) * K + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingField {
    num_bins: usize,
    num_frames: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingField {
    pub fn from_vec(num_bins: usize, num_frames: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != num_bins * num_frames * dim {
            return Err(Error::ShapeMismatch {
                context: "embedding field",
                expected: num_bins * num_frames * dim,
                found: data.len(),
            });
        }
        Ok(Self {
            num_bins,
            num_frames,
            dim,
            data,
        })
    }

    pub fn zeros(num_bins: usize, num_frames: usize, dim: usize) -> Self {
        Self {
            num_bins,
            num_frames,
            dim,
            data: vec![0.0; num_bins * num_frames * dim],
        }
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn embedding(&self, bin: usize, frame: usize) -> &[f64] {
        let start = (frame * self.num_bins + bin) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Embeddings in grid order (frame-major), one slice per bin.
    pub fn embeddings(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    fn check_grid<T>(&self, grid: &TfGrid<T>, context: &'static str) -> Result<()> {
        if grid.num_bins() != self.num_bins {
            return Err(Error::ShapeMismatch {
                context,
                expected: self.num_bins,
                found: grid.num_bins(),
            });
        }
        if grid.num_frames() != self.num_frames {
            return Err(Error::ShapeMismatch {
                context,
                expected: self.num_frames,
                found: grid.num_frames(),
            });
        }
        Ok(())
    }
}

/// A K-dimensional extractor or attractor point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorVec(pub Vec<f64>);

impl ExtractorVec {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &ExtractorVec) -> f64 {
        libm::sqrt(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(dot(&self.0, &self.0))
    }
}

/// Attractors collected for a speaker-independent network, ordered
/// target first, interference second.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorPair {
    pub first: ExtractorVec,
    pub second: ExtractorVec,
}

fn masked_mean(v: &EmbeddingField, y: &BinaryMask, empty: Error) -> Result<ExtractorVec> {
    v.check_grid(y, "extractor selection")?;
    let mut sum = vec![0.0; v.dim];
    let mut count = 0usize;
    for (e, &sel) in v.embeddings().zip(y.as_slice()) {
        if sel {
            axpy(1.0, e, &mut sum);
            count += 1;
        }
    }
    if count == 0 {
        return Err(empty);
    }
    let inv = 1.0 / count as f64;
    sum.iter_mut().for_each(|s| *s *= inv);
    Ok(ExtractorVec(sum))
}

/// Mean of the anchor embeddings over present bins.
pub fn anchor_extractor(v: &EmbeddingField, presence: &BinaryMask) -> Result<ExtractorVec> {
    masked_mean(v, presence, Error::EmptyAnchorPresence)
}

/// Mean of canonical embeddings over the target's membership bins.
pub fn canonical_extractor(v: &EmbeddingField, membership: &MembershipMask) -> Result<ExtractorVec> {
    masked_mean(v, membership, Error::EmptyMembership)
}

pub fn similarity_mask(a: &ExtractorVec, v: &EmbeddingField) -> Result<MaskField> {
    if a.dim() != v.dim {
        return Err(Error::ShapeMismatch {
            context: "extractor dimension",
            expected: v.dim,
            found: a.dim(),
        });
    }
    let data = v.embeddings().map(|e| mask_value(dot(&a.0, e))).collect();
    TfGrid::from_vec(v.num_bins, v.num_frames, data)
}

/// Ideal binary membership of the target: the target magnitude is at least
/// every interferer's (ties go to the target) and the mixture bin lies within
/// `floor_db` of the mixture maximum.
pub fn ideal_membership(
    target: &MagnitudeSpectrogram,
    interferers: &[MagnitudeSpectrogram],
    mixture: &MagnitudeSpectrogram,
    floor_db: f64,
) -> Result<MembershipMask> {
    if interferers.is_empty() {
        return Err(Error::EmptyInput("interferer list"));
    }
    target.check_same_shape(mixture, "ideal membership")?;
    for i in interferers {
        target.check_same_shape(i, "ideal membership")?;
    }
    let present = crate::dsp::presence_mask(mixture, floor_db);
    let data = (0..target.len())
        .map(|idx| {
            let s = target.as_slice()[idx];
            present.as_slice()[idx] && interferers.iter().all(|i| s >= i.as_slice()[idx])
        })
        .collect();
    TfGrid::from_vec(target.num_bins(), target.num_frames(), data)
}

/// Componentwise mean of extractors gathered over a training set.
pub fn preset_extractor(extractors: &[ExtractorVec]) -> Result<ExtractorVec> {
    let first = extractors
        .first()
        .ok_or(Error::EmptyInput("extractor list"))?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for e in extractors {
        if e.dim() != dim {
            return Err(Error::ShapeMismatch {
                context: "extractor dimension",
                expected: dim,
                found: e.dim(),
            });
        }
        axpy(1.0, &e.0, &mut sum);
    }
    let n = extractors.len() as f64;
    Ok(ExtractorVec(sum.into_iter().map(|s| s / n).collect()))
}

/// Pair element closest to the anchor's attractor; exact ties pick `first`.
pub fn nearest_attractor<'a>(pair: &'a AttractorPair, anchor: &ExtractorVec) -> &'a ExtractorVec {
    if pair.second.distance(anchor) < pair.first.distance(anchor) {
        &pair.second
    } else {
        &pair.first
    }
}

/// One attractor per source from the mixture embeddings.
pub fn danet_attractors(
    v_mix: &EmbeddingField,
    memberships: &[MembershipMask],
) -> Result<Vec<ExtractorVec>> {
    memberships
        .iter()
        .map(|y| masked_mean(v_mix, y, Error::EmptyMembership))
        .collect()
}
