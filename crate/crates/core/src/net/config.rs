use core::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Anchor-conditioned canonical-space extractor network.
    Denet,
    /// Speaker-independent attractor network.
    Danet,
    /// Attractor network whose target attractor comes from the anchor.
    DanetAnchor,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Denet, Variant::Danet, Variant::DanetAnchor];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Denet => "denet",
            Variant::Danet => "danet",
            Variant::DanetAnchor => "danet_anchor",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Whether training consumes an anchor utterance.
    pub fn uses_anchor(self) -> bool {
        !matches!(self, Variant::Danet)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How raw STFT magnitudes are scaled before entering the encoder. Masks are
/// always applied to the unscaled magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputScaling {
    Raw,
    /// Divide each utterance by its maximum magnitude.
    PeakNormalized,
    /// Peak-normalise, then map `LOG_RANGE_DB` of level below the peak
    /// linearly in dB onto [0, 1]; quieter bins read 0.
    LogCompressed,
}

/// Dynamic range kept by [`InputScaling::LogCompressed`].
pub const LOG_RANGE_DB: f64 = 80.0;

impl InputScaling {
    /// Feature value of magnitude `m` in an utterance whose peak is `peak`.
    pub fn scale(self, m: f64, peak: f64) -> f64 {
        match self {
            InputScaling::Raw => m,
            _ if !(peak > 0.0) => m,
            InputScaling::PeakNormalized => m / peak,
            InputScaling::LogCompressed => {
                if m > 0.0 {
                    (1.0 + 20.0 * libm::log10(m / peak) / LOG_RANGE_DB).max(0.0)
                } else {
                    0.0
                }
            }
        }
    }
}

impl InputScaling {
    pub fn name(self) -> &'static str {
        match self {
            InputScaling::Raw => "raw",
            InputScaling::PeakNormalized => "peak_normalized",
            InputScaling::LogCompressed => "log_compressed",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "raw" => Some(InputScaling::Raw),
            "peak_normalized" => Some(InputScaling::PeakNormalized),
            "log_compressed" => Some(InputScaling::LogCompressed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub variant: Variant,
    pub num_rnn_layers: usize,
    /// Hidden units per direction.
    pub rnn_hidden: usize,
    pub embed_dim: usize,
    /// Canonical mapper hidden width; unused outside [`Variant::Denet`].
    pub ff_hidden: usize,
    pub num_bins: usize,
    pub input_scaling: InputScaling,
}

impl ModelConfig {
    /// Full-size configuration: 4 x 600 BLSTM, 40-dim embeddings, 256-unit mapper.
    pub fn paper(variant: Variant) -> Self {
        Self {
            variant,
            num_rnn_layers: 4,
            rnn_hidden: 600,
            embed_dim: 40,
            ff_hidden: 256,
            num_bins: 257,
            input_scaling: InputScaling::Raw,
        }
    }

    /// Small configuration trainable on a laptop CPU.
    pub fn desk(variant: Variant) -> Self {
        Self {
            variant,
            num_rnn_layers: 2,
            rnn_hidden: 64,
            embed_dim: 20,
            ff_hidden: 64,
            num_bins: 257,
            input_scaling: InputScaling::PeakNormalized,
        }
    }

    pub fn preset(name: &str, variant: Variant) -> Option<Self> {
        match name {
            "paper" => Some(Self::paper(variant)),
            "desk" => Some(Self::desk(variant)),
            _ => None,
        }
    }

    pub fn with_num_bins(mut self, num_bins: usize) -> Self {
        self.num_bins = num_bins;
        self
    }

    /// Width of the per-frame projection feeding the embedding field.
    pub fn projection_dim(&self) -> usize {
        self.num_bins * self.embed_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 {
            return Err(Error::InvalidConfig("embedding dimension must be at least 1"));
        }
        if self.num_rnn_layers == 0 || self.rnn_hidden == 0 {
            return Err(Error::InvalidConfig("encoder needs at least one non-empty layer"));
        }
        if self.num_bins == 0 {
            return Err(Error::InvalidConfig("frequency bin count must be positive"));
        }
        if self.variant == Variant::Denet && self.ff_hidden == 0 {
            return Err(Error::InvalidConfig("canonical mapper needs hidden units"));
        }
        Ok(())
    }
}
