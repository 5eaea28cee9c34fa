use core::fmt;

use crate::net::Variant;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Waveform shorter than a single analysis window.
    InputTooShort { len: usize, win_len: usize },
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    InvalidConfig(&'static str),
    NonFinite(&'static str),
    EmptyAnchorPresence,
    EmptyMembership,
    EmptyInput(&'static str),
    WrongVariant {
        operation: &'static str,
        variant: Variant,
    },
    MissingInput(&'static str),
    NonFiniteLoss { value: f64 },
    ZeroPowerSource,
    ZeroReference,
    DegeneratePointSet,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InputTooShort { len, win_len } => write!(
                f,
                "input too short: {len} samples, need at least one window of {win_len}"
            ),
            Error::ShapeMismatch {
                context,
                expected,
                found,
            } => write!(f, "shape mismatch in {context}: expected {expected}, found {found}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::NonFinite(what) => write!(f, "non-finite values in {what}"),
            Error::EmptyAnchorPresence => f.write_str("empty anchor presence"),
            Error::EmptyMembership => f.write_str("empty membership"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::WrongVariant { operation, variant } => {
                write!(f, "{operation} is not available for the {variant} variant")
            }
            Error::MissingInput(what) => write!(f, "missing input: {what}"),
            Error::NonFiniteLoss { value } => {
                write!(f, "non-finite loss ({value}); aborting step")
            }
            Error::ZeroPowerSource => f.write_str("zero-power source"),
            Error::ZeroReference => f.write_str("reference signal has zero energy"),
            Error::DegeneratePointSet => f.write_str("degenerate point set"),
        }
    }
}

impl core::error::Error for Error {}
