//! Stream syntax: exp-Golomb primitives, coefficient coding, headers and the
//! decoder.

pub mod bits;
pub mod coeff;
mod decode;
pub mod header;

use std::fmt;

pub use bits::{BitCounter, BitReader, BitWrite, BitWriter};
pub use coeff::{coefficient_bits, read_coefficients, write_coefficients, zigzag};
pub use decode::{decode_stream, DecodedSequence};
pub use header::{FrameHeader, FrameType, SequenceHeader, MAGIC};

/// What went wrong while parsing.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DecodeErrorKind {
    #[error("stream ends early")]
    Truncated,
    #[error("exp-Golomb prefix longer than 31 bits")]
    MalformedExpGolomb,
    #[error("zero run {run} overruns the {remaining} remaining coefficient positions")]
    RunOverrun { run: usize, remaining: usize },
    #[error("coefficient level {0} out of range")]
    LevelRange(i32),
    #[error("bad magic, expected \"SBC1\"")]
    BadMagic,
    #[error("unsupported bit depth {0}")]
    UnsupportedBitDepth(u8),
    #[error("syntax element `{element}` has out-of-range value {value}")]
    SyntaxRange { element: &'static str, value: i64 },
    #[error("invalid sequence header: {0}")]
    InvalidHeader(String),
}

/// A parse failure with the bit offset at which it was detected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeError {
    pub kind: DecodeErrorKind,
    pub bit: u64,
    pub frame: Option<usize>,
    pub scu: Option<usize>,
}

impl DecodeError {
    pub fn new(kind: DecodeErrorKind, bit: u64) -> Self {
        DecodeError { kind, bit, frame: None, scu: None }
    }

    pub(crate) fn range(element: &'static str, value: i64, bit: u64) -> Self {
        DecodeError::new(DecodeErrorKind::SyntaxRange { element, value }, bit)
    }

    pub(crate) fn in_frame(mut self, frame: usize) -> Self {
        self.frame.get_or_insert(frame);
        self
    }

    pub(crate) fn in_scu(mut self, scu: usize) -> Self {
        self.scu.get_or_insert(scu);
        self
    }
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at bit {}", self.kind, self.bit)?;
        if let Some(frame) = self.frame {
            write!(f, " (frame {frame}")?;
            if let Some(scu) = self.scu {
                write!(f, ", SCU {scu}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::error::Error for DecodeError {}
