use std::io;

use thiserror::Error;

use crate::bitstream::DecodeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("yuv input truncated while reading frame {frame}")]
    TruncatedYuv { frame: usize },

    #[error("sample value {value} out of range for {bit_depth}-bit video")]
    SampleRange { value: u32, bit_depth: u8 },

    #[error("unsupported bit depth {0} (expected 8 or 10)")]
    UnsupportedBitDepth(u8),

    #[error("plane holds {actual} samples, expected {expected}")]
    PlaneSize { expected: usize, actual: usize },

    #[error("block {w}x{h} at ({x},{y}) lies outside a {width}x{height} plane")]
    BlockOutOfBounds { x: usize, y: usize, w: usize, h: usize, width: usize, height: usize },

    #[error("frames in one sequence must share dimensions and bit depth")]
    MixedFrames,

    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported transform size {0}")]
    UnsupportedBlockSize(usize),

    #[error("qp {0} out of range 0..=51")]
    QpOutOfRange(i32),

    #[error("block size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("prediction mode {0} needs a neighbour that is not available")]
    IneligibleIntraMode(&'static str),

    #[error("SAO block {0} merges with a neighbour that does not exist")]
    UnresolvedMerge(usize),

    #[error("BD-rate: {0}")]
    BdRate(String),

    #[error(transparent)]
    Decode(#[from] DecodeError),
}
