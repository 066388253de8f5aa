//! Super-block video coding: transforms, prediction, RD partitioning,
//! in-loop filters, bitstream and evaluation.

pub mod alf;
pub mod bitstream;
pub mod config;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod frame;
pub mod partition;
pub mod predict;
pub mod sao;
pub mod synth;
pub mod xform;
pub mod yuv;

pub use bitstream::{decode_stream, DecodedSequence};
pub use config::{EncoderConfig, SaoConfig};
pub use encoder::{encode_sequence, EncodedSequence, Encoder, FrameReport, FrameStats};
pub use error::{Error, Result};
pub use eval::{bd_rate, psnr, RdCurve, RdPoint};
pub use frame::{Frame, Plane, PlaneKind};
pub use partition::{RdCost, ScuMode};
