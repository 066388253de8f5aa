//! Sequence and frame headers.
//!
//! Sequence header (byte aligned, big-endian fixed-width fields):
//!
//! | field                  | bits |
//! |------------------------|------|
//! | magic `SBC1`           | 32   |
//! | width, height          | 16+16|
//! | bitDepth               | 8    |
//! | qp                     | 8    |
//! | maxScuWidth            | 16   |
//! | maxPartitionDepth      | 8    |
//! | maxDirectPartitionDepth| 8    |
//! | searchRange            | 8    |
//! | intraPeriod            | 16   |
//! | saoMode                | 8    |
//! | saoBlockSize           | 16   |
//! | alfEnabled             | 8    |
//! | frame count            | 32   |
//!
//! Each frame starts byte aligned with an 8-bit frame type; when ALF is
//! enabled a 1-bit frame filter flag follows, then the seven unique filter
//! coefficients as `se` codes if the flag is set.

use super::bits::{BitReader, BitWrite, BitWriter};
use super::{DecodeError, DecodeErrorKind};
use crate::config::{EncoderConfig, SaoConfig};

pub const MAGIC: [u8; 4] = *b"SBC1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceHeader {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub config: EncoderConfig,
}

impl SequenceHeader {
    pub fn write(&self, w: &mut BitWriter) {
        let c = &self.config;
        w.write_bytes(&MAGIC);
        w.write_bits(self.width as u64, 16);
        w.write_bits(self.height as u64, 16);
        w.write_bits(u64::from(c.bit_depth), 8);
        w.write_bits(u64::from(c.qp), 8);
        w.write_bits(c.max_scu_width as u64, 16);
        w.write_bits(u64::from(c.max_partition_depth), 8);
        w.write_bits(u64::from(c.max_direct_partition_depth), 8);
        w.write_bits(c.search_range as u64, 8);
        w.write_bits(c.intra_period as u64, 16);
        w.write_bits(u64::from(c.sao_mode.code()), 8);
        w.write_bits(c.sao_block_size as u64, 16);
        w.write_bits(u64::from(c.alf_enabled), 8);
        w.write_bits(self.frame_count as u64, 32);
    }

    pub fn read(r: &mut BitReader<'_>) -> Result<Self, DecodeError> {
        let magic = r.read_bits(32)?;
        if magic != u64::from(u32::from_be_bytes(MAGIC)) {
            return Err(DecodeError::new(DecodeErrorKind::BadMagic, 0));
        }
        let width = r.read_bits(16)? as usize;
        let height = r.read_bits(16)? as usize;
        let at = r.position();
        let bit_depth = r.read_bits(8)? as u8;
        if !matches!(bit_depth, 8 | 10) {
            return Err(DecodeError::new(DecodeErrorKind::UnsupportedBitDepth(bit_depth), at));
        }
        let qp = r.read_bits(8)? as u8;
        let scu = r.read_bits(16)? as usize;
        let depth = r.read_bits(8)? as u32;
        let direct = r.read_bits(8)? as u32;
        let search_range = r.read_bits(8)? as usize;
        let intra_period = r.read_bits(16)? as usize;
        let at = r.position();
        let sao_code = r.read_bits(8)? as u8;
        let sao_mode =
            SaoConfig::from_code(sao_code).ok_or_else(|| DecodeError::range("saoMode", sao_code.into(), at))?;
        let sao_block_size = r.read_bits(16)? as usize;
        let alf_enabled = r.read_bits(8)? != 0;
        let frame_count = r.read_bits(32)? as usize;
        let config = EncoderConfig {
            max_scu_width: scu,
            max_scu_height: scu,
            max_partition_depth: depth,
            max_direct_partition_depth: direct,
            qp,
            intra_period,
            search_range,
            sao_mode,
            sao_block_size,
            alf_enabled,
            bit_depth,
        };
        config.validate().map_err(|e| DecodeError::new(DecodeErrorKind::InvalidHeader(e.to_string()), r.position()))?;
        if width == 0 || height == 0 {
            return Err(DecodeError::new(DecodeErrorKind::InvalidHeader("zero frame dimension".into()), 32));
        }
        Ok(SequenceHeader { width, height, frame_count, config })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameType {
    I,
    P,
}

impl FrameType {
    pub fn is_intra(self) -> bool {
        self == FrameType::I
    }

    pub fn label(self) -> &'static str {
        match self {
            FrameType::I => "I",
            FrameType::P => "P",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub frame_type: FrameType,
    /// Unique ALF coefficients when the frame filter is on.
    pub alf: Option<[i32; 7]>,
}

impl FrameHeader {
    pub fn write<W: BitWrite + ?Sized>(&self, w: &mut W, alf_enabled: bool) {
        w.write_bits(matches!(self.frame_type, FrameType::P) as u64, 8);
        if alf_enabled {
            w.write_bit(self.alf.is_some());
            if let Some(coeffs) = &self.alf {
                for &c in coeffs {
                    w.write_se(c);
                }
            }
        }
    }

    pub fn read(r: &mut BitReader<'_>, alf_enabled: bool) -> Result<Self, DecodeError> {
        let at = r.position();
        let frame_type = match r.read_bits(8)? {
            0 => FrameType::I,
            1 => FrameType::P,
            other => return Err(DecodeError::range("frame_type", other as i64, at)),
        };
        let mut alf = None;
        if alf_enabled && r.read_bit()? {
            let mut coeffs = [0; 7];
            for c in &mut coeffs {
                *c = r.read_se()?;
            }
            alf = Some(coeffs);
        }
        Ok(FrameHeader { frame_type, alf })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_header_round_trip() {
        let h = SequenceHeader {
            width: 1920,
            height: 1080,
            frame_count: 3,
            config: EncoderConfig { bit_depth: 10, ..EncoderConfig::default() },
        };
        let mut w = BitWriter::new();
        h.write(&mut w);
        assert_eq!(w.bits_written() % 8, 0);
        let bytes = w.into_bytes();
        assert_eq!(&bytes[..4], b"SBC1");
        assert_eq!(SequenceHeader::read(&mut BitReader::new(&bytes)).unwrap(), h);
    }

    #[test]
    fn rejects_bad_magic_and_bit_depth() {
        let h = SequenceHeader { width: 64, height: 64, frame_count: 1, config: EncoderConfig::default() };
        let mut w = BitWriter::new();
        h.write(&mut w);
        let mut bytes = w.into_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        let e = SequenceHeader::read(&mut BitReader::new(&bad)).unwrap_err();
        assert_eq!(e.kind, DecodeErrorKind::BadMagic);
        bytes[8] = 12;
        let e = SequenceHeader::read(&mut BitReader::new(&bytes)).unwrap_err();
        assert_eq!(e.kind, DecodeErrorKind::UnsupportedBitDepth(12));
        assert_eq!(e.bit, 64);
    }

    #[test]
    fn frame_header_round_trip() {
        for alf in [None, Some([1, -2, 3, 0, 5, -6, 254])] {
            let h = FrameHeader { frame_type: FrameType::P, alf };
            let mut w = BitWriter::new();
            h.write(&mut w, true);
            let bytes = w.into_bytes();
            assert_eq!(FrameHeader::read(&mut BitReader::new(&bytes), true).unwrap(), h);
        }
    }
}
