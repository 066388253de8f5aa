//! Frame and sequence encoding: partitioning, in-loop filters and
//! serialisation.

use crate::alf::{decide_frame_alf, AlfDecision};
use crate::bitstream::{BitCounter, BitWrite, BitWriter, FrameHeader, FrameType, SequenceHeader};
use crate::config::{EncoderConfig, SaoConfig};
use crate::error::{Error, Result};
use crate::eval::frame_psnr;
use crate::frame::{pad_to_scu_grid, Frame};
use crate::partition::context::PictureCtx;
use crate::partition::syntax::write_scu;
use crate::partition::{derive_partition_sizes, lambda_for, CuEncoder, PartitionSizes, ScuDecision, ScuMode};
use crate::predict::RefPicture;
use crate::sao::{apply_sao_frame, decide_frame_sao, write_scu_sao, SaoBlockGrid, ScuSaoCost};

/// Per-frame statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameStats {
    pub index: usize,
    pub frame_type: FrameType,
    /// Bits of the whole frame, header and alignment included.
    pub bits: u64,
    /// Luma, Cb and Cr PSNR in dB.
    pub psnr: [f64; 3],
    pub sao_bits: u64,
    pub alf_bits: u64,
    pub mode_flag_bits: u64,
    pub direct_count: usize,
    pub quadtree_count: usize,
}

/// Everything the encoder decided for one frame.
#[derive(Clone, Debug)]
pub struct FrameReport {
    pub stats: FrameStats,
    /// Final reconstruction cropped to the display window.
    pub recon: Frame,
    pub scu_modes: Vec<ScuMode>,
    pub scu_decisions: Vec<ScuDecision>,
    pub sao: SaoBlockGrid,
    pub sao_costs: Vec<ScuSaoCost>,
    pub alf: Option<AlfDecision>,
}

/// Stateful encoder producing one bitstream.
pub struct Encoder {
    config: EncoderConfig,
    sizes: PartitionSizes,
    width: usize,
    height: usize,
    reference: Option<RefPicture>,
    index: usize,
    writer: BitWriter,
}

impl Encoder {
    /// Validates the configuration and writes the sequence header.
    pub fn new(config: EncoderConfig, width: usize, height: usize, frame_count: usize) -> Result<Self> {
        config.validate()?;
        let sizes = derive_partition_sizes(&config)?;
        if width == 0 || height == 0 || width > usize::from(u16::MAX) || height > usize::from(u16::MAX) {
            return Err(Error::DimensionMismatch(format!("unsupported frame size {width}x{height}")));
        }
        let mut writer = BitWriter::new();
        SequenceHeader { width, height, frame_count, config: config.clone() }.write(&mut writer);
        Ok(Encoder { config, sizes, width, height, reference: None, index: 0, writer })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn sizes(&self) -> PartitionSizes {
        self.sizes
    }

    pub fn encode_frame(&mut self, frame: &Frame) -> Result<FrameReport> {
        let cfg = &self.config;
        if frame.display_width != self.width
            || frame.display_height != self.height
            || frame.bit_depth() != cfg.bit_depth
        {
            return Err(Error::MixedFrames);
        }
        let frame_type = if self.index.is_multiple_of(cfg.intra_period) { FrameType::I } else { FrameType::P };
        let orig = pad_to_scu_grid(frame, cfg);
        let (w, h) = (orig.width(), orig.height());
        let m = self.sizes.m_scu;
        let (cols, rows) = (w / m, h / m);
        let lambda = lambda_for(cfg.qp, frame_type.is_intra(), cfg.bit_depth);

        let reference = match frame_type {
            FrameType::P => self.reference.as_ref(),
            FrameType::I => None,
        };
        let pic = PictureCtx::new(
            w,
            h,
            (self.width, self.height),
            cfg.bit_depth,
            cfg.qp,
            frame_type,
            reference,
            cfg.search_range,
        );
        let mut enc = CuEncoder::new(&orig, pic, self.sizes, lambda);
        let mut decisions = Vec::with_capacity(cols * rows);
        for sy in 0..rows {
            for sx in 0..cols {
                decisions.push(enc.select_scu_mode(sx * m, sy * m));
            }
        }
        let recon = enc.into_picture().recon;

        let (sao, sao_costs) = decide_frame_sao(&orig, &recon, cfg.sao_mode, cfg.sao_block_size, m, lambda);
        let filtered = match cfg.sao_mode {
            SaoConfig::Off => recon,
            _ => apply_sao_frame(&recon, &sao)?,
        };
        let (alf, final_frame) = if cfg.alf_enabled {
            let cells: Vec<_> = decisions.iter().map(|d| d.alf_cells(self.sizes.m_ctu)).collect();
            let (decision, out) = decide_frame_alf(&orig, &filtered, &cells, lambda);
            (Some(decision), out)
        } else {
            (None, filtered)
        };

        let w_ = &mut self.writer;
        w_.align();
        let start = w_.bits_written();
        let header = FrameHeader { frame_type, alf: alf.as_ref().and_then(|a| a.filter).map(|f| f.unique()) };
        header.write(w_, cfg.alf_enabled);
        let mut alf_bits = w_.bits_written() - start - 8;
        let (mut sao_bits, mut mode_flag_bits) = (0, 0);
        for (i, d) in decisions.iter().enumerate() {
            mode_flag_bits += write_scu(w_, d, &self.sizes, frame_type);
            let before = w_.bits_written();
            write_scu_sao(w_, &sao, cfg.sao_mode, i % cols, i / cols);
            sao_bits += w_.bits_written() - before;
            if let Some(flags) = alf.as_ref().filter(|a| a.filter.is_some()).map(|a| &a.scus[i]) {
                let before = w_.bits_written();
                flags.write(w_);
                alf_bits += w_.bits_written() - before;
            }
        }
        w_.align();
        let bits = w_.bits_written() - start;

        let recon = final_frame.cropped_to_display();
        let stats = FrameStats {
            index: self.index,
            frame_type,
            bits,
            psnr: frame_psnr(frame, &recon)?,
            sao_bits,
            alf_bits,
            mode_flag_bits,
            direct_count: decisions.iter().filter(|d| d.mode == ScuMode::DirectCtu).count(),
            quadtree_count: decisions.iter().filter(|d| d.mode == ScuMode::ScuToCtu).count(),
        };
        self.reference = Some(RefPicture::new(&final_frame, cfg.search_range));
        self.index += 1;
        Ok(FrameReport {
            stats,
            recon,
            scu_modes: decisions.iter().map(|d| d.mode).collect(),
            scu_decisions: decisions,
            sao,
            sao_costs,
            alf,
        })
    }

    pub fn finish(self) -> Vec<u8> {
        self.writer.into_bytes()
    }
}

/// Output of a whole-sequence encode.
#[derive(Clone, Debug)]
pub struct EncodedSequence {
    pub stream: Vec<u8>,
    pub frames: Vec<FrameReport>,
}

impl EncodedSequence {
    pub fn stats(&self) -> Vec<FrameStats> {
        self.frames.iter().map(|f| f.stats.clone()).collect()
    }

    pub fn recon(&self) -> Vec<Frame> {
        self.frames.iter().map(|f| f.recon.clone()).collect()
    }

    pub fn total_bits(&self) -> u64 {
        self.stream.len() as u64 * 8
    }
}

pub fn encode_sequence(frames: &[Frame], config: &EncoderConfig) -> Result<EncodedSequence> {
    let first = frames.first().ok_or_else(|| Error::DimensionMismatch("no frames to encode".into()))?;
    let mut enc = Encoder::new(config.clone(), first.display_width, first.display_height, frames.len())?;
    let reports = frames.iter().map(|f| enc.encode_frame(f)).collect::<Result<Vec<_>>>()?;
    Ok(EncodedSequence { stream: enc.finish(), frames: reports })
}

/// Bits one SCU's partition syntax would take, mode flag included.
pub fn scu_partition_bits(decision: &ScuDecision, sizes: &PartitionSizes, frame_type: FrameType) -> u64 {
    let mut c = BitCounter::new();
    write_scu(&mut c, decision, sizes, frame_type);
    c.bits_written()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::decode_stream;
    use crate::synth::{clip, Clip};

    fn small(sao: SaoConfig, alf: bool) -> EncoderConfig {
        EncoderConfig {
            max_scu_width: 64,
            max_scu_height: 64,
            max_partition_depth: 3,
            max_direct_partition_depth: 1,
            search_range: 4,
            sao_mode: sao,
            sao_block_size: 16,
            alf_enabled: alf,
            intra_period: 4,
            ..EncoderConfig::default()
        }
    }

    #[test]
    fn closed_loop_small() {
        for c in Clip::ALL {
            let frames = clip(c, 96, 80, 3, 8, 11);
            for (sao, alf) in [(SaoConfig::Off, false), (SaoConfig::FixedBlock, true), (SaoConfig::AdaptiveBlock, true)]
            {
                let seq = encode_sequence(&frames, &small(sao, alf)).unwrap();
                let dec = decode_stream(&seq.stream).unwrap();
                assert_eq!(dec.frames, seq.recon(), "{} {sao:?} {alf}", c.name());
                for s in seq.stats() {
                    assert!(s.psnr[0] > 25.0, "{s:?}");
                }
            }
        }
    }
}
