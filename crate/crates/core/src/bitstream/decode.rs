//! Stream decoder mirroring the encoder's reconstruction path.

use super::bits::BitReader;
use super::coeff::read_coefficients;
use super::header::{FrameHeader, FrameType, SequenceHeader};
use super::{DecodeError, DecodeErrorKind};
use crate::alf::{apply_alf_frame, AlfFilter, AlfScuFlags};
use crate::config::{EncoderConfig, SaoConfig};
use crate::error::{Error, Result};
use crate::frame::{chroma_dim, Frame, PlaneKind};
use crate::partition::context::{tu_layout, CellState, PictureCtx, Prediction};
use crate::partition::{derive_partition_sizes, z_scan_order, PartitionSizes};
use crate::predict::{IntraMode, MotionVector, RefPicture};
use crate::sao::{apply_sao_frame, read_scu_sao, SaoBlockGrid};

/// Decoded frames, cropped to the display size.
#[derive(Clone, Debug)]
pub struct DecodedSequence {
    pub header: SequenceHeader,
    pub frames: Vec<Frame>,
}

struct FrameDecoder<'a, 'd, 'r> {
    r: &'a mut BitReader<'d>,
    pic: PictureCtx<'r>,
    sizes: PartitionSizes,
    frame_type: FrameType,
    pred: Vec<u16>,
    out: Vec<u16>,
    cells: Vec<(usize, usize, usize)>,
}

impl FrameDecoder<'_, '_, '_> {
    fn node(&mut self, x: usize, y: usize, size: usize, min_leaf: usize) -> Result<(), DecodeError> {
        let split = size > min_leaf && self.r.read_bit()?;
        if split {
            let half = size / 2;
            for (qx, qy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                self.node(x + qx * half, y + qy * half, half, min_leaf)?;
            }
            return Ok(());
        }
        self.leaf(x, y, size)?;
        let m_ctu = self.sizes.m_ctu;
        let cell = if size >= m_ctu { (x, y, size) } else { (x / m_ctu * m_ctu, y / m_ctu * m_ctu, m_ctu) };
        if self.cells.last() != Some(&cell) {
            self.cells.push(cell);
        }
        Ok(())
    }

    fn leaf(&mut self, x: usize, y: usize, size: usize) -> Result<(), DecodeError> {
        let r = &mut *self.r;
        let mut skip = false;
        let intra = match self.frame_type {
            FrameType::I => true,
            FrameType::P => {
                skip = r.read_bit()?;
                !skip && r.read_bit()?
            }
        };
        let (prediction, state) = if intra {
            let at = r.position();
            let idx = r.read_ue()?;
            let mode = IntraMode::from_index(idx)
                .filter(|&m| PictureCtx::intra_eligible(x, y, m))
                .ok_or_else(|| DecodeError::range("intra_mode", i64::from(idx), at))?;
            (Prediction::Intra(mode), CellState::Intra)
        } else {
            let pmv = self.pic.mv_predictor(x, y, size);
            let mv = if skip {
                pmv
            } else {
                let at = r.position();
                let dx = r.read_se()?;
                let dy = r.read_se()?;
                let mv = MotionVector::new(pmv.dx.saturating_add(dx), pmv.dy.saturating_add(dy));
                if !mv.within(self.pic.search_range) {
                    return Err(DecodeError::range("mv", i64::from(mv.dx.abs().max(mv.dy.abs())), at));
                }
                mv
            };
            (Prediction::Inter(mv), CellState::Inter(mv))
        };
        for kind in PlaneKind::ALL {
            let s = kind.shift();
            let (px, py, n) = (x >> s, y >> s, size >> s);
            let mut pred = std::mem::take(&mut self.pred);
            let mut out = std::mem::take(&mut self.out);
            self.pic.predict(kind, px, py, n, prediction, &mut pred[..n * n]);
            if skip {
                out[..n * n].copy_from_slice(&pred[..n * n]);
            } else {
                let (t, k) = tu_layout(n);
                let levels = (0..k * k).map(|_| read_coefficients(self.r, t)).collect::<Result<Vec<_>, _>>()?;
                self.pic.reconstruct(&pred[..n * n], n, &levels, &mut out[..n * n]);
            }
            self.pic.write_block(kind, px, py, n, &out[..n * n]);
            self.pred = pred;
            self.out = out;
        }
        self.pic.grid.fill(x, y, size, state);
        Ok(())
    }
}

fn padded_size(header: &SequenceHeader) -> (usize, usize) {
    let m = header.config.max_scu_width;
    (header.width.div_ceil(m) * m, header.height.div_ceil(m) * m)
}

fn decode_frame(
    r: &mut BitReader<'_>,
    cfg: &EncoderConfig,
    sizes: PartitionSizes,
    display: (usize, usize),
    padded: (usize, usize),
    reference: Option<&RefPicture>,
) -> Result<Frame, DecodeError> {
    r.align();
    let at = r.position();
    let header = FrameHeader::read(r, cfg.alf_enabled)?;
    let filter =
        match header.alf {
            Some(u) => Some(AlfFilter::from_unique(u).map_err(|_| {
                DecodeError::new(DecodeErrorKind::InvalidHeader("ALF taps do not sum to 256".into()), at)
            })?),
            None => None,
        };
    let reference = match (header.frame_type, reference) {
        (FrameType::I, _) => None,
        (FrameType::P, Some(rf)) => Some(rf),
        (FrameType::P, None) => return Err(DecodeError::range("frame_type", 1, at)),
    };
    let (w, h) = padded;
    let pic = PictureCtx::new(w, h, display, cfg.bit_depth, cfg.qp, header.frame_type, reference, cfg.search_range);
    let m = sizes.m_scu;
    let (cols, rows) = (w / m, h / m);
    let mut sao = SaoBlockGrid::new(w, h, cfg.sao_block_size, m);
    let mut dec = FrameDecoder {
        r,
        pic,
        sizes,
        frame_type: header.frame_type,
        pred: vec![0; m * m],
        out: vec![0; m * m],
        cells: Vec::new(),
    };
    let mut regions = Vec::new();
    for sy in 0..rows {
        for sx in 0..cols {
            let scu = sy * cols + sx;
            let tag = |e: DecodeError| e.in_scu(scu);
            let (x0, y0) = (sx * m, sy * m);
            dec.cells.clear();
            let quadtree = !sizes.bypass_quadtree() && dec.r.read_bit().map_err(tag)?;
            if quadtree {
                dec.node(x0, y0, m, sizes.m_ctu).map_err(tag)?;
            } else {
                let k = m / sizes.m_ctu;
                for (cx, cy) in z_scan_order(k, k) {
                    dec.node(x0 + cx * sizes.m_ctu, y0 + cy * sizes.m_ctu, sizes.m_ctu, sizes.m_mcu).map_err(tag)?;
                }
            }
            read_scu_sao(dec.r, &mut sao, cfg.sao_mode, cfg.bit_depth, sx, sy).map_err(tag)?;
            if filter.is_some() {
                let flags = AlfScuFlags::read(dec.r, dec.cells.len()).map_err(tag)?;
                regions.extend(flags.regions(&dec.cells));
            }
        }
    }
    dec.r.align();
    let recon = dec.pic.recon;
    let filtered = match cfg.sao_mode {
        SaoConfig::Off => recon,
        _ => apply_sao_frame(&recon, &sao).expect("resolved parameters"),
    };
    Ok(match filter {
        Some(f) => apply_alf_frame(&filtered, &f, &regions),
        None => filtered,
    })
}

/// Decodes a complete stream.
pub fn decode_stream(data: &[u8]) -> Result<DecodedSequence> {
    let mut r = BitReader::new(data);
    let header = SequenceHeader::read(&mut r)?;
    let cfg = header.config.clone();
    let sizes = derive_partition_sizes(&cfg).map_err(|e| match e {
        Error::InvalidConfig(msg) => Error::Decode(DecodeError::new(DecodeErrorKind::InvalidHeader(msg), 0)),
        other => other,
    })?;
    let display = (header.width, header.height);
    let padded = padded_size(&header);
    debug_assert_eq!(chroma_dim(padded.0), padded.0 / 2);
    // every super-block spends at least one bit, so a forged size cannot
    // force a large allocation from a short stream
    let scus = (padded.0 / sizes.m_scu * (padded.1 / sizes.m_scu)) as u64;
    if header.frame_count > 0 && r.remaining() < scus {
        return Err(DecodeError::new(DecodeErrorKind::Truncated, r.position()).in_frame(0).into());
    }
    let mut frames = Vec::with_capacity(header.frame_count.min(1 << 16));
    let mut reference: Option<RefPicture> = None;
    for index in 0..header.frame_count {
        let frame =
            decode_frame(&mut r, &cfg, sizes, display, padded, reference.as_ref()).map_err(|e| e.in_frame(index))?;
        reference = Some(RefPicture::new(&frame, cfg.search_range));
        frames.push(frame.cropped_to_display());
    }
    Ok(DecodedSequence { header, frames })
}
