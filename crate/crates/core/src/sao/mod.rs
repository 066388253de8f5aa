//! Sample adaptive offset: edge and band classification, per-block
//! parameters with left/up merging, and the fixed/adaptive block schemes.

mod encode;

pub use encode::{choose_sao_params, decide_frame_sao, estimate_offsets, OffsetEstimate, RegionStats, ScuSaoCost};

use crate::bitstream::{BitReader, BitWrite, DecodeError};
use crate::config::SaoConfig;
use crate::error::{Error, Result};
use crate::frame::{Frame, Plane, PlaneKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SaoMode {
    Off,
    New,
    MergeLeft,
    MergeUp,
}

impl SaoMode {
    pub fn code(self) -> u32 {
        match self {
            SaoMode::Off => 0,
            SaoMode::New => 1,
            SaoMode::MergeLeft => 2,
            SaoMode::MergeUp => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SaoType {
    /// Horizontal neighbours.
    Eo0,
    /// Vertical neighbours.
    Eo90,
    /// Top-right and bottom-left neighbours.
    Eo45,
    /// Top-left and bottom-right neighbours.
    Eo135,
    Bo,
}

impl SaoType {
    pub const ALL: [SaoType; 5] = [SaoType::Eo0, SaoType::Eo90, SaoType::Eo45, SaoType::Eo135, SaoType::Bo];
    pub const EDGE: [SaoType; 4] = [SaoType::Eo0, SaoType::Eo90, SaoType::Eo45, SaoType::Eo135];

    pub fn code(self) -> u32 {
        SaoType::ALL.iter().position(|&t| t == self).expect("listed") as u32
    }

    /// Offsets of the two neighbours compared by an edge class.
    pub fn neighbours(self) -> [(isize, isize); 2] {
        match self {
            SaoType::Eo0 => [(-1, 0), (1, 0)],
            SaoType::Eo90 => [(0, -1), (0, 1)],
            SaoType::Eo45 => [(1, -1), (-1, 1)],
            SaoType::Eo135 => [(-1, -1), (1, 1)],
            SaoType::Bo => panic!("band offset has no neighbours"),
        }
    }
}

/// Parameters of one SAO block in one plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SaoParams {
    pub mode: SaoMode,
    pub kind: SaoType,
    /// EO: categories 1..=4. BO: the four bands from `band_position`.
    pub offsets: [i32; 4],
    pub band_position: u8,
}

impl SaoParams {
    pub const OFF: SaoParams = SaoParams { mode: SaoMode::Off, kind: SaoType::Eo0, offsets: [0; 4], band_position: 0 };

    pub fn edge(kind: SaoType, offsets: [i32; 4]) -> Self {
        debug_assert!(kind != SaoType::Bo);
        SaoParams { mode: SaoMode::New, kind, offsets, band_position: 0 }
    }

    pub fn band(position: u8, offsets: [i32; 4]) -> Self {
        SaoParams { mode: SaoMode::New, kind: SaoType::Bo, offsets, band_position: position }
    }

    fn merge(mode: SaoMode) -> Self {
        SaoParams { mode, ..SaoParams::OFF }
    }

    pub fn is_merge(&self) -> bool {
        matches!(self.mode, SaoMode::MergeLeft | SaoMode::MergeUp)
    }
}

/// Largest offset magnitude: `(1 << (min(B, 10) − 5)) − 1`.
pub fn max_offset(bit_depth: u8) -> i32 {
    (1 << (bit_depth.min(10) - 5)) - 1
}

/// Last valid band position (four bands must fit in 32).
pub const MAX_BAND_POSITION: u8 = 28;

/// Edge category of `c` against its two neighbours.
#[inline]
pub fn eo_category(c: i32, n0: i32, n1: i32) -> u8 {
    if c < n0 && c < n1 {
        1
    } else if (c < n0 && c == n1) || (c == n0 && c < n1) {
        2
    } else if (c > n0 && c == n1) || (c == n0 && c > n1) {
        3
    } else if c > n0 && c > n1 {
        4
    } else {
        0
    }
}

#[inline]
pub fn bo_band(sample: u16, bit_depth: u8) -> usize {
    usize::from(sample >> (bit_depth - 5))
}

/// Signed offset for an edge category, or `None` for category 0.
#[inline]
fn eo_offset(offsets: &[i32; 4], cat: u8) -> i32 {
    if cat == 0 {
        0
    } else {
        offsets[usize::from(cat) - 1]
    }
}

/// SAO layout and parameters of a frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaoBlockGrid {
    /// Luma SAO block size.
    pub block_size: usize,
    /// Luma SCU size.
    pub scu_size: usize,
    /// Blocks per row and column.
    pub cols: usize,
    pub rows: usize,
    /// Signalled parameters per plane, raster order over blocks.
    pub signalled: [Vec<SaoParams>; 3],
    /// Parameters after merge resolution (only `Off`/`New`).
    pub resolved: [Vec<SaoParams>; 3],
    /// Per-SCU split flag (adaptive scheme; `true` elsewhere).
    pub split: Vec<bool>,
}

impl SaoBlockGrid {
    pub fn new(width: usize, height: usize, block_size: usize, scu_size: usize) -> Self {
        let cols = width / block_size;
        let rows = height / block_size;
        let scus = (width / scu_size) * (height / scu_size);
        SaoBlockGrid {
            block_size,
            scu_size,
            cols,
            rows,
            signalled: std::array::from_fn(|_| vec![SaoParams::OFF; cols * rows]),
            resolved: std::array::from_fn(|_| vec![SaoParams::OFF; cols * rows]),
            split: vec![true; scus],
        }
    }

    pub fn blocks_per_scu(&self) -> usize {
        self.scu_size / self.block_size
    }

    /// Block indices of SCU (`scu_x`, `scu_y`) in raster order.
    pub fn scu_blocks(&self, scu_x: usize, scu_y: usize) -> Vec<usize> {
        let k = self.blocks_per_scu();
        (0..k).flat_map(|j| (0..k).map(move |i| (scu_y * k + j) * self.cols + scu_x * k + i)).collect()
    }

    fn left(&self, b: usize) -> Option<usize> {
        (!b.is_multiple_of(self.cols)).then(|| b - 1)
    }

    fn up(&self, b: usize) -> Option<usize> {
        (b >= self.cols).then(|| b - self.cols)
    }

    /// Resolves a signalled parameter set against already-resolved
    /// neighbours.
    fn resolve(&self, plane: usize, b: usize, p: SaoParams) -> Option<SaoParams> {
        match p.mode {
            SaoMode::Off | SaoMode::New => Some(p),
            SaoMode::MergeLeft => self.left(b).map(|l| self.resolved[plane][l]),
            SaoMode::MergeUp => self.up(b).map(|u| self.resolved[plane][u]),
        }
    }
}

/// Applies resolved per-block parameters to one plane. `block` and `region`
/// are the SAO block and SCU sizes in this plane's samples; edge neighbours
/// outside the sample's SCU count as unavailable (category 0).
pub fn apply_sao(rec: &Plane, params: &[SaoParams], block: usize, region: usize) -> Result<Plane> {
    let mut out = rec.clone();
    let cols = rec.width() / block;
    let bit_depth = rec.bit_depth();
    let max = i32::from(rec.max_value());
    let w = rec.width();
    let src = rec.samples();
    for (b, p) in params.iter().enumerate() {
        let (bx, by) = ((b % cols) * block, (b / cols) * block);
        match p.mode {
            SaoMode::Off => continue,
            SaoMode::New => {}
            _ => return Err(Error::UnresolvedMerge(b)),
        }
        let (rx0, ry0) = (bx / region * region, by / region * region);
        let dst = out.samples_mut();
        if p.kind == SaoType::Bo {
            let pos = usize::from(p.band_position);
            for y in by..by + block {
                for x in bx..bx + block {
                    let s = src[y * w + x];
                    let band = bo_band(s, bit_depth);
                    if band >= pos && band < pos + 4 {
                        dst[y * w + x] = (i32::from(s) + p.offsets[band - pos]).clamp(0, max) as u16;
                    }
                }
            }
            continue;
        }
        let [(ax, ay), (cx, cy)] = p.kind.neighbours();
        for y in by..by + block {
            for x in bx..bx + block {
                let (xa, ya) = (x as isize + ax, y as isize + ay);
                let (xc, yc) = (x as isize + cx, y as isize + cy);
                let inside = |xx: isize, yy: isize| {
                    xx >= rx0 as isize
                        && yy >= ry0 as isize
                        && xx < (rx0 + region) as isize
                        && yy < (ry0 + region) as isize
                };
                if !inside(xa, ya) || !inside(xc, yc) {
                    continue;
                }
                let c = i32::from(src[y * w + x]);
                let n0 = i32::from(src[ya as usize * w + xa as usize]);
                let n1 = i32::from(src[yc as usize * w + xc as usize]);
                let off = eo_offset(&p.offsets, eo_category(c, n0, n1));
                if off != 0 {
                    dst[y * w + x] = (c + off).clamp(0, max) as u16;
                }
            }
        }
    }
    Ok(out)
}

/// Applies a frame's SAO grid to all three planes.
pub fn apply_sao_frame(rec: &Frame, grid: &SaoBlockGrid) -> Result<Frame> {
    let mut out = rec.clone();
    for k in PlaneKind::ALL {
        let s = k.shift();
        out.planes[k.index()] =
            apply_sao(rec.plane(k), &grid.resolved[k.index()], grid.block_size >> s, grid.scu_size >> s)?;
    }
    Ok(out)
}

pub fn write_sao_params<W: BitWrite + ?Sized>(w: &mut W, p: &SaoParams) {
    w.write_ue(p.mode.code());
    if p.mode != SaoMode::New {
        return;
    }
    w.write_ue(p.kind.code());
    if p.kind == SaoType::Bo {
        w.write_bits(u64::from(p.band_position), 5);
        for &o in &p.offsets {
            w.write_ue(o.unsigned_abs());
            if o != 0 {
                w.write_bit(o < 0);
            }
        }
    } else {
        for &o in &p.offsets {
            w.write_ue(o.unsigned_abs());
        }
    }
}

pub fn sao_params_bits(p: &SaoParams) -> u64 {
    let mut c = crate::bitstream::BitCounter::new();
    write_sao_params(&mut c, p);
    c.bits_written()
}

pub fn read_sao_params(r: &mut BitReader<'_>, bit_depth: u8) -> Result<SaoParams, DecodeError> {
    let at = r.position();
    let mode = match r.read_ue()? {
        0 => return Ok(SaoParams::OFF),
        1 => SaoMode::New,
        2 => return Ok(SaoParams::merge(SaoMode::MergeLeft)),
        3 => return Ok(SaoParams::merge(SaoMode::MergeUp)),
        v => return Err(DecodeError::range("sao_mode", v.into(), at)),
    };
    debug_assert_eq!(mode, SaoMode::New);
    let at = r.position();
    let code = r.read_ue()?;
    let kind = *SaoType::ALL.get(code as usize).ok_or_else(|| DecodeError::range("sao_type", code.into(), at))?;
    let max = max_offset(bit_depth) as u32;
    let mut offsets = [0i32; 4];
    if kind == SaoType::Bo {
        let at = r.position();
        let pos = r.read_bits(5)? as u8;
        if pos > MAX_BAND_POSITION {
            return Err(DecodeError::range("sao_band_position", pos.into(), at));
        }
        for o in &mut offsets {
            let at = r.position();
            let mag = r.read_ue()?;
            if mag > max {
                return Err(DecodeError::range("sao_offset", mag.into(), at));
            }
            *o = mag as i32;
            if mag != 0 && r.read_bit()? {
                *o = -*o;
            }
        }
        return Ok(SaoParams::band(pos, offsets));
    }
    for (i, o) in offsets.iter_mut().enumerate() {
        let at = r.position();
        let mag = r.read_ue()?;
        if mag > max {
            return Err(DecodeError::range("sao_offset", mag.into(), at));
        }
        // categories 1 and 2 add, 3 and 4 subtract
        *o = if i < 2 { mag as i32 } else { -(mag as i32) };
    }
    Ok(SaoParams::edge(kind, offsets))
}

/// Writes the SAO syntax of one SCU.
pub fn write_scu_sao<W: BitWrite + ?Sized>(
    w: &mut W,
    grid: &SaoBlockGrid,
    mode: SaoConfig,
    scu_x: usize,
    scu_y: usize,
) {
    let blocks = grid.scu_blocks(scu_x, scu_y);
    let scu = scu_y * (grid.cols / grid.blocks_per_scu()) + scu_x;
    let split = match mode {
        SaoConfig::Off => return,
        SaoConfig::FixedBlock => true,
        SaoConfig::AdaptiveBlock => {
            w.write_bit(grid.split[scu]);
            grid.split[scu]
        }
    };
    if split {
        for &b in &blocks {
            for plane in 0..3 {
                write_sao_params(w, &grid.signalled[plane][b]);
            }
        }
    } else {
        for plane in 0..3 {
            write_sao_params(w, &grid.signalled[plane][blocks[0]]);
        }
    }
}

/// Parses and resolves the SAO syntax of one SCU into `grid`.
pub fn read_scu_sao(
    r: &mut BitReader<'_>,
    grid: &mut SaoBlockGrid,
    mode: SaoConfig,
    bit_depth: u8,
    scu_x: usize,
    scu_y: usize,
) -> Result<(), DecodeError> {
    let blocks = grid.scu_blocks(scu_x, scu_y);
    let scu = scu_y * (grid.cols / grid.blocks_per_scu()) + scu_x;
    let split = match mode {
        SaoConfig::Off => return Ok(()),
        SaoConfig::FixedBlock => true,
        SaoConfig::AdaptiveBlock => r.read_bit()?,
    };
    grid.split[scu] = split;
    if split {
        for &b in &blocks {
            for plane in 0..3 {
                let at = r.position();
                let p = read_sao_params(r, bit_depth)?;
                let resolved = grid
                    .resolve(plane, b, p)
                    .ok_or_else(|| DecodeError::range("sao_merge", i64::from(p.mode.code()), at))?;
                grid.signalled[plane][b] = p;
                grid.resolved[plane][b] = resolved;
            }
        }
    } else {
        for plane in 0..3 {
            let at = r.position();
            let p = read_sao_params(r, bit_depth)?;
            if p.is_merge() {
                return Err(DecodeError::range("sao_mode", i64::from(p.mode.code()), at));
            }
            for &b in &blocks {
                grid.signalled[plane][b] = p;
                grid.resolved[plane][b] = p;
            }
        }
    }
    Ok(())
}
