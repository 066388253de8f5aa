//! Per-picture coding state shared by the encoder and the decoder: the
//! working reconstruction, the motion/mode grid, and the leaf
//! reconstruction path.

use crate::bitstream::FrameType;
use crate::frame::{Frame, PlaneKind};
use crate::predict::{predict_into, predict_mv, IntraMode, MotionVector, RefPicture};
use crate::xform::{
    core_matrix, dequantize_value, derive_quant_params, forward_kernel, inverse_kernel, quantize_value, QuantLevels,
    QuantParams,
};

pub(crate) const CELL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CellState {
    Uncoded,
    Intra,
    Inter(MotionVector),
}

/// Coding state of every 8x8 luma cell.
#[derive(Clone, Debug)]
pub(crate) struct CellGrid {
    cols: usize,
    rows: usize,
    cells: Vec<CellState>,
}

impl CellGrid {
    pub fn new(width: usize, height: usize) -> Self {
        let (cols, rows) = (width / CELL, height / CELL);
        CellGrid { cols, rows, cells: vec![CellState::Uncoded; cols * rows] }
    }

    /// State at luma position (`x`, `y`); `Uncoded` outside the picture.
    pub fn at(&self, x: isize, y: isize) -> CellState {
        if x < 0 || y < 0 {
            return CellState::Uncoded;
        }
        let (cx, cy) = (x as usize / CELL, y as usize / CELL);
        if cx >= self.cols || cy >= self.rows {
            return CellState::Uncoded;
        }
        self.cells[cy * self.cols + cx]
    }

    pub fn fill(&mut self, x: usize, y: usize, size: usize, state: CellState) {
        let (c0, r0, k) = (x / CELL, y / CELL, size / CELL);
        for r in r0..r0 + k {
            self.cells[r * self.cols + c0..r * self.cols + c0 + k].fill(state);
        }
    }

    pub fn save(&self, x: usize, y: usize, size: usize) -> Vec<CellState> {
        let (c0, r0, k) = (x / CELL, y / CELL, size / CELL);
        (r0..r0 + k).flat_map(|r| self.cells[r * self.cols + c0..r * self.cols + c0 + k].iter().copied()).collect()
    }

    pub fn restore(&mut self, x: usize, y: usize, size: usize, saved: &[CellState]) {
        let (c0, r0, k) = (x / CELL, y / CELL, size / CELL);
        for (i, r) in (r0..r0 + k).enumerate() {
            self.cells[r * self.cols + c0..r * self.cols + c0 + k].copy_from_slice(&saved[i * k..(i + 1) * k]);
        }
    }
}

/// How a leaf forms its prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Prediction {
    Intra(IntraMode),
    Inter(MotionVector),
}

/// Transform size and TUs per side for an `n`x`n` plane block.
#[inline]
pub(crate) fn tu_layout(n: usize) -> (usize, usize) {
    let t = n.min(32);
    (t, n / t)
}

/// Number of TUs a leaf of luma size `size` carries over all planes.
#[cfg(test)]
pub(crate) fn tu_count(size: usize) -> usize {
    let (_, ky) = tu_layout(size);
    let (_, kc) = tu_layout(size / 2);
    ky * ky + 2 * kc * kc
}

/// Saved reconstruction and grid of a square luma window.
pub(crate) struct Snapshot {
    x: usize,
    y: usize,
    size: usize,
    planes: [Vec<u16>; 3],
    cells: Vec<CellState>,
}

/// Scratch buffers for one transform unit.
struct TuScratch {
    src: Vec<i32>,
    coeff: Vec<i32>,
    tmp: Vec<i32>,
    res: Vec<i32>,
}

pub(crate) struct PictureCtx<'r> {
    pub recon: Frame,
    pub grid: CellGrid,
    pub reference: Option<&'r RefPicture>,
    pub frame_type: FrameType,
    pub bit_depth: u8,
    pub search_range: i32,
    quant: [QuantParams; 4],
    scratch: TuScratch,
}

fn size_index(n: usize) -> usize {
    n.trailing_zeros() as usize - 2
}

impl<'r> PictureCtx<'r> {
    /// `width`/`height` are the padded luma dimensions.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        width: usize,
        height: usize,
        display: (usize, usize),
        bit_depth: u8,
        qp: u8,
        frame_type: FrameType,
        reference: Option<&'r RefPicture>,
        search_range: usize,
    ) -> Self {
        let mut recon = Frame::new(width, height, bit_depth);
        recon.display_width = display.0;
        recon.display_height = display.1;
        let quant = [4, 8, 16, 32]
            .map(|n| derive_quant_params(i32::from(qp), frame_type.is_intra(), n, bit_depth).expect("validated qp"));
        PictureCtx {
            recon,
            grid: CellGrid::new(width, height),
            reference,
            frame_type,
            bit_depth,
            search_range: search_range as i32,
            quant,
            scratch: TuScratch { src: vec![0; 1024], coeff: vec![0; 1024], tmp: vec![0; 1024], res: vec![0; 1024] },
        }
    }

    pub fn max_value(&self) -> i32 {
        (1 << self.bit_depth) - 1
    }

    /// Median predictor from the left, top and top-right cells of a CU.
    pub fn mv_predictor(&self, x: usize, y: usize, size: usize) -> MotionVector {
        let (x, y, s) = (x as isize, y as isize, size as isize);
        let pick = |st: CellState| match st {
            CellState::Inter(mv) => Some(mv),
            _ => None,
        };
        predict_mv([pick(self.grid.at(x - 1, y)), pick(self.grid.at(x, y - 1)), pick(self.grid.at(x + s, y - 1))])
    }

    /// Intra modes usable for a CU at (`x`, `y`).
    pub fn intra_eligible(x: usize, y: usize, mode: IntraMode) -> bool {
        match mode {
            IntraMode::Dc => true,
            IntraMode::Horizontal => x > 0,
            IntraMode::Vertical => y > 0,
        }
    }

    /// Prediction of the `n`x`n` block of `kind` at plane position (`x`, `y`).
    pub fn predict(&self, kind: PlaneKind, x: usize, y: usize, n: usize, pred: Prediction, out: &mut [u16]) {
        match pred {
            Prediction::Intra(mode) => {
                let plane = self.recon.plane(kind);
                let top = (y > 0).then(|| &plane.row(y - 1)[x..x + n]);
                let mut left_buf = [0u16; 1024];
                let left = (x > 0).then(|| {
                    for (i, v) in left_buf[..n].iter_mut().enumerate() {
                        *v = plane.get(x - 1, y + i);
                    }
                    &left_buf[..n]
                });
                let ok = predict_into(mode, top, left, n, self.bit_depth, out);
                debug_assert!(ok, "ineligible intra mode reached prediction");
            }
            Prediction::Inter(mv) => {
                let reference = self.reference.expect("inter prediction needs a reference picture");
                reference.fetch(kind, x, y, mv.for_plane(kind), n, out);
            }
        }
    }

    /// Adds the decoded residual of `levels` (one entry per TU, raster order)
    /// to `pred`, writing clipped samples to `out`.
    pub fn reconstruct(&mut self, pred: &[u16], n: usize, levels: &[QuantLevels], out: &mut [u16]) {
        let (t, k) = tu_layout(n);
        let max = self.max_value();
        let q = &self.quant[size_index(t)];
        let m = core_matrix(t).expect("supported size");
        let (g, shift) = (q.g(), q.dequant_shift());
        for (i, lv) in levels.iter().enumerate() {
            let (tx, ty) = ((i % k) * t, (i / k) * t);
            let zero = lv.is_zero();
            if !zero {
                let s = &mut self.scratch;
                for (c, &l) in s.coeff[..t * t].iter_mut().zip(&lv.levels) {
                    *c = dequantize_value(l, g, shift);
                }
                inverse_kernel(m, self.bit_depth, &s.coeff[..t * t], &mut s.res[..t * t], &mut s.tmp[..t * t]);
            }
            for r in 0..t {
                let off = (ty + r) * n + tx;
                let (p, o) = (&pred[off..off + t], &mut out[off..off + t]);
                if zero {
                    o.copy_from_slice(p);
                } else {
                    let res = &self.scratch.res[r * t..(r + 1) * t];
                    for ((o, &p), &d) in o.iter_mut().zip(p).zip(res) {
                        *o = (i32::from(p) + d).clamp(0, max) as u16;
                    }
                }
            }
        }
    }

    /// Transforms and quantizes `orig − pred` for every TU of an `n`x`n`
    /// block, appending the levels and writing the reconstruction.
    pub fn code_residual(
        &mut self,
        orig: &[u16],
        pred: &[u16],
        n: usize,
        levels: &mut Vec<QuantLevels>,
        out: &mut [u16],
    ) {
        let (t, k) = tu_layout(n);
        let idx = size_index(t);
        let m = core_matrix(t).expect("supported size");
        let start = levels.len();
        for ty in 0..k {
            for tx in 0..k {
                let s = &mut self.scratch;
                for r in 0..t {
                    let off = (ty * t + r) * n + tx * t;
                    for (d, (&o, &p)) in
                        s.src[r * t..(r + 1) * t].iter_mut().zip(orig[off..off + t].iter().zip(&pred[off..off + t]))
                    {
                        *d = i32::from(o) - i32::from(p);
                    }
                }
                forward_kernel(m, self.bit_depth, &s.src[..t * t], &mut s.coeff[..t * t], &mut s.tmp[..t * t]);
                let q = &self.quant[idx];
                let (f, offset) = (i64::from(q.f()), q.round_offset());
                let lv: Vec<i32> = s.coeff[..t * t].iter().map(|&c| quantize_value(c, f, offset, q.iq_bits)).collect();
                levels.push(QuantLevels { n: t, levels: lv });
            }
        }
        let coded: Vec<QuantLevels> = levels[start..].to_vec();
        self.reconstruct(pred, n, &coded, out);
    }

    pub fn write_block(&mut self, kind: PlaneKind, x: usize, y: usize, n: usize, data: &[u16]) {
        let plane = self.recon.plane_mut(kind);
        let w = plane.width();
        let samples = plane.samples_mut();
        for (r, src) in data[..n * n].chunks_exact(n).enumerate() {
            samples[(y + r) * w + x..(y + r) * w + x + n].copy_from_slice(src);
        }
    }

    pub fn snapshot(&self, x: usize, y: usize, size: usize) -> Snapshot {
        let planes = PlaneKind::ALL.map(|k| {
            let s = k.shift();
            let (px, py, n) = (x >> s, y >> s, size >> s);
            let p = self.recon.plane(k);
            (py..py + n).flat_map(|r| p.row(r)[px..px + n].iter().copied()).collect()
        });
        Snapshot { x, y, size, planes, cells: self.grid.save(x, y, size) }
    }

    pub fn restore(&mut self, snap: &Snapshot) {
        for k in PlaneKind::ALL {
            let s = k.shift();
            self.write_block(k, snap.x >> s, snap.y >> s, snap.size >> s, &snap.planes[k.index()]);
        }
        self.grid.restore(snap.x, snap.y, snap.size, &snap.cells);
    }
}
