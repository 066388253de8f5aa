//! Rate-distortion mode decision for CUs and super-blocks.

use super::context::{CellState, PictureCtx, Prediction};
use super::syntax::leaf_bits;
use super::{z_scan_order, CuContent, CuLeaf, CuMode, CuNode, PartitionSizes, RdCost, ScuDecision, ScuMode};
use crate::bitstream::FrameType;
use crate::frame::{Frame, PlaneKind};
use crate::predict::{IntraMode, SadTable};

/// Every candidate cost evaluated for one CU, kept when tracing is enabled.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct TraceEntry {
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub candidates: Vec<RdCost>,
    pub chosen: RdCost,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct ModeTrace {
    pub entries: Vec<TraceEntry>,
}

struct LeafResult {
    leaf: CuLeaf,
    cost: RdCost,
    recon: [Vec<u16>; 3],
}

/// Sum of squared differences between the `n`x`n` block at (`x`, `y`) of
/// `orig` and `recon`, restricted to the display window.
fn sse(orig: &crate::frame::Plane, recon: &[u16], x: usize, y: usize, n: usize, display: (usize, usize)) -> u64 {
    if x >= display.0 || y >= display.1 {
        return 0;
    }
    let w = n.min(display.0 - x);
    let h = n.min(display.1 - y);
    let mut total = 0u64;
    for r in 0..h {
        let o = &orig.row(y + r)[x..x + w];
        let c = &recon[r * n..r * n + w];
        total += o
            .iter()
            .zip(c)
            .map(|(&a, &b)| {
                let d = i64::from(a) - i64::from(b);
                (d * d) as u64
            })
            .sum::<u64>();
    }
    total
}

pub(crate) struct CuEncoder<'a, 'r> {
    orig: &'a Frame,
    pub pic: PictureCtx<'r>,
    sad: Option<SadTable>,
    lambda: f64,
    sizes: PartitionSizes,
    display: [(usize, usize); 3],
    pub trace: Option<ModeTrace>,
    orig_buf: Vec<u16>,
    pred_buf: Vec<u16>,
}

impl<'a, 'r> CuEncoder<'a, 'r> {
    /// `orig` must already be padded to the SCU grid.
    pub fn new(orig: &'a Frame, pic: PictureCtx<'r>, sizes: PartitionSizes, lambda: f64) -> Self {
        let sad = match (pic.frame_type, pic.reference) {
            (FrameType::P, Some(reference)) => Some(SadTable::build(orig.luma(), reference, pic.search_range as usize)),
            _ => None,
        };
        let display = PlaneKind::ALL.map(|k| orig.display_size(k));
        let n = sizes.m_scu * sizes.m_scu;
        CuEncoder { orig, pic, sad, lambda, sizes, display, trace: None, orig_buf: vec![0; n], pred_buf: vec![0; n] }
    }

    fn eval_leaf(&mut self, x: usize, y: usize, size: usize, split_flag: bool, mode: CuMode) -> LeafResult {
        let prediction = match mode {
            CuMode::Intra(m) => Prediction::Intra(m),
            CuMode::Inter { mv, .. } | CuMode::Skip { mv } => Prediction::Inter(mv),
        };
        let skip = matches!(mode, CuMode::Skip { .. });
        let mut residual = Vec::new();
        let mut recon: [Vec<u16>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut distortion = 0u64;
        for kind in PlaneKind::ALL {
            let s = kind.shift();
            let (px, py, n) = (x >> s, y >> s, size >> s);
            let mut pred = std::mem::take(&mut self.pred_buf);
            self.pic.predict(kind, px, py, n, prediction, &mut pred[..n * n]);
            let mut out = vec![0u16; n * n];
            if skip {
                out.copy_from_slice(&pred[..n * n]);
            } else {
                let mut orig = std::mem::take(&mut self.orig_buf);
                let plane = self.orig.plane(kind);
                for r in 0..n {
                    orig[r * n..(r + 1) * n].copy_from_slice(&plane.row(py + r)[px..px + n]);
                }
                self.pic.code_residual(&orig[..n * n], &pred[..n * n], n, &mut residual, &mut out);
                self.orig_buf = orig;
            }
            self.pred_buf = pred;
            distortion += sse(self.orig.plane(kind), &out, px, py, n, self.display[kind.index()]);
            recon[kind.index()] = out;
        }
        let leaf = CuLeaf { mode, residual };
        let rate = leaf_bits(&leaf, self.pic.frame_type, split_flag);
        LeafResult { leaf, cost: RdCost::new(distortion, rate, self.lambda), recon }
    }

    fn install_leaf(&mut self, x: usize, y: usize, size: usize, result: &LeafResult) {
        for kind in PlaneKind::ALL {
            let s = kind.shift();
            self.pic.write_block(kind, x >> s, y >> s, size >> s, &result.recon[kind.index()]);
        }
        let state = match result.leaf.mode {
            CuMode::Intra(_) => CellState::Intra,
            CuMode::Inter { mv, .. } | CuMode::Skip { mv } => CellState::Inter(mv),
        };
        self.pic.grid.fill(x, y, size, state);
    }

    /// Chooses between coding the CU as one leaf (each eligible mode) and
    /// splitting it, leaving the winner's reconstruction in the picture.
    pub fn encode_cu(&mut self, x: usize, y: usize, size: usize, min_leaf: usize) -> (CuNode, RdCost) {
        debug_assert!(size >= min_leaf);
        let split_flag = size > min_leaf;
        let mut candidates = Vec::new();
        if self.pic.frame_type == FrameType::P {
            let pmv = self.pic.mv_predictor(x, y, size);
            candidates.push(CuMode::Skip { mv: pmv });
            let (mv, _) = self.sad.as_ref().expect("P frames carry a SAD table").best(x, y, size);
            candidates.push(CuMode::Inter { mv, mvd: mv - pmv });
        }
        for m in IntraMode::ALL {
            if PictureCtx::intra_eligible(x, y, m) {
                candidates.push(CuMode::Intra(m));
            }
        }
        let mut costs = Vec::new();
        let mut best: Option<LeafResult> = None;
        for mode in candidates {
            let r = self.eval_leaf(x, y, size, split_flag, mode);
            costs.push(r.cost);
            if best.as_ref().is_none_or(|b| r.cost.is_better_than(&b.cost)) {
                best = Some(r);
            }
        }
        let best = best.expect("DC is always eligible");

        if split_flag {
            let half = size / 2;
            let mut children = Vec::with_capacity(4);
            let mut split_cost = RdCost::new(0, 1, self.lambda);
            for (qx, qy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let (node, cost) = self.encode_cu(x + qx * half, y + qy * half, half, min_leaf);
                split_cost = split_cost + cost;
                children.push(node);
            }
            costs.push(split_cost);
            if split_cost.is_better_than(&best.cost) {
                self.record(x, y, size, costs, split_cost);
                let children: [CuNode; 4] = children.try_into().expect("four quadrants");
                return (CuNode { x, y, size, content: CuContent::Split(Box::new(children)) }, split_cost);
            }
        }
        self.install_leaf(x, y, size, &best);
        self.record(x, y, size, costs, best.cost);
        (CuNode { x, y, size, content: CuContent::Leaf(best.leaf) }, best.cost)
    }

    fn record(&mut self, x: usize, y: usize, size: usize, candidates: Vec<RdCost>, chosen: RdCost) {
        if let Some(trace) = &mut self.trace {
            trace.entries.push(TraceEntry { x, y, size, candidates, chosen });
        }
    }

    fn flag_bits(&self) -> u64 {
        u64::from(!self.sizes.bypass_quadtree())
    }

    /// Direct-CTU: CTUs in Z order, each coded down to the minimum CU.
    pub fn encode_scu_direct(&mut self, sx: usize, sy: usize) -> (Vec<CuNode>, RdCost) {
        let PartitionSizes { m_scu, m_ctu, m_mcu } = self.sizes;
        let k = m_scu / m_ctu;
        let mut roots = Vec::with_capacity(k * k);
        let mut total = RdCost::new(0, self.flag_bits(), self.lambda);
        for (cx, cy) in z_scan_order(k, k) {
            let (node, cost) = self.encode_cu(sx + cx * m_ctu, sy + cy * m_ctu, m_ctu, m_mcu);
            total = total + cost;
            roots.push(node);
        }
        (roots, total)
    }

    /// SCU-to-CTU: one quadtree from the SCU whose smallest leaf is a CTU.
    pub fn encode_scu_quadtree(&mut self, sx: usize, sy: usize) -> (CuNode, RdCost) {
        let (node, cost) = self.encode_cu(sx, sy, self.sizes.m_scu, self.sizes.m_ctu);
        (node, cost.with_bits(self.flag_bits()))
    }

    /// Runs both super-block modes from the same starting state and keeps
    /// the cheaper one in the picture.
    pub fn select_scu_mode(&mut self, sx: usize, sy: usize) -> ScuDecision {
        let m_scu = self.sizes.m_scu;
        if self.sizes.bypass_quadtree() {
            let (roots, cost) = self.encode_scu_direct(sx, sy);
            return ScuDecision { mode: ScuMode::DirectCtu, roots, cost, direct_cost: cost, quadtree_cost: None };
        }
        let start = self.pic.snapshot(sx, sy, m_scu);
        let (direct_roots, direct_cost) = self.encode_scu_direct(sx, sy);
        let direct_state = self.pic.snapshot(sx, sy, m_scu);
        self.pic.restore(&start);
        let (quad_root, quad_cost) = self.encode_scu_quadtree(sx, sy);
        if quad_cost.is_better_than(&direct_cost) {
            ScuDecision {
                mode: ScuMode::ScuToCtu,
                roots: vec![quad_root],
                cost: quad_cost,
                direct_cost,
                quadtree_cost: Some(quad_cost),
            }
        } else {
            self.pic.restore(&direct_state);
            ScuDecision {
                mode: ScuMode::DirectCtu,
                roots: direct_roots,
                cost: direct_cost,
                direct_cost,
                quadtree_cost: Some(quad_cost),
            }
        }
    }

    pub fn into_picture(self) -> PictureCtx<'r> {
        self.pic
    }
}
