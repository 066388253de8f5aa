//! CU and super-block syntax writers.
//!
//! A CU starts with a split flag whenever it is larger than the minimum leaf
//! size of its tree. A leaf in a P frame then sends `skip_flag`, and if not
//! skipped `intra_flag`; intra leaves send the mode as `ue`, inter leaves the
//! vector difference as two `se`. Non-skip leaves end with one coefficient
//! block per TU: luma TUs in raster order, then Cb, then Cr.

use super::{CuContent, CuLeaf, CuMode, CuNode, PartitionSizes, ScuDecision, ScuMode};
use crate::bitstream::{write_coefficients, BitCounter, BitWrite, FrameType};

pub(crate) fn write_leaf<W: BitWrite + ?Sized>(w: &mut W, leaf: &CuLeaf, frame_type: FrameType, split_flag: bool) {
    if split_flag {
        w.write_bit(false);
    }
    if frame_type == FrameType::P {
        let skip = matches!(leaf.mode, CuMode::Skip { .. });
        w.write_bit(skip);
        if skip {
            return;
        }
        w.write_bit(leaf.mode.is_intra());
    }
    match leaf.mode {
        CuMode::Intra(m) => w.write_ue(m.index()),
        CuMode::Inter { mvd, .. } => {
            w.write_se(mvd.dx);
            w.write_se(mvd.dy);
        }
        CuMode::Skip { .. } => unreachable!("skip CU in an intra frame"),
    }
    for levels in &leaf.residual {
        write_coefficients(w, levels);
    }
}

pub(crate) fn leaf_bits(leaf: &CuLeaf, frame_type: FrameType, split_flag: bool) -> u64 {
    let mut c = BitCounter::new();
    write_leaf(&mut c, leaf, frame_type, split_flag);
    c.bits_written()
}

pub(crate) fn write_node<W: BitWrite + ?Sized>(w: &mut W, node: &CuNode, min_leaf: usize, frame_type: FrameType) {
    let has_flag = node.size > min_leaf;
    match &node.content {
        CuContent::Split(children) => {
            w.write_bit(true);
            for c in children.iter() {
                write_node(w, c, min_leaf, frame_type);
            }
        }
        CuContent::Leaf(leaf) => write_leaf(w, leaf, frame_type, has_flag),
    }
}

/// Writes the SCU mode flag (unless bypassed) and the CU forest. Returns the
/// number of mode-flag bits written.
pub(crate) fn write_scu<W: BitWrite + ?Sized>(
    w: &mut W,
    decision: &ScuDecision,
    sizes: &PartitionSizes,
    frame_type: FrameType,
) -> u64 {
    let mut flag_bits = 0;
    if !sizes.bypass_quadtree() {
        w.write_bit(decision.mode == ScuMode::ScuToCtu);
        flag_bits = 1;
    }
    let min_leaf = match decision.mode {
        ScuMode::DirectCtu => sizes.m_mcu,
        ScuMode::ScuToCtu => sizes.m_ctu,
    };
    for root in &decision.roots {
        write_node(w, root, min_leaf, frame_type);
    }
    flag_bits
}
