//! Super-block partitioning: CU quadtrees, the Direct-CTU and SCU-to-CTU
//! modes, and their rate-distortion decisions.

pub(crate) mod context;
mod rdo;
pub(crate) mod syntax;

use std::cmp::Ordering;

use crate::config::EncoderConfig;
use crate::error::{Error, Result};
use crate::predict::{IntraMode, MotionVector};
use crate::xform::QuantLevels;

pub(crate) use rdo::CuEncoder;

/// Derived super-block, CTU and minimum CU sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionSizes {
    pub m_scu: usize,
    pub m_ctu: usize,
    pub m_mcu: usize,
}

impl PartitionSizes {
    /// No SCU-to-CTU trial (and no mode flag) when both depths agree.
    pub fn bypass_quadtree(&self) -> bool {
        self.m_ctu == self.m_mcu
    }
}

pub fn derive_partition_sizes(config: &EncoderConfig) -> Result<PartitionSizes> {
    let m_scu = config.max_scu_width;
    if !m_scu.is_power_of_two() || config.max_direct_partition_depth > config.max_partition_depth {
        return Err(Error::InvalidConfig(format!(
            "cannot derive partition sizes from SCU {m_scu}, depths {}/{}",
            config.max_direct_partition_depth, config.max_partition_depth
        )));
    }
    let log2 = m_scu.trailing_zeros();
    if config.max_partition_depth > log2 || (m_scu >> config.max_partition_depth) < 8 {
        return Err(Error::InvalidConfig("minimum coding unit would be smaller than 8x8".into()));
    }
    Ok(PartitionSizes {
        m_scu,
        m_ctu: m_scu >> config.max_direct_partition_depth,
        m_mcu: m_scu >> config.max_partition_depth,
    })
}

#[inline]
fn morton(x: usize, y: usize) -> u64 {
    let mut code = 0u64;
    for bit in 0..32 {
        code |= (((x >> bit) & 1) as u64) << (2 * bit);
        code |= (((y >> bit) & 1) as u64) << (2 * bit + 1);
    }
    code
}

/// Depth-first quadrant order (top-left, top-right, bottom-left,
/// bottom-right) over a `w`x`h` grid.
pub fn z_scan_order(w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).collect();
    cells.sort_by_key(|&(x, y)| morton(x, y));
    cells
}

/// Lagrange multiplier `0.85·2^((qp−12)/3)`, halved for intra slices. Costs
/// are accumulated on sample-domain SSE, so `bit_depth` above 8 scales the
/// multiplier by `4^(B−8)` to keep the trade-off independent of precision.
pub fn lambda_of_qp(qp: u8, slice_is_intra: bool) -> f64 {
    let base = 0.85 * 2f64.powf((f64::from(qp) - 12.0) / 3.0);
    if slice_is_intra {
        base / 2.0
    } else {
        base
    }
}

pub fn lambda_for(qp: u8, slice_is_intra: bool, bit_depth: u8) -> f64 {
    lambda_of_qp(qp, slice_is_intra) * f64::from(1u32 << (2 * (u32::from(bit_depth) - 8)))
}

/// Rate-distortion cost with exact bit counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdCost {
    pub distortion: u64,
    pub rate: u64,
    pub lambda: f64,
}

impl RdCost {
    pub fn new(distortion: u64, rate: u64, lambda: f64) -> Self {
        RdCost { distortion, rate, lambda }
    }

    pub fn zero(lambda: f64) -> Self {
        RdCost::new(0, 0, lambda)
    }

    #[inline]
    pub fn cost(&self) -> f64 {
        self.distortion as f64 + self.lambda * self.rate as f64
    }

    /// Orders by cost, then by rate.
    pub fn compare(&self, other: &RdCost) -> Ordering {
        self.cost().total_cmp(&other.cost()).then(self.rate.cmp(&other.rate))
    }

    pub fn is_better_than(&self, other: &RdCost) -> bool {
        self.compare(other) == Ordering::Less
    }

    pub fn with_bits(self, bits: u64) -> Self {
        RdCost { rate: self.rate + bits, ..self }
    }
}

impl std::ops::Add for RdCost {
    type Output = RdCost;
    fn add(self, o: RdCost) -> RdCost {
        RdCost::new(self.distortion + o.distortion, self.rate + o.rate, self.lambda)
    }
}

impl std::iter::Sum for RdCost {
    fn sum<I: Iterator<Item = RdCost>>(mut iter: I) -> RdCost {
        let first = iter.next().unwrap_or(RdCost::zero(0.0));
        iter.fold(first, |a, b| a + b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScuMode {
    DirectCtu,
    ScuToCtu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CuMode {
    Intra(IntraMode),
    Inter { mv: MotionVector, mvd: MotionVector },
    Skip { mv: MotionVector },
}

impl CuMode {
    pub fn is_intra(&self) -> bool {
        matches!(self, CuMode::Intra(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuLeaf {
    pub mode: CuMode,
    /// Levels of every transform unit: luma TUs in raster order, then Cb,
    /// then Cr. Empty for skip.
    pub residual: Vec<QuantLevels>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CuContent {
    Split(Box<[CuNode; 4]>),
    Leaf(CuLeaf),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuNode {
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub content: CuContent,
}

impl CuNode {
    pub fn leaves(&self) -> Vec<&CuNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a CuNode>) {
        match &self.content {
            CuContent::Split(children) => children.iter().for_each(|c| c.collect_leaves(out)),
            CuContent::Leaf(_) => out.push(self),
        }
    }

    pub fn leaf(&self) -> Option<&CuLeaf> {
        match &self.content {
            CuContent::Leaf(l) => Some(l),
            CuContent::Split(_) => None,
        }
    }
}

/// The coded CU forest of one super-block.
#[derive(Clone, Debug, PartialEq)]
pub struct ScuDecision {
    pub mode: ScuMode,
    /// Direct-CTU: one tree per CTU in Z order. SCU-to-CTU: a single tree.
    pub roots: Vec<CuNode>,
    /// Winning cost including the mode flag when one is sent.
    pub cost: RdCost,
    pub direct_cost: RdCost,
    pub quadtree_cost: Option<RdCost>,
}

impl ScuDecision {
    pub fn leaves(&self) -> Vec<&CuNode> {
        self.roots.iter().flat_map(|r| r.leaves()).collect()
    }

    /// ALF control cells: CU leaves, with anything below `m_ctu` merged into
    /// its enclosing `m_ctu` block. Z order.
    pub fn alf_cells(&self, m_ctu: usize) -> Vec<(usize, usize, usize)> {
        let mut cells = Vec::new();
        for leaf in self.leaves() {
            if leaf.size >= m_ctu {
                cells.push((leaf.x, leaf.y, leaf.size));
            } else {
                let cell = (leaf.x / m_ctu * m_ctu, leaf.y / m_ctu * m_ctu, m_ctu);
                if cells.last() != Some(&cell) {
                    cells.push(cell);
                }
            }
        }
        cells
    }
}
