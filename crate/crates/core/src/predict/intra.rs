use crate::error::{Error, Result};
use crate::frame::{Block, Plane};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntraMode {
    Dc,
    Horizontal,
    Vertical,
}

impl IntraMode {
    pub const ALL: [IntraMode; 3] = [IntraMode::Dc, IntraMode::Horizontal, IntraMode::Vertical];

    /// Index used in the stream.
    pub fn index(self) -> u32 {
        match self {
            IntraMode::Dc => 0,
            IntraMode::Horizontal => 1,
            IntraMode::Vertical => 2,
        }
    }

    pub fn from_index(i: u32) -> Option<Self> {
        IntraMode::ALL.get(i as usize).copied()
    }

    fn name(self) -> &'static str {
        match self {
            IntraMode::Dc => "DC",
            IntraMode::Horizontal => "HORIZONTAL",
            IntraMode::Vertical => "VERTICAL",
        }
    }
}

/// Reconstructed samples bordering a block: the row above and the column to
/// the left, each `None` when unavailable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Neighbors {
    pub top: Option<Vec<u16>>,
    pub left: Option<Vec<u16>>,
}

impl Neighbors {
    /// Neighbours of the `n`x`n` block at (`x`, `y`); a side is available
    /// when it lies inside the plane.
    pub fn gather(plane: &Plane, x: usize, y: usize, n: usize) -> Self {
        let top = (y > 0).then(|| plane.row(y - 1)[x..x + n].to_vec());
        let left = (x > 0).then(|| (y..y + n).map(|r| plane.get(x - 1, r)).collect());
        Neighbors { top, left }
    }

    pub fn is_eligible(&self, mode: IntraMode) -> bool {
        match mode {
            IntraMode::Dc => true,
            IntraMode::Horizontal => self.left.is_some(),
            IntraMode::Vertical => self.top.is_some(),
        }
    }
}

pub(crate) fn dc_value(top: Option<&[u16]>, left: Option<&[u16]>, bit_depth: u8) -> u16 {
    let mut sum = 0u64;
    let mut count = 0u64;
    for side in [top, left].into_iter().flatten() {
        sum += side.iter().map(|&v| u64::from(v)).sum::<u64>();
        count += side.len() as u64;
    }
    (sum + count / 2).checked_div(count).map_or(1 << (bit_depth - 1), |v| v as u16)
}

/// Fills `out` (row-major `n`x`n`) with the prediction. Returns `false` when
/// the mode needs a missing side.
pub(crate) fn predict_into(
    mode: IntraMode,
    top: Option<&[u16]>,
    left: Option<&[u16]>,
    n: usize,
    bit_depth: u8,
    out: &mut [u16],
) -> bool {
    match mode {
        IntraMode::Dc => out[..n * n].fill(dc_value(top, left, bit_depth)),
        IntraMode::Horizontal => {
            let Some(left) = left else { return false };
            for (row, &v) in out.chunks_exact_mut(n).zip(left) {
                row.fill(v);
            }
        }
        IntraMode::Vertical => {
            let Some(top) = top else { return false };
            for row in out[..n * n].chunks_exact_mut(n) {
                row.copy_from_slice(&top[..n]);
            }
        }
    }
    true
}

pub fn intra_predict(mode: IntraMode, neighbors: &Neighbors, n: usize, bit_depth: u8) -> Result<Block> {
    let mut data = vec![0; n * n];
    if !predict_into(mode, neighbors.top.as_deref(), neighbors.left.as_deref(), n, bit_depth, &mut data) {
        return Err(Error::IneligibleIntraMode(mode.name()));
    }
    Ok(Block::new(n, n, data))
}
