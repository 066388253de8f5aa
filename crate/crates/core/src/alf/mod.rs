//! CU-level adaptive loop filter: a frame-wide Wiener filter switched on and
//! off per coding-unit cell, with an all-on shortcut per super-block.

use nalgebra::{DMatrix, DVector};

use crate::bitstream::{BitReader, BitWrite, DecodeError};
use crate::error::{Error, Result};
use crate::frame::{Frame, Plane, PlaneKind};
use crate::partition::RdCost;

/// Diamond taps as (dy, dx); tap `i` mirrors tap `12 − i`.
pub const TAPS: [(isize, isize); 13] =
    [(-2, 0), (-1, -1), (-1, 0), (-1, 1), (0, -2), (0, -1), (0, 0), (0, 1), (0, 2), (1, -1), (1, 0), (1, 1), (2, 0)];
pub const CENTER: usize = 6;
pub const UNIQUE: usize = 7;
const UNITY: i32 = 256;

/// Point-symmetric 13-tap filter with 8 fractional bits summing to 256.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlfFilter {
    coeffs: [i32; 13],
}

impl AlfFilter {
    pub fn identity() -> Self {
        let mut u = [0; UNIQUE];
        u[CENTER] = UNITY;
        Self::expand(u)
    }

    fn expand(u: [i32; UNIQUE]) -> Self {
        let mut coeffs = [0; 13];
        for i in 0..UNIQUE {
            coeffs[i] = u[i];
            coeffs[12 - i] = u[i];
        }
        AlfFilter { coeffs }
    }

    /// Builds a filter from its seven unique coefficients (outer taps first,
    /// centre last); they must sum to 256 over all 13 taps.
    pub fn from_unique(u: [i32; UNIQUE]) -> Result<Self> {
        let f = Self::expand(u);
        let sum: i32 = f.coeffs.iter().sum();
        if sum != UNITY {
            return Err(Error::InvalidConfig(format!("filter taps sum to {sum}, expected 256")));
        }
        Ok(f)
    }

    pub fn unique(&self) -> [i32; UNIQUE] {
        let mut u = [0; UNIQUE];
        u.copy_from_slice(&self.coeffs[..UNIQUE]);
        u
    }

    pub fn coefficients(&self) -> &[i32; 13] {
        &self.coeffs
    }

    #[inline]
    fn sample(&self, plane: &Plane, x: usize, y: usize) -> u16 {
        let (w, h) = (plane.width(), plane.height());
        let src = plane.samples();
        let interior = x >= 2 && y >= 2 && x + 2 < w && y + 2 < h;
        let mut acc = 0i64;
        for (&(dy, dx), &c) in TAPS.iter().zip(&self.coeffs) {
            let v = if interior {
                src[(y as isize + dy) as usize * w + (x as isize + dx) as usize]
            } else {
                plane.get_clamped(x as isize + dx, y as isize + dy)
            };
            acc += i64::from(c) * i64::from(v);
        }
        ((acc + 128) >> 8).clamp(0, i64::from(plane.max_value())) as u16
    }
}

impl Default for AlfFilter {
    fn default() -> Self {
        Self::identity()
    }
}

/// Least-squares filter mapping `rec` toward `orig`, trained on luma samples
/// whose whole support lies inside the display window. Falls back to the
/// identity when the regularised system cannot be solved.
pub fn derive_wiener_filter(orig: &Plane, rec: &Plane, display: (usize, usize)) -> AlfFilter {
    let (dw, dh) = display;
    if dw < 5 || dh < 5 {
        return AlfFilter::identity();
    }
    let mut auto = [[0i64; UNIQUE]; UNIQUE];
    let mut cross = [0i64; UNIQUE];
    let w = rec.width();
    let src = rec.samples();
    let mut feat = [0i64; UNIQUE];
    for y in 2..dh - 2 {
        for x in 2..dw - 2 {
            let at =
                |(dy, dx): (isize, isize)| i64::from(src[(y as isize + dy) as usize * w + (x as isize + dx) as usize]);
            for i in 0..CENTER {
                feat[i] = at(TAPS[i]) + at(TAPS[12 - i]);
            }
            feat[CENTER] = at(TAPS[CENTER]);
            let target = i64::from(orig.get(x, y));
            for i in 0..UNIQUE {
                cross[i] += feat[i] * target;
                for j in i..UNIQUE {
                    auto[i][j] += feat[i] * feat[j];
                }
            }
        }
    }
    let r = DMatrix::from_fn(UNIQUE, UNIQUE, |i, j| auto[i.min(j)][i.max(j)] as f64);
    let eps = 1e-6 * r.trace() / 13.0;
    let r = r + DMatrix::identity(UNIQUE, UNIQUE) * eps;
    let b = DVector::from_iterator(UNIQUE, cross.iter().map(|&v| v as f64));
    let Some(chol) = r.cholesky() else {
        return AlfFilter::identity();
    };
    let sol = chol.solve(&b);
    if sol.iter().any(|v| !v.is_finite()) {
        return AlfFilter::identity();
    }
    let mut u = [0i32; UNIQUE];
    for i in 0..CENTER {
        u[i] = ((sol[i] * f64::from(UNITY)).round() as i32).clamp(-UNITY, UNITY);
    }
    u[CENTER] = UNITY - 2 * u[..CENTER].iter().sum::<i32>();
    AlfFilter::expand(u)
}

/// Filters every sample of `plane`.
pub fn filter_plane(plane: &Plane, filter: &AlfFilter) -> Plane {
    let mut out = plane.clone();
    let w = plane.width();
    for y in 0..plane.height() {
        for x in 0..w {
            out.samples_mut()[y * w + x] = filter.sample(plane, x, y);
        }
    }
    out
}

/// Filters the square `regions` (x, y, size) of `plane`, copying the rest.
/// All taps read the unfiltered input.
pub fn apply_alf(plane: &Plane, filter: &AlfFilter, regions: &[(usize, usize, usize)]) -> Plane {
    let mut out = plane.clone();
    let w = plane.width();
    for &(rx, ry, n) in regions {
        for y in ry..(ry + n).min(plane.height()) {
            for x in rx..(rx + n).min(w) {
                out.samples_mut()[y * w + x] = filter.sample(plane, x, y);
            }
        }
    }
    out
}

/// Per-super-block ALF flags. `cu_flags` always holds one entry per control
/// cell, inferred when not signalled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlfScuFlags {
    pub super_block: bool,
    pub all_cu: bool,
    pub cu_flags: Vec<bool>,
}

impl AlfScuFlags {
    pub fn off(cells: usize) -> Self {
        AlfScuFlags { super_block: false, all_cu: false, cu_flags: vec![false; cells] }
    }

    /// Shortest signalling of the given per-cell choices.
    pub fn from_cells(flags: Vec<bool>) -> Self {
        if !flags.iter().any(|&f| f) {
            return Self::off(flags.len());
        }
        let all_cu = flags.iter().all(|&f| f);
        AlfScuFlags { super_block: true, all_cu, cu_flags: flags }
    }

    pub fn is_valid(&self) -> bool {
        (self.super_block || (!self.all_cu && self.cu_flags.iter().all(|&f| !f)))
            && (!self.all_cu || self.cu_flags.iter().all(|&f| f))
    }

    pub fn write<W: BitWrite + ?Sized>(&self, w: &mut W) {
        debug_assert!(self.is_valid());
        w.write_bit(self.super_block);
        if !self.super_block {
            return;
        }
        w.write_bit(self.all_cu);
        if !self.all_cu {
            for &f in &self.cu_flags {
                w.write_bit(f);
            }
        }
    }

    pub fn read(r: &mut BitReader<'_>, cells: usize) -> Result<Self, DecodeError> {
        if !r.read_bit()? {
            return Ok(Self::off(cells));
        }
        if r.read_bit()? {
            return Ok(AlfScuFlags { super_block: true, all_cu: true, cu_flags: vec![true; cells] });
        }
        let cu_flags = (0..cells).map(|_| r.read_bit()).collect::<Result<Vec<_>, _>>()?;
        Ok(AlfScuFlags { super_block: true, all_cu: false, cu_flags })
    }

    /// Bits spent with the all-on shortcut.
    pub fn improved_bits(&self) -> u64 {
        match (self.super_block, self.all_cu) {
            (false, _) => 1,
            (true, true) => 2,
            (true, false) => 2 + self.cu_flags.len() as u64,
        }
    }

    /// Bits the same flags would cost with a super-block flag followed by
    /// one flag per cell and no shortcut.
    pub fn plain_bits(&self) -> u64 {
        if self.super_block {
            1 + self.cu_flags.len() as u64
        } else {
            1
        }
    }

    /// Luma regions switched on.
    pub fn regions<'c>(
        &'c self,
        cells: &'c [(usize, usize, usize)],
    ) -> impl Iterator<Item = (usize, usize, usize)> + 'c {
        cells.iter().zip(&self.cu_flags).filter(|(_, &f)| f).map(|(&c, _)| c)
    }
}

/// Costs of the two flag branches of one super-block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlfBranchCosts {
    /// Per-cell minimum plus the flags needed to signal it.
    pub per_cell: RdCost,
    /// Super-block filter off.
    pub off: RdCost,
}

impl AlfBranchCosts {
    pub fn chosen(&self) -> RdCost {
        if self.per_cell.is_better_than(&self.off) {
            self.per_cell
        } else {
            self.off
        }
    }
}

fn cell_sse(orig: &Frame, cand: &Frame, (x, y, n): (usize, usize, usize)) -> u64 {
    let mut total = 0u64;
    for kind in PlaneKind::ALL {
        let s = kind.shift();
        let (dw, dh) = orig.display_size(kind);
        let (px, py, m) = (x >> s, y >> s, n >> s);
        let (o, c) = (orig.plane(kind), cand.plane(kind));
        for yy in py..(py + m).min(dh) {
            let (ro, rc) = (o.row(yy), c.row(yy));
            for xx in px..(px + m).min(dw) {
                let d = i64::from(ro[xx]) - i64::from(rc[xx]);
                total += (d * d) as u64;
            }
        }
    }
    total
}

/// Per-cell on/off choice for one super-block given the unfiltered and fully
/// filtered reconstructions. `cells` are luma (x, y, size) in coding order.
pub fn decide_cu_flags(
    orig: &Frame,
    rec: &Frame,
    filtered: &Frame,
    cells: &[(usize, usize, usize)],
    lambda: f64,
) -> (AlfScuFlags, AlfBranchCosts) {
    let mut on = Vec::with_capacity(cells.len());
    let (mut d_best, mut d_off) = (0u64, 0u64);
    for &cell in cells {
        let off = cell_sse(orig, rec, cell);
        let filt = cell_sse(orig, filtered, cell);
        on.push(filt < off);
        d_best += filt.min(off);
        d_off += off;
    }
    let flags = AlfScuFlags::from_cells(on);
    let per_cell_bits = if flags.all_cu { 2 } else { 2 + cells.len() as u64 };
    let costs =
        AlfBranchCosts { per_cell: RdCost::new(d_best, per_cell_bits, lambda), off: RdCost::new(d_off, 1, lambda) };
    // with no cell on the distortions tie and the off branch wins on rate
    if costs.per_cell.is_better_than(&costs.off) {
        (flags, costs)
    } else {
        (AlfScuFlags::off(cells.len()), costs)
    }
}

/// Applies the frame filter to the switched-on cells of every plane; chroma
/// reuses the luma cells at half resolution.
pub fn apply_alf_frame(rec: &Frame, filter: &AlfFilter, regions: &[(usize, usize, usize)]) -> Frame {
    let mut out = rec.clone();
    for kind in PlaneKind::ALL {
        let s = kind.shift();
        let scaled: Vec<_> = regions.iter().map(|&(x, y, n)| (x >> s, y >> s, n >> s)).collect();
        *out.plane_mut(kind) = apply_alf(rec.plane(kind), filter, &scaled);
    }
    out
}

/// Frame-level ALF outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct AlfDecision {
    /// `Some` when the frame filter flag is set.
    pub filter: Option<AlfFilter>,
    /// Flags per super-block in raster order; empty when the filter is off.
    pub scus: Vec<AlfScuFlags>,
    pub branch_costs: Vec<AlfBranchCosts>,
}

/// Derives the frame filter, decides every super-block and switches the
/// whole frame off when that is cheaper. `scu_cells` lists each
/// super-block's control cells. Returns the decision and the filtered frame.
pub fn decide_frame_alf(
    orig: &Frame,
    rec: &Frame,
    scu_cells: &[Vec<(usize, usize, usize)>],
    lambda: f64,
) -> (AlfDecision, Frame) {
    let filter = derive_wiener_filter(orig.luma(), rec.luma(), orig.display_size(PlaneKind::Luma));
    let mut filtered = rec.clone();
    for kind in PlaneKind::ALL {
        *filtered.plane_mut(kind) = filter_plane(rec.plane(kind), &filter);
    }
    let mut scus = Vec::with_capacity(scu_cells.len());
    let mut branch_costs = Vec::with_capacity(scu_cells.len());
    let header_bits: u64 =
        1 + filter.unique().iter().map(|&c| u64::from(crate::bitstream::bits::se_bits(c))).sum::<u64>();
    let mut on_cost = RdCost::new(0, header_bits, lambda);
    let mut off_cost = RdCost::new(0, 1, lambda);
    let mut regions = Vec::new();
    for cells in scu_cells {
        let (flags, costs) = decide_cu_flags(orig, rec, &filtered, cells, lambda);
        on_cost = on_cost + costs.chosen();
        off_cost = off_cost + RdCost::new(costs.off.distortion, 0, lambda);
        regions.extend(flags.regions(cells));
        scus.push(flags);
        branch_costs.push(costs);
    }
    if !on_cost.is_better_than(&off_cost) {
        return (AlfDecision { filter: None, scus: Vec::new(), branch_costs }, rec.clone());
    }
    let out = apply_alf_frame(rec, &filter, &regions);
    (AlfDecision { filter: Some(filter), scus, branch_costs }, out)
}
