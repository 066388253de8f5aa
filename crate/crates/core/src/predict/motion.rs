use crate::error::{Error, Result};
use crate::frame::{Block, Frame, Plane, PlaneKind};

/// Full-pel displacement from the current block to its reference block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

    pub fn new(dx: i32, dy: i32) -> Self {
        MotionVector { dx, dy }
    }

    /// Chroma displacement: each component halved, rounding toward zero.
    pub fn chroma(self) -> Self {
        MotionVector { dx: self.dx / 2, dy: self.dy / 2 }
    }

    pub fn for_plane(self, kind: PlaneKind) -> Self {
        match kind {
            PlaneKind::Luma => self,
            _ => self.chroma(),
        }
    }

    pub fn within(self, range: i32) -> bool {
        self.dx.abs() <= range && self.dy.abs() <= range
    }

    fn tie_key(self) -> (i32, i32, i32) {
        (self.dx.abs() + self.dy.abs(), self.dy, self.dx)
    }
}

impl std::ops::Sub for MotionVector {
    type Output = MotionVector;
    fn sub(self, o: MotionVector) -> MotionVector {
        MotionVector::new(self.dx - o.dx, self.dy - o.dy)
    }
}

impl std::ops::Add for MotionVector {
    type Output = MotionVector;
    fn add(self, o: MotionVector) -> MotionVector {
        MotionVector::new(self.dx + o.dx, self.dy + o.dy)
    }
}

/// Every vector of a `±range` window in tie-break order: smaller
/// `|dx|+|dy|`, then smaller `dy`, then smaller `dx`.
pub fn search_order(range: i32) -> Vec<MotionVector> {
    let mut v: Vec<MotionVector> =
        (-range..=range).flat_map(|dy| (-range..=range).map(move |dx| MotionVector::new(dx, dy))).collect();
    v.sort_by_key(|mv| mv.tie_key());
    v
}

fn sad(orig: &Block, reference: &Plane, x: usize, y: usize) -> u64 {
    let mut total = 0u64;
    for row in 0..orig.height {
        let o = &orig.data[row * orig.width..(row + 1) * orig.width];
        let r = &reference.row(y + row)[x..x + orig.width];
        total += o.iter().zip(r).map(|(&a, &b)| u64::from(a.abs_diff(b))).sum::<u64>();
    }
    total
}

/// Exhaustive block matching. `origin` is the block position in `reference`
/// coordinates; the window is clipped so every candidate lies inside the
/// plane.
pub fn motion_search(orig: &Block, reference: &Plane, origin: (usize, usize), range: usize) -> (MotionVector, u64) {
    let (ox, oy) = (origin.0 as i64, origin.1 as i64);
    let r = range as i64;
    let max_x = reference.width() as i64 - orig.width as i64;
    let max_y = reference.height() as i64 - orig.height as i64;
    let mut best: Option<(u64, (i32, i32, i32), MotionVector)> = None;
    for dy in -r..=r {
        for dx in -r..=r {
            let (x, y) = (ox + dx, oy + dy);
            if x < 0 || y < 0 || x > max_x || y > max_y {
                continue;
            }
            let mv = MotionVector::new(dx as i32, dy as i32);
            let cost = sad(orig, reference, x as usize, y as usize);
            let key = (cost, mv.tie_key());
            if best.is_none_or(|(c, k, _)| key < (c, k)) {
                best = Some((cost, mv.tie_key(), mv));
            }
        }
    }
    let (cost, _, mv) = best.expect("the zero vector is always inside the plane");
    (mv, cost)
}

/// Copies the `w`x`h` block displaced by `mv` from `origin`.
pub fn motion_compensate(
    reference: &Plane,
    origin: (usize, usize),
    mv: MotionVector,
    w: usize,
    h: usize,
) -> Result<Block> {
    let x = origin.0 as i64 + i64::from(mv.dx);
    let y = origin.1 as i64 + i64::from(mv.dy);
    if x < 0 || y < 0 {
        return Err(Error::BlockOutOfBounds {
            x: x.max(0) as usize,
            y: y.max(0) as usize,
            w,
            h,
            width: reference.width(),
            height: reference.height(),
        });
    }
    reference.read_block(x as usize, y as usize, w, h)
}

/// Component-wise median of the available neighbour vectors (lower median
/// for two), or zero when none is available.
pub fn predict_mv(neighbors: [Option<MotionVector>; 3]) -> MotionVector {
    let mut xs = [0i32; 3];
    let mut ys = [0i32; 3];
    let mut k = 0;
    for mv in neighbors.into_iter().flatten() {
        xs[k] = mv.dx;
        ys[k] = mv.dy;
        k += 1;
    }
    if k == 0 {
        return MotionVector::ZERO;
    }
    xs[..k].sort_unstable();
    ys[..k].sort_unstable();
    MotionVector::new(xs[(k - 1) / 2], ys[(k - 1) / 2])
}

/// Reconstructed frame held for inter prediction, with every plane extended
/// by edge replication so any vector within the search range stays inside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefPicture {
    planes: [Plane; 3],
    margins: [usize; 3],
}

impl RefPicture {
    pub fn new(frame: &Frame, search_range: usize) -> Self {
        let margins = [search_range, search_range.div_ceil(2), search_range.div_ceil(2)];
        let planes = PlaneKind::ALL.map(|k| frame.plane(k).with_margin(margins[k.index()]));
        RefPicture { planes, margins }
    }

    pub fn plane(&self, kind: PlaneKind) -> &Plane {
        &self.planes[kind.index()]
    }

    pub fn margin(&self, kind: PlaneKind) -> usize {
        self.margins[kind.index()]
    }

    /// Copies the displaced `n`x`n` block of `kind` at unpadded position
    /// (`x`, `y`) into `out`. `mv` must already be scaled for the plane.
    pub(crate) fn fetch(&self, kind: PlaneKind, x: usize, y: usize, mv: MotionVector, n: usize, out: &mut [u16]) {
        let m = self.margin(kind) as i64;
        let p = self.plane(kind);
        let sx = (x as i64 + m + i64::from(mv.dx)) as usize;
        let sy = (y as i64 + m + i64::from(mv.dy)) as usize;
        for (row, dst) in out[..n * n].chunks_exact_mut(n).enumerate() {
            dst.copy_from_slice(&p.row(sy + row)[sx..sx + n]);
        }
    }
}

const CELL: usize = 8;

/// SADs of every 8x8 cell of a frame for every vector in the search window,
/// so the SAD of any cell-aligned block at any vector is a sum of table
/// entries. Produces the same vectors as [`motion_search`].
pub struct SadTable {
    cols: usize,
    rows: usize,
    order: Vec<MotionVector>,
    /// `sads[m * cells + cell]` for vector `order[m]`.
    sads: Vec<u32>,
}

impl SadTable {
    pub fn build(orig: &Plane, reference: &RefPicture, range: usize) -> Self {
        let cols = orig.width() / CELL;
        let rows = orig.height() / CELL;
        let cells = cols * rows;
        let order = search_order(range as i32);
        let rp = reference.plane(PlaneKind::Luma);
        let m = reference.margin(PlaneKind::Luma) as i64;
        let mut sads = vec![0u32; order.len() * cells];
        for (mi, mv) in order.iter().enumerate() {
            let table = &mut sads[mi * cells..(mi + 1) * cells];
            for y in 0..rows * CELL {
                let o = orig.row(y);
                let ry = (y as i64 + m + i64::from(mv.dy)) as usize;
                let rx = (m + i64::from(mv.dx)) as usize;
                let r = &rp.row(ry)[rx..rx + cols * CELL];
                let trow = &mut table[(y / CELL) * cols..(y / CELL + 1) * cols];
                for (c, t) in trow.iter_mut().enumerate() {
                    let a = &o[c * CELL..(c + 1) * CELL];
                    let b = &r[c * CELL..(c + 1) * CELL];
                    *t += a.iter().zip(b).map(|(&p, &q)| u32::from(p.abs_diff(q))).sum::<u32>();
                }
            }
        }
        SadTable { cols, rows, order, sads }
    }

    /// Best vector for the cell-aligned `n`x`n` block at (`x`, `y`).
    pub fn best(&self, x: usize, y: usize, n: usize) -> (MotionVector, u64) {
        debug_assert!(x.is_multiple_of(CELL) && y.is_multiple_of(CELL) && n.is_multiple_of(CELL));
        let cells = self.cols * self.rows;
        let (c0, r0, k) = (x / CELL, y / CELL, n / CELL);
        debug_assert!(c0 + k <= self.cols && r0 + k <= self.rows);
        let mut best = (u64::MAX, MotionVector::ZERO);
        for (mi, &mv) in self.order.iter().enumerate() {
            let table = &self.sads[mi * cells..(mi + 1) * cells];
            let mut total = 0u64;
            for r in r0..r0 + k {
                total += table[r * self.cols + c0..r * self.cols + c0 + k].iter().map(|&v| u64::from(v)).sum::<u64>();
            }
            // `order` is sorted by tie-break key, so only strict improvements count
            if total < best.0 {
                best = (total, mv);
            }
        }
        (best.1, best.0)
    }
}
