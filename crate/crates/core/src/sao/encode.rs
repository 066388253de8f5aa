//! Encoder-side SAO decisions.

use super::{
    bo_band, eo_category, max_offset, sao_params_bits, SaoBlockGrid, SaoMode, SaoParams, SaoType, MAX_BAND_POSITION,
};
use crate::bitstream::bits::ue_bits;
use crate::config::SaoConfig;
use crate::frame::{Block, Frame, Plane, PlaneKind};
use crate::partition::RdCost;

/// Samples of one category: count and sum of `orig − rec` for samples that
/// can never clip, plus the few near the range limits kept individually so
/// the distortion change of any offset is exact.
#[derive(Clone, Debug, Default)]
struct CatStats {
    n: i64,
    sum: i64,
    edge: Vec<(u16, u16)>,
}

impl CatStats {
    #[inline]
    fn add(&mut self, rec: u16, orig: u16, lo: u16, hi: u16) {
        if rec < lo || rec > hi {
            self.edge.push((rec, orig));
        } else {
            self.n += 1;
            self.sum += i64::from(orig) - i64::from(rec);
        }
    }

    fn merge(&mut self, o: &CatStats) {
        self.n += o.n;
        self.sum += o.sum;
        self.edge.extend_from_slice(&o.edge);
    }

    fn count(&self) -> i64 {
        self.n + self.edge.len() as i64
    }

    fn total(&self) -> i64 {
        self.sum + self.edge.iter().map(|&(r, o)| i64::from(o) - i64::from(r)).sum::<i64>()
    }

    /// Change in SSE from adding `o` to every sample (with clipping).
    fn delta(&self, o: i32, max: i32) -> i64 {
        if o == 0 {
            return 0;
        }
        let o64 = i64::from(o);
        let mut d = self.n * o64 * o64 - 2 * o64 * self.sum;
        for &(r, g) in &self.edge {
            let before = i64::from(g) - i64::from(r);
            let after = i64::from(g) - i64::from((i32::from(r) + o).clamp(0, max));
            d += after * after - before * before;
        }
        d
    }

    /// Mean difference rounded half away from zero.
    fn mean(&self) -> i32 {
        let (n, s) = (self.count(), self.total());
        if n == 0 {
            return 0;
        }
        let m = (2 * s.abs() + n) / (2 * n);
        (m * s.signum()) as i32
    }
}

/// Classification statistics of one SAO region of one plane.
#[derive(Clone, Debug)]
pub struct RegionStats {
    /// SSE of the unfiltered region.
    pub base: u64,
    eo: [[CatStats; 4]; 4],
    bo: Vec<CatStats>,
    bit_depth: u8,
}

impl RegionStats {
    fn empty(bit_depth: u8) -> Self {
        RegionStats { base: 0, eo: Default::default(), bo: vec![CatStats::default(); 32], bit_depth }
    }

    /// Gathers statistics over the `w`x`h` region at (`x`, `y`), counting
    /// only samples inside the display window `display`. Edge neighbours
    /// outside `avail` (x, y, size) are unavailable.
    pub fn collect(
        orig: &Plane,
        rec: &Plane,
        region: (usize, usize, usize, usize),
        avail: (usize, usize, usize),
        display: (usize, usize),
    ) -> Self {
        let bit_depth = rec.bit_depth();
        let mut s = RegionStats::empty(bit_depth);
        let max = i32::from(rec.max_value());
        let lim = max_offset(bit_depth);
        let (lo, hi) = (lim as u16, (max - lim) as u16);
        let (x0, y0, w, h) = region;
        let (ax, ay, an) = (avail.0 as isize, avail.1 as isize, avail.2 as isize);
        let xe = (x0 + w).min(display.0);
        let ye = (y0 + h).min(display.1);
        let width = rec.width();
        let src = rec.samples();
        for y in y0..ye {
            for x in x0..xe {
                let r = src[y * width + x];
                let o = orig.get(x, y);
                let d = i64::from(o) - i64::from(r);
                s.base += (d * d) as u64;
                s.bo[bo_band(r, bit_depth)].add(r, o, lo, hi);
                for (ci, class) in SaoType::EDGE.iter().enumerate() {
                    let [(dx0, dy0), (dx1, dy1)] = class.neighbours();
                    let (xa, ya) = (x as isize + dx0, y as isize + dy0);
                    let (xb, yb) = (x as isize + dx1, y as isize + dy1);
                    let inside = |xx: isize, yy: isize| xx >= ax && yy >= ay && xx < ax + an && yy < ay + an;
                    if !inside(xa, ya) || !inside(xb, yb) {
                        continue;
                    }
                    let n0 = i32::from(src[ya as usize * width + xa as usize]);
                    let n1 = i32::from(src[yb as usize * width + xb as usize]);
                    let cat = eo_category(i32::from(r), n0, n1);
                    if cat > 0 {
                        s.eo[ci][usize::from(cat) - 1].add(r, o, lo, hi);
                    }
                }
            }
        }
        s
    }

    pub fn merge(&mut self, o: &RegionStats) {
        self.base += o.base;
        for (a, b) in self.eo.iter_mut().flatten().zip(o.eo.iter().flatten()) {
            a.merge(b);
        }
        for (a, b) in self.bo.iter_mut().zip(&o.bo) {
            a.merge(b);
        }
    }

    fn max(&self) -> i32 {
        (1 << self.bit_depth) - 1
    }

    /// Exact SSE after applying resolved parameters.
    pub fn distortion(&self, p: &SaoParams) -> u64 {
        let max = self.max();
        let delta: i64 = match (p.mode, p.kind) {
            (SaoMode::Off, _) => 0,
            (_, SaoType::Bo) => {
                (0..4).map(|i| self.bo[usize::from(p.band_position) + i].delta(p.offsets[i], max)).sum()
            }
            (_, kind) => {
                let ci = kind.code() as usize;
                (0..4).map(|i| self.eo[ci][i].delta(p.offsets[i], max)).sum()
            }
        };
        (self.base as i64 + delta) as u64
    }

    /// Best offset for one category, scanning from the estimate toward zero.
    fn refine(&self, cat: &CatStats, est: i32, band: bool, lambda: f64) -> (i32, f64) {
        let max = self.max();
        let bits = |o: i32| f64::from(ue_bits(o.unsigned_abs()) + u32::from(band && o != 0));
        let mut best = (0, lambda * bits(0));
        let step = est.signum();
        let mut o = 0;
        while o != est {
            o += step;
            let c = cat.delta(o, max) as f64 + lambda * bits(o);
            if c < best.1 {
                best = (o, c);
            }
        }
        best
    }

    /// Best `New` parameter set over all edge classes and band positions.
    fn best_new(&self, lambda: f64) -> SaoParams {
        let lim = max_offset(self.bit_depth);
        let header = |kind: SaoType| f64::from(ue_bits(SaoMode::New.code()) + ue_bits(kind.code()));
        let mut best: Option<(f64, SaoParams)> = None;
        let mut consider = |cost: f64, p: SaoParams| {
            if best.is_none_or(|(c, _)| cost < c) {
                best = Some((cost, p));
            }
        };
        for (ci, kind) in SaoType::EDGE.iter().enumerate() {
            let mut offsets = [0; 4];
            let mut cost = lambda * header(*kind);
            for (i, cat) in self.eo[ci].iter().enumerate() {
                let est = if i < 2 { cat.mean().clamp(0, lim) } else { cat.mean().clamp(-lim, 0) };
                let (o, c) = self.refine(cat, est, false, lambda);
                offsets[i] = o;
                cost += c;
            }
            consider(cost, SaoParams::edge(*kind, offsets));
        }
        let bands: Vec<(i32, f64)> =
            self.bo.iter().map(|cat| self.refine(cat, cat.mean().clamp(-lim, lim), true, lambda)).collect();
        let bo_header = lambda * (header(SaoType::Bo) + 5.0);
        for pos in 0..=usize::from(MAX_BAND_POSITION) {
            let w = &bands[pos..pos + 4];
            let cost = bo_header + w.iter().map(|b| b.1).sum::<f64>();
            consider(cost, SaoParams::band(pos as u8, [w[0].0, w[1].0, w[2].0, w[3].0]));
        }
        best.expect("candidates evaluated").1
    }
}

/// Per-category sums, counts and clipped mean offsets for a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetEstimate {
    pub counts: Vec<i64>,
    pub sums: Vec<i64>,
    pub offsets: Vec<i32>,
}

/// Offset estimate for one classifier over a window treated as its own
/// region (edge neighbours outside it are unavailable). EO yields categories
/// 1..=4, BO all 32 bands.
pub fn estimate_offsets(orig: &Block, rec: &Block, classifier: SaoType, bit_depth: u8) -> OffsetEstimate {
    let to_plane = |b: &Block| Plane::from_samples(b.width, b.height, bit_depth, b.data.clone()).expect("valid block");
    let (o, r) = (to_plane(orig), to_plane(rec));
    let n = orig.width.max(orig.height);
    let stats = RegionStats::collect(&o, &r, (0, 0, orig.width, orig.height), (0, 0, n), (orig.width, orig.height));
    let lim = max_offset(bit_depth);
    let (cats, signed): (&[CatStats], bool) = match classifier {
        SaoType::Bo => (&stats.bo, true),
        kind => (&stats.eo[kind.code() as usize], false),
    };
    let offsets = cats
        .iter()
        .enumerate()
        .map(|(i, c)| match (signed, i < 2) {
            (true, _) => c.mean().clamp(-lim, lim),
            (false, true) => c.mean().clamp(0, lim),
            (false, false) => c.mean().clamp(-lim, 0),
        })
        .collect();
    OffsetEstimate {
        counts: cats.iter().map(CatStats::count).collect(),
        sums: cats.iter().map(CatStats::total).collect(),
        offsets,
    }
}

/// Chooses among OFF, NEW and (when allowed) merging with the resolved left
/// or upper neighbour. Returns the signalled and resolved parameters and the
/// cost of the choice.
pub fn choose_sao_params(
    stats: &RegionStats,
    left: Option<SaoParams>,
    up: Option<SaoParams>,
    lambda: f64,
) -> (SaoParams, SaoParams, RdCost) {
    let cost_of = |signalled: &SaoParams, resolved: &SaoParams| {
        RdCost::new(stats.distortion(resolved), sao_params_bits(signalled), lambda)
    };
    let off = SaoParams::OFF;
    let mut best = (off, off, cost_of(&off, &off));
    let new = stats.best_new(lambda);
    let mut candidates = vec![(new, new)];
    if let Some(l) = left {
        candidates.push((SaoParams { mode: SaoMode::MergeLeft, ..SaoParams::OFF }, l));
    }
    if let Some(u) = up {
        candidates.push((SaoParams { mode: SaoMode::MergeUp, ..SaoParams::OFF }, u));
    }
    for (s, r) in candidates {
        let c = cost_of(&s, &r);
        if c.is_better_than(&best.2) {
            best = (s, r, c);
        }
    }
    best
}

/// SAO costs of one SCU over all planes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScuSaoCost {
    /// Cost of the chosen configuration, including the split flag.
    pub chosen: RdCost,
    /// Cost of signalling SAO off everywhere in the SCU.
    pub off: RdCost,
    /// Whole-SCU single parameter set (adaptive scheme only), without flag.
    pub unsplit: Option<RdCost>,
    /// Independent per-block choice, without flag.
    pub split: Option<RdCost>,
}

/// Decides the SAO parameters of a whole frame. `orig` and `rec` share the
/// padded geometry; sizes are in luma samples.
pub fn decide_frame_sao(
    orig: &Frame,
    rec: &Frame,
    mode: SaoConfig,
    block_size: usize,
    scu_size: usize,
    lambda: f64,
) -> (SaoBlockGrid, Vec<ScuSaoCost>) {
    let mut grid = SaoBlockGrid::new(rec.width(), rec.height(), block_size, scu_size);
    let mut costs = Vec::new();
    if mode == SaoConfig::Off {
        return (grid, costs);
    }
    let (scu_cols, scu_rows) = (rec.width() / scu_size, rec.height() / scu_size);
    let k = grid.blocks_per_scu();
    for sy in 0..scu_rows {
        for sx in 0..scu_cols {
            let blocks = grid.scu_blocks(sx, sy);
            // per-plane, per-block statistics; the SCU region is their union
            let mut block_stats: [Vec<RegionStats>; 3] = Default::default();
            for kind in PlaneKind::ALL {
                let s = kind.shift();
                let (bs, ss) = (block_size >> s, scu_size >> s);
                let avail = (sx * ss, sy * ss, ss);
                for j in 0..k {
                    for i in 0..k {
                        let region = (sx * ss + i * bs, sy * ss + j * bs, bs, bs);
                        block_stats[kind.index()].push(RegionStats::collect(
                            orig.plane(kind),
                            rec.plane(kind),
                            region,
                            avail,
                            orig.display_size(kind),
                        ));
                    }
                }
            }
            let base: u64 = block_stats.iter().flatten().map(|s| s.base).sum();
            let flag = u64::from(mode == SaoConfig::AdaptiveBlock);

            // split: every block chooses independently, merges allowed
            let mut split = RdCost::zero(lambda);
            for (bi, &b) in blocks.iter().enumerate() {
                for (plane, stats) in block_stats.iter().enumerate() {
                    let left = grid.left(b).map(|l| grid.resolved[plane][l]);
                    let up = grid.up(b).map(|u| grid.resolved[plane][u]);
                    let (sig, res, c) = choose_sao_params(&stats[bi], left, up, lambda);
                    grid.signalled[plane][b] = sig;
                    grid.resolved[plane][b] = res;
                    split = split + c;
                }
            }
            let scu = sy * scu_cols + sx;
            let off_bits = if mode == SaoConfig::AdaptiveBlock { 3 } else { 3 * blocks.len() as u64 };
            let off = RdCost::new(base, flag + off_bits, lambda);
            if mode == SaoConfig::FixedBlock {
                costs.push(ScuSaoCost { chosen: split, off, unsplit: None, split: Some(split) });
                continue;
            }

            // unsplit: one OFF/NEW set for the whole SCU
            let mut unsplit = RdCost::zero(lambda);
            let mut whole = [SaoParams::OFF; 3];
            for (w, plane_stats) in whole.iter_mut().zip(&block_stats) {
                let mut stats = plane_stats[0].clone();
                for s in &plane_stats[1..] {
                    stats.merge(s);
                }
                let (sig, _, c) = choose_sao_params(&stats, None, None, lambda);
                *w = sig;
                unsplit = unsplit + c;
            }
            let use_split = split.is_better_than(&unsplit);
            grid.split[scu] = use_split;
            if !use_split {
                for (plane, &params) in whole.iter().enumerate() {
                    for &b in &blocks {
                        grid.signalled[plane][b] = params;
                        grid.resolved[plane][b] = params;
                    }
                }
            }
            let chosen = if use_split { split } else { unsplit }.with_bits(1);
            costs.push(ScuSaoCost { chosen, off, unsplit: Some(unsplit), split: Some(split) });
        }
    }
    (grid, costs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sao::apply_sao;

    fn plane(w: usize, h: usize, f: impl Fn(usize, usize) -> u16) -> Plane {
        Plane::from_samples(w, h, 8, (0..w * h).map(|i| f(i % w, i / w)).collect()).unwrap()
    }

    fn stats(orig: &Plane, rec: &Plane) -> RegionStats {
        let (w, h) = (orig.width(), orig.height());
        RegionStats::collect(orig, rec, (0, 0, w, h), (0, 0, w.max(h)), (w, h))
    }

    #[test]
    fn estimate_examples() {
        let orig = Block::filled(8, 8, 83);
        let rec = Block::filled(8, 8, 80);
        assert_eq!(estimate_offsets(&orig, &rec, SaoType::Bo, 8).offsets[10], 3);
        let same = estimate_offsets(&orig, &orig, SaoType::Bo, 8);
        assert!(same.offsets.iter().all(|&o| o == 0));
        // valleys 9 below the original clip to +7
        let rec = Block::new(3, 1, vec![100, 91, 100]);
        let orig = Block::new(3, 1, vec![100, 100, 100]);
        let e = estimate_offsets(&orig, &rec, SaoType::Eo0, 8);
        assert_eq!((e.counts[0], e.sums[0], e.offsets[0]), (1, 9, 7));
    }

    #[test]
    fn exact_distortion_matches_application() {
        let orig = plane(16, 16, |x, y| ((x * 37 + y * 11) % 256) as u16);
        let rec = plane(16, 16, |x, y| ((x * 37 + y * 11 + (x ^ y) % 5) % 256) as u16);
        let s = stats(&orig, &rec);
        for p in [
            SaoParams::edge(SaoType::Eo45, [3, 1, -2, -7]),
            SaoParams::band(0, [7, -3, 2, 1]),
            SaoParams::band(28, [5, 5, 7, 7]),
        ] {
            let out = apply_sao(&rec, &[p], 16, 16).unwrap();
            let sse: u64 = out
                .samples()
                .iter()
                .zip(orig.samples())
                .map(|(&a, &b)| (i64::from(a) - i64::from(b)).pow(2) as u64)
                .sum();
            assert_eq!(s.distortion(&p), sse, "{p:?}");
        }
    }

    #[test]
    fn identical_reconstruction_chooses_off() {
        let orig = plane(16, 16, |x, y| ((x * 7 + y * 3) % 200) as u16);
        let (sig, _, c) = choose_sao_params(&stats(&orig, &orig), None, None, 10.0);
        assert_eq!(sig, SaoParams::OFF);
        assert_eq!(c.distortion, 0);
    }

    #[test]
    fn equal_statistics_merge() {
        let orig = plane(16, 16, |_, _| 100);
        let rec = plane(16, 16, |_, _| 96);
        let s = stats(&orig, &rec);
        let (first, resolved, _) = choose_sao_params(&s, None, None, 5.0);
        assert_eq!(first.mode, SaoMode::New);
        let (second, r2, c2) = choose_sao_params(&s, Some(resolved), None, 5.0);
        assert_eq!(second.mode, SaoMode::MergeLeft);
        assert_eq!(r2, resolved);
        assert_eq!(c2.rate, 3);
    }

    #[test]
    fn refined_offsets_never_increase_sse() {
        let orig = plane(32, 32, |x, y| ((x * 13 + y * 29) % 256) as u16);
        let rec = plane(32, 32, |x, y| {
            (((x * 13 + y * 29) % 256) as i32 + ((x + 2 * y) % 9) as i32 - 4).clamp(0, 255) as u16
        });
        let s = stats(&orig, &rec);
        for lambda in [0.0, 1.0, 30.0] {
            let p = s.best_new(lambda);
            assert!(s.distortion(&p) <= s.base);
        }
    }

    fn frame_from(luma: Plane) -> Frame {
        let (w, h) = (luma.width(), luma.height());
        let c = Plane::filled(w / 2, h / 2, 8, 128);
        Frame::from_planes(luma, c.clone(), c).unwrap()
    }

    #[test]
    fn adaptive_split_follows_degradation() {
        let orig = frame_from(plane(64, 64, |x, y| 60 + ((x / 2 + y / 3) % 2) as u16 * 80));
        // uniform band shift everywhere → one parameter set suffices
        let rec_uniform = frame_from(plane(64, 64, |x, y| orig.luma().get(x, y) - 4));
        let (grid, costs) = decide_frame_sao(&orig, &rec_uniform, SaoConfig::AdaptiveBlock, 16, 64, 20.0);
        assert!(!grid.split[0]);
        assert!(costs[0].chosen.compare(&costs[0].off).is_le());
        // opposite shifts in two far-apart bands, each in its own block → split
        let halves = frame_from(plane(64, 64, |x, _| if x < 32 { 60 } else { 140 }));
        let rec_corner = frame_from(plane(64, 64, |x, y| match (x, y) {
            (0..16, 0..16) => 54,
            (48..64, 0..16) => 146,
            _ => halves.luma().get(x, y),
        }));
        let orig = halves;
        let (grid, costs) = decide_frame_sao(&orig, &rec_corner, SaoConfig::AdaptiveBlock, 16, 64, 20.0);
        assert!(grid.split[0], "{:?}", costs[0]);
        let c = costs[0];
        let best = if c.split.unwrap().is_better_than(&c.unsplit.unwrap()) { c.split } else { c.unsplit }.unwrap();
        assert_eq!(c.chosen, best.with_bits(1));
    }
}
