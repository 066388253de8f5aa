//! Integer DCT-II approximations for 4x4 through 32x32 blocks.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// `64·√2·cos(iπ/64)` for `i` in `0..=32`, rounded and then nudged by one at
/// the handful of angles where plain rounding hurts orthogonality.
const COS_TABLE: [i32; 33] = [
    0, 90, 90, 90, 89, 88, 87, 85, 83, 82, 80, 78, 75, 73, 70, 67, 64, 61, 57, 54, 50, 46, 43, 38, 36, 31, 25, 22, 18,
    13, 9, 4, 0,
];

pub const SUPPORTED_SIZES: [usize; 4] = [4, 8, 16, 32];

/// Integer core matrix `C_N`, the transform being `C = r_N·C_N` with
/// `r_N = 1/(64·√N)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreMatrix {
    n: usize,
    entries: Vec<i32>,
    transposed: Vec<i32>,
}

impl CoreMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn log2_n(&self) -> u32 {
        self.n.trailing_zeros()
    }

    #[inline]
    pub fn entry(&self, k: usize, j: usize) -> i32 {
        self.entries[k * self.n + j]
    }

    /// Row-major entries.
    #[inline]
    pub fn entries(&self) -> &[i32] {
        &self.entries
    }

    /// Row-major entries of the transpose.
    #[inline]
    pub fn transposed(&self) -> &[i32] {
        &self.transposed
    }

    pub fn row(&self, k: usize) -> &[i32] {
        &self.entries[k * self.n..(k + 1) * self.n]
    }

    /// `log2(r_N²)`; the scale is irrational for odd `log2 N`, so it is kept as
    /// the exponent of its square: `r_N² = 2^(-(12 + log2 N))`.
    pub fn scale_log2_squared(&self) -> i32 {
        -(12 + self.log2_n() as i32)
    }
}

fn entry_for(n: usize, k: usize, j: usize) -> i32 {
    if k == 0 {
        return 64;
    }
    let step = 32 / n;
    let a = ((2 * j + 1) * k * step) % 128;
    match a {
        0..=32 => COS_TABLE[a],
        33..=64 => -COS_TABLE[64 - a],
        65..=96 => -COS_TABLE[a - 64],
        _ => COS_TABLE[128 - a],
    }
}

pub fn build_core_matrix(n: usize) -> Result<CoreMatrix> {
    if !SUPPORTED_SIZES.contains(&n) {
        return Err(Error::UnsupportedBlockSize(n));
    }
    let mut entries = vec![0; n * n];
    let mut transposed = vec![0; n * n];
    for k in 0..n {
        for j in 0..n {
            let v = entry_for(n, k, j);
            entries[k * n + j] = v;
            transposed[j * n + k] = v;
        }
    }
    Ok(CoreMatrix { n, entries, transposed })
}

/// Shared instance of the core matrix for `n`.
pub fn core_matrix(n: usize) -> Result<&'static CoreMatrix> {
    static CACHE: OnceLock<[CoreMatrix; 4]> = OnceLock::new();
    let all = CACHE.get_or_init(|| SUPPORTED_SIZES.map(|n| build_core_matrix(n).expect("supported size")));
    all.iter().find(|m| m.n == n).ok_or(Error::UnsupportedBlockSize(n))
}
