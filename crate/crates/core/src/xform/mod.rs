//! Bit-exact integer transform, quantization and their inverses.
//!
//! The forward chain is `X -> Ŷ = C_N·X·C_Nᵀ (two shifted stages) -> levels`;
//! the inverse chain is `levels -> Ŷ-domain coefficients -> C_Nᵀ·Y·C_N`. Every
//! stage output is clamped to 16 signed bits. For 8-bit video the shifts are
//! the familiar `log2 N − 1`, `log2 N + 6`, `7` and `12`; other bit depths use
//! the transform-scale exponent `15 − B − log2 N` in place of `7 − log2 N`.

mod matrix;
mod quant;

pub use matrix::{build_core_matrix, core_matrix, CoreMatrix, SUPPORTED_SIZES};
pub use quant::{dequantize, derive_quant_params, quantize, Qstep, QuantParams, F_TABLE, G_TABLE};
pub(crate) use quant::{dequantize_value, quantize_value};

use crate::error::{Error, Result};

/// Square block of prediction residuals (or reconstructed residuals).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualBlock {
    pub n: usize,
    pub values: Vec<i32>,
}

impl ResidualBlock {
    pub fn new(n: usize, values: Vec<i32>) -> Self {
        assert_eq!(values.len(), n * n);
        ResidualBlock { n, values }
    }

    pub fn zeros(n: usize) -> Self {
        ResidualBlock { n, values: vec![0; n * n] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffDomain {
    /// Output of the forward transform.
    Forward,
    /// Output of dequantization.
    Dequantized,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffBlock {
    pub n: usize,
    pub values: Vec<i32>,
    pub domain: CoeffDomain,
}

/// Quantized transform levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantLevels {
    pub n: usize,
    pub levels: Vec<i32>,
}

impl QuantLevels {
    pub fn zeros(n: usize) -> Self {
        QuantLevels { n, levels: vec![0; n * n] }
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&l| l == 0)
    }
}

#[inline]
pub(crate) fn round_shift(v: i32, shift: u32) -> i32 {
    if shift == 0 {
        v
    } else {
        (v + (1 << (shift - 1))) >> shift
    }
}

#[inline]
pub(crate) fn clamp16(v: i32) -> i32 {
    v.clamp(i16::MIN as i32, i16::MAX as i32)
}

fn forward_shifts(log2_n: u32, bit_depth: u8) -> (u32, u32) {
    (log2_n - 1 + u32::from(bit_depth) - 8, log2_n + 6)
}

fn inverse_shifts(bit_depth: u8) -> (u32, u32) {
    (7, 20 - u32::from(bit_depth))
}

/// Forward transform kernel on row-major slices; `tmp` is scratch of `n*n`.
pub(crate) fn forward_kernel(m: &CoreMatrix, bit_depth: u8, src: &[i32], dst: &mut [i32], tmp: &mut [i32]) {
    let n = m.n();
    let (s1, s2) = forward_shifts(m.log2_n(), bit_depth);
    let c = m.entries();
    let ct = m.transposed();
    // Stage 1: T = C·X
    for k in 0..n {
        let row = &mut tmp[k * n..(k + 1) * n];
        row.fill(0);
        for i in 0..n {
            let coef = c[k * n + i];
            let xrow = &src[i * n..(i + 1) * n];
            for (t, &x) in row.iter_mut().zip(xrow) {
                *t += coef * x;
            }
        }
        for t in row.iter_mut() {
            let v = round_shift(*t, s1);
            debug_assert!(clamp16(v) == v, "forward stage 1 overflowed 16 bits");
            *t = clamp16(v);
        }
    }
    // Stage 2: Ŷ = T·Cᵀ
    for k in 0..n {
        let out = &mut dst[k * n..(k + 1) * n];
        out.fill(0);
        for j in 0..n {
            let t = tmp[k * n + j];
            if t == 0 {
                continue;
            }
            let crow = &ct[j * n..(j + 1) * n];
            for (o, &cv) in out.iter_mut().zip(crow) {
                *o += t * cv;
            }
        }
        for o in out.iter_mut() {
            let v = round_shift(*o, s2);
            debug_assert!(clamp16(v) == v, "forward stage 2 overflowed 16 bits");
            *o = clamp16(v);
        }
    }
}

/// Inverse transform kernel on row-major slices; `tmp` is scratch of `n*n`.
pub(crate) fn inverse_kernel(m: &CoreMatrix, bit_depth: u8, src: &[i32], dst: &mut [i32], tmp: &mut [i32]) {
    let n = m.n();
    let (s1, s2) = inverse_shifts(bit_depth);
    let c = m.entries();
    let ct = m.transposed();
    // Stage 1: U = Cᵀ·Y
    tmp[..n * n].fill(0);
    for k in 0..n {
        let yrow = &src[k * n..(k + 1) * n];
        if yrow.iter().all(|&v| v == 0) {
            continue;
        }
        for i in 0..n {
            let coef = ct[i * n + k];
            let urow = &mut tmp[i * n..(i + 1) * n];
            for (u, &y) in urow.iter_mut().zip(yrow) {
                *u += coef * y;
            }
        }
    }
    for u in tmp[..n * n].iter_mut() {
        *u = clamp16(round_shift(*u, s1));
    }
    // Stage 2: R = U·C
    for i in 0..n {
        let out = &mut dst[i * n..(i + 1) * n];
        out.fill(0);
        for l in 0..n {
            let u = tmp[i * n + l];
            if u == 0 {
                continue;
            }
            let crow = &c[l * n..(l + 1) * n];
            for (o, &cv) in out.iter_mut().zip(crow) {
                *o += u * cv;
            }
        }
        for o in out.iter_mut() {
            *o = clamp16(round_shift(*o, s2));
        }
    }
}

pub fn forward_transform(x: &ResidualBlock, m: &CoreMatrix, bit_depth: u8) -> Result<CoeffBlock> {
    if x.n != m.n() {
        return Err(Error::SizeMismatch(x.n, m.n()));
    }
    let limit = (1i32 << bit_depth) - 1;
    debug_assert!(x.values.iter().all(|v| v.abs() <= limit), "residual exceeds sample range");
    let mut values = vec![0; x.n * x.n];
    let mut tmp = vec![0; x.n * x.n];
    forward_kernel(m, bit_depth, &x.values, &mut values, &mut tmp);
    Ok(CoeffBlock { n: x.n, values, domain: CoeffDomain::Forward })
}

pub fn inverse_transform(y: &CoeffBlock, m: &CoreMatrix, bit_depth: u8) -> Result<ResidualBlock> {
    if y.n != m.n() {
        return Err(Error::SizeMismatch(y.n, m.n()));
    }
    let mut values = vec![0; y.n * y.n];
    let mut tmp = vec![0; y.n * y.n];
    inverse_kernel(m, bit_depth, &y.values, &mut values, &mut tmp);
    Ok(ResidualBlock { n: y.n, values })
}
