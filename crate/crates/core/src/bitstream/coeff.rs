//! Transform level coding: coded-block flag, zigzag run/level pairs and an
//! explicit end-of-block code.

use std::sync::OnceLock;

use super::bits::{BitReader, BitWrite};
use super::{DecodeError, DecodeErrorKind};
use crate::xform::{QuantLevels, SUPPORTED_SIZES};

fn build_zigzag(n: usize) -> Vec<u16> {
    let mut order = Vec::with_capacity(n * n);
    for d in 0..(2 * n - 1) {
        let lo = d.saturating_sub(n - 1);
        let hi = d.min(n - 1);
        if d % 2 == 0 {
            // walk up-right
            for y in (lo..=hi).rev() {
                order.push((y * n + (d - y)) as u16);
            }
        } else {
            for y in lo..=hi {
                order.push((y * n + (d - y)) as u16);
            }
        }
    }
    order
}

/// Diagonal zigzag scan for an `n`x`n` block, as raster indices.
pub fn zigzag(n: usize) -> &'static [u16] {
    static SCANS: OnceLock<[Vec<u16>; 4]> = OnceLock::new();
    let scans = SCANS.get_or_init(|| SUPPORTED_SIZES.map(build_zigzag));
    let i = SUPPORTED_SIZES.iter().position(|&s| s == n).expect("supported transform size");
    &scans[i]
}

pub fn write_coefficients<W: BitWrite + ?Sized>(w: &mut W, levels: &QuantLevels) {
    let scan = zigzag(levels.n);
    if levels.is_zero() {
        w.write_bit(false);
        return;
    }
    w.write_bit(true);
    let total = scan.len();
    let mut pos = 0usize;
    let mut run = 0u32;
    for (i, &idx) in scan.iter().enumerate() {
        let level = levels.levels[usize::from(idx)];
        if level == 0 {
            run += 1;
            continue;
        }
        w.write_ue(run);
        w.write_se(level);
        run = 0;
        pos = i + 1;
    }
    w.write_ue((total - pos) as u32 + 1);
}

/// Bits `write_coefficients` would emit.
pub fn coefficient_bits(levels: &QuantLevels) -> u64 {
    let mut c = super::bits::BitCounter::new();
    write_coefficients(&mut c, levels);
    c.bits_written()
}

pub fn read_coefficients(r: &mut BitReader<'_>, n: usize) -> Result<QuantLevels, DecodeError> {
    let mut out = QuantLevels::zeros(n);
    if !r.read_bit()? {
        return Ok(out);
    }
    let scan = zigzag(n);
    let total = scan.len();
    let mut pos = 0usize;
    loop {
        let start = r.position();
        let run = r.read_ue()? as usize;
        let remaining = total - pos;
        if run == remaining + 1 {
            break;
        }
        if run >= remaining {
            return Err(DecodeError::new(DecodeErrorKind::RunOverrun { run, remaining }, start));
        }
        pos += run;
        let at = r.position();
        let level = r.read_se()?;
        if level == 0 || level.abs() > i32::from(i16::MAX) {
            return Err(DecodeError::new(DecodeErrorKind::LevelRange(level), at));
        }
        out.levels[usize::from(scan[pos])] = level;
        pos += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::bits::{BitReader, BitWriter};
    use proptest::prelude::*;

    #[test]
    fn zigzag_4x4() {
        assert_eq!(zigzag(4), &[0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15]);
        for n in SUPPORTED_SIZES {
            let mut seen = zigzag(n).to_vec();
            seen.sort_unstable();
            assert_eq!(seen, (0..(n * n) as u16).collect::<Vec<_>>());
        }
    }

    #[test]
    fn zero_block_is_one_bit() {
        assert_eq!(coefficient_bits(&QuantLevels::zeros(8)), 1);
    }

    #[test]
    fn dc_only_layout() {
        let mut l = QuantLevels::zeros(4);
        l.levels[0] = 5;
        let mut w = BitWriter::new();
        write_coefficients(&mut w, &l);
        // cbf 1, run ue(0), level se(5) = ue(9), eob ue(16)
        let mut expect = BitWriter::new();
        expect.write_bit(true);
        expect.write_ue(0);
        expect.write_se(5);
        expect.write_ue(16);
        assert_eq!(w.bytes(), expect.bytes());
        assert_eq!(w.bits_written(), expect.bits_written());
    }

    #[test]
    fn run_overrun_is_rejected() {
        let mut w = BitWriter::new();
        w.write_bit(true);
        w.write_ue(16); // == remaining: would address position 16 of a 4x4 block
        let bytes = w.into_bytes();
        let err = read_coefficients(&mut BitReader::new(&bytes), 4).unwrap_err();
        assert!(matches!(err.kind, DecodeErrorKind::RunOverrun { run: 16, remaining: 16 }));
    }

    fn sparse_block() -> impl Strategy<Value = QuantLevels> {
        prop_oneof![Just(4usize), Just(8), Just(16), Just(32)].prop_flat_map(|n| {
            proptest::collection::vec(prop_oneof![6 => Just(0i32), 1 => -300i32..300, 1 => -32767i32..=32767], n * n)
                .prop_map(move |levels| QuantLevels { n, levels })
        })
    }

    proptest! {
        #[test]
        fn coefficient_round_trip(block in sparse_block()) {
            let mut w = BitWriter::new();
            write_coefficients(&mut w, &block);
            let written = w.bits_written();
            prop_assert_eq!(written, coefficient_bits(&block));
            let bytes = w.into_bytes();
            let mut r = BitReader::new(&bytes);
            let back = read_coefficients(&mut r, block.n).unwrap();
            prop_assert_eq!(r.position(), written);
            prop_assert_eq!(back, block);
        }
    }
}
