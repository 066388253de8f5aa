//! MSB-first bit writer/reader with exp-Golomb codes.

use super::{DecodeError, DecodeErrorKind};

/// Sink for syntax elements. Implemented by the byte writer and by a plain
/// counter used for rate estimation, so both always agree on bit counts.
pub trait BitWrite {
    fn write_bit(&mut self, bit: bool);

    /// Number of bits written so far.
    fn bits_written(&self) -> u64;

    /// Writes the low `n` bits of `value`, most significant first.
    fn write_bits(&mut self, value: u64, n: u32) {
        for i in (0..n).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    /// Order-0 exp-Golomb code.
    fn write_ue(&mut self, value: u32) {
        let v = u64::from(value) + 1;
        let len = 64 - v.leading_zeros();
        self.write_bits(0, len - 1);
        self.write_bits(v, len);
    }

    /// Signed exp-Golomb: 0, 1, -1, 2, -2, ... map to 0, 1, 2, 3, 4, ...
    fn write_se(&mut self, value: i32) {
        self.write_ue(se_to_ue(value));
    }
}

#[inline]
pub fn se_to_ue(value: i32) -> u32 {
    if value <= 0 {
        value.unsigned_abs() * 2
    } else {
        value as u32 * 2 - 1
    }
}

#[inline]
pub fn ue_to_se(code: u32) -> i32 {
    if code.is_multiple_of(2) {
        -((code / 2) as i64) as i32
    } else {
        (code / 2 + 1) as i32
    }
}

/// Length in bits of `ue(value)`.
#[inline]
pub fn ue_bits(value: u32) -> u32 {
    let v = u64::from(value) + 1;
    2 * (64 - v.leading_zeros()) - 1
}

#[inline]
pub fn se_bits(value: i32) -> u32 {
    ue_bits(se_to_ue(value))
}

#[derive(Clone, Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        BitWriter::default()
    }

    /// Pads with zero bits to the next byte boundary.
    pub fn align(&mut self) {
        while !self.bits.is_multiple_of(8) {
            self.write_bit(false);
        }
    }

    pub fn write_bytes(&mut self, data: &[u8]) {
        for &b in data {
            self.write_bits(u64::from(b), 8);
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl BitWrite for BitWriter {
    #[inline]
    fn write_bit(&mut self, bit: bool) {
        let offset = (self.bits % 8) as u8;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("byte pushed above") |= 0x80 >> offset;
        }
        self.bits += 1;
    }

    fn bits_written(&self) -> u64 {
        self.bits
    }
}

/// Counts bits without storing them.
#[derive(Clone, Copy, Debug, Default)]
pub struct BitCounter {
    bits: u64,
}

impl BitCounter {
    pub fn new() -> Self {
        BitCounter::default()
    }
}

impl BitWrite for BitCounter {
    #[inline]
    fn write_bit(&mut self, _bit: bool) {
        self.bits += 1;
    }

    #[inline]
    fn write_bits(&mut self, _value: u64, n: u32) {
        self.bits += u64::from(n);
    }

    #[inline]
    fn write_ue(&mut self, value: u32) {
        self.bits += u64::from(ue_bits(value));
    }

    fn bits_written(&self) -> u64 {
        self.bits
    }
}

#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader { data, pos: 0 }
    }

    #[inline]
    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.data.len() as u64 * 8 - self.pos
    }

    pub fn error(&self, kind: DecodeErrorKind) -> DecodeError {
        DecodeError::new(kind, self.pos)
    }

    #[inline]
    pub fn read_bit(&mut self) -> Result<bool, DecodeError> {
        let byte = self.data.get((self.pos / 8) as usize).ok_or_else(|| self.error(DecodeErrorKind::Truncated))?;
        let bit = (byte >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u64, DecodeError> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | u64::from(self.read_bit()?);
        }
        Ok(v)
    }

    pub fn read_ue(&mut self) -> Result<u32, DecodeError> {
        let start = self.pos;
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 31 {
                return Err(DecodeError::new(DecodeErrorKind::MalformedExpGolomb, start));
            }
        }
        let rest = self.read_bits(zeros)?;
        let v = (1u64 << zeros) + rest - 1;
        u32::try_from(v).map_err(|_| DecodeError::new(DecodeErrorKind::MalformedExpGolomb, start))
    }

    pub fn read_se(&mut self) -> Result<i32, DecodeError> {
        Ok(ue_to_se(self.read_ue()?))
    }

    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_of(f: impl FnOnce(&mut BitWriter)) -> String {
        let mut w = BitWriter::new();
        f(&mut w);
        let n = w.bits_written() as usize;
        let bytes = w.into_bytes();
        (0..n).map(|i| if (bytes[i / 8] >> (7 - i % 8)) & 1 == 1 { '1' } else { '0' }).collect()
    }

    #[test]
    fn ue_examples() {
        assert_eq!(bits_of(|w| w.write_ue(0)), "1");
        assert_eq!(bits_of(|w| w.write_ue(1)), "010");
        assert_eq!(bits_of(|w| w.write_ue(2)), "011");
        assert_eq!(bits_of(|w| w.write_ue(7)), "0001000");
    }

    #[test]
    fn se_examples() {
        assert_eq!(bits_of(|w| w.write_se(0)), "1");
        assert_eq!(bits_of(|w| w.write_se(1)), "010");
        assert_eq!(bits_of(|w| w.write_se(-1)), "011");
    }

    #[test]
    fn ue_round_trip_exhaustive() {
        let mut w = BitWriter::new();
        for v in 0..=(1u32 << 16) {
            w.write_ue(v);
        }
        let total = w.bits_written();
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        for v in 0..=(1u32 << 16) {
            assert_eq!(r.read_ue().unwrap(), v);
        }
        assert_eq!(r.position(), total);
    }

    #[test]
    fn se_round_trip() {
        let mut w = BitWriter::new();
        let mut c = BitCounter::new();
        for v in -1000..=1000 {
            w.write_se(v);
            c.write_se(v);
        }
        assert_eq!(w.bits_written(), c.bits_written());
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        for v in -1000..=1000 {
            assert_eq!(r.read_se().unwrap(), v);
        }
    }

    #[test]
    fn counter_matches_writer_lengths() {
        for v in [0u32, 1, 2, 3, 100, 65535, u32::MAX - 1] {
            assert_eq!(u64::from(ue_bits(v)), {
                let mut w = BitWriter::new();
                w.write_ue(v);
                w.bits_written()
            });
        }
    }

    #[test]
    fn malformed_and_truncated() {
        let zeros = [0u8; 8];
        let e = BitReader::new(&zeros).read_ue().unwrap_err();
        assert_eq!(e.kind, DecodeErrorKind::MalformedExpGolomb);
        let e = BitReader::new(&[0b0000_0001]).read_ue().unwrap_err();
        assert_eq!(e.kind, DecodeErrorKind::Truncated);
        assert_eq!(e.bit, 8);
    }

    #[test]
    fn alignment() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        w.align();
        w.write_bytes(b"A");
        assert_eq!(w.bytes(), &[0b1010_0000, b'A']);
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        r.read_bits(3).unwrap();
        r.align();
        assert_eq!(r.read_bits(8).unwrap(), u64::from(b'A'));
    }
}
