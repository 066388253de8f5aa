//! Sample planes and 4:2:0 frames.

use crate::error::{Error, Result};

/// A rectangular block of samples copied out of a plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
}

impl Block {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Block { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Block { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }
}

/// One sample plane, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    bit_depth: u8,
    data: Vec<u16>,
}

pub(crate) fn check_bit_depth(bit_depth: u8) -> Result<()> {
    match bit_depth {
        8 | 10 => Ok(()),
        other => Err(Error::UnsupportedBitDepth(other)),
    }
}

impl Plane {
    /// A plane filled with zeros.
    pub fn new(width: usize, height: usize, bit_depth: u8) -> Self {
        Plane::filled(width, height, bit_depth, 0)
    }

    pub fn filled(width: usize, height: usize, bit_depth: u8, value: u16) -> Self {
        debug_assert!(u32::from(value) < (1u32 << bit_depth));
        Plane { width, height, bit_depth, data: vec![value; width * height] }
    }

    pub fn from_samples(width: usize, height: usize, bit_depth: u8, data: Vec<u16>) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        if data.len() != width * height {
            return Err(Error::PlaneSize { expected: width * height, actual: data.len() });
        }
        let max = (1u32 << bit_depth) - 1;
        if let Some(&bad) = data.iter().find(|&&s| u32::from(s) > max) {
            return Err(Error::SampleRange { value: bad.into(), bit_depth });
        }
        Ok(Plane { width, height, bit_depth, data })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    #[inline]
    pub fn max_value(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    #[inline]
    pub fn samples(&self) -> &[u16] {
        &self.data
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u16) {
        debug_assert!(value <= self.max_value());
        self.data[y * self.width + x] = value;
    }

    /// Sample with coordinates clamped into the plane (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u16 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u16] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    fn check_window(&self, x: usize, y: usize, w: usize, h: usize) -> Result<()> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::BlockOutOfBounds { x, y, w, h, width: self.width, height: self.height });
        }
        Ok(())
    }

    /// Copy of the `w`x`h` window at (`x`, `y`).
    pub fn read_block(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Block> {
        self.check_window(x, y, w, h)?;
        let mut data = Vec::with_capacity(w * h);
        for row in y..y + h {
            data.extend_from_slice(&self.row(row)[x..x + w]);
        }
        Ok(Block::new(w, h, data))
    }

    /// Stores `block` with its top-left corner at (`x`, `y`).
    pub fn write_block(&mut self, x: usize, y: usize, block: &Block) -> Result<()> {
        self.check_window(x, y, block.width, block.height)?;
        for row in 0..block.height {
            let dst = (y + row) * self.width + x;
            self.data[dst..dst + block.width].copy_from_slice(&block.data[row * block.width..(row + 1) * block.width]);
        }
        Ok(())
    }

    /// Plane extended to `width`x`height` by replicating the last column and row.
    pub fn padded(&self, width: usize, height: usize) -> Plane {
        debug_assert!(width >= self.width && height >= self.height);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let src = self.row(y.min(self.height - 1));
            data.extend_from_slice(src);
            let last = src[self.width - 1];
            data.extend(std::iter::repeat_n(last, width - self.width));
        }
        Plane { width, height, bit_depth: self.bit_depth, data }
    }

    /// Top-left `width`x`height` window.
    pub fn cropped(&self, width: usize, height: usize) -> Plane {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            data.extend_from_slice(&self.row(y)[..width]);
        }
        Plane { width, height, bit_depth: self.bit_depth, data }
    }

    /// Plane surrounded by a `margin`-sample border of replicated edge samples.
    pub fn with_margin(&self, margin: usize) -> Plane {
        let width = self.width + 2 * margin;
        let height = self.height + 2 * margin;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = y as isize - margin as isize;
            for x in 0..width {
                data.push(self.get_clamped(x as isize - margin as isize, sy));
            }
        }
        Plane { width, height, bit_depth: self.bit_depth, data }
    }
}

/// Identifies one of the three planes of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlaneKind {
    Luma,
    Cb,
    Cr,
}

impl PlaneKind {
    pub const ALL: [PlaneKind; 3] = [PlaneKind::Luma, PlaneKind::Cb, PlaneKind::Cr];

    pub fn index(self) -> usize {
        match self {
            PlaneKind::Luma => 0,
            PlaneKind::Cb => 1,
            PlaneKind::Cr => 2,
        }
    }

    /// Log2 of the subsampling factor relative to luma.
    pub fn shift(self) -> usize {
        match self {
            PlaneKind::Luma => 0,
            _ => 1,
        }
    }
}

/// A 4:2:0 frame. Planes may be padded beyond the display window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub planes: [Plane; 3],
    pub display_width: usize,
    pub display_height: usize,
}

#[inline]
pub fn chroma_dim(luma: usize) -> usize {
    luma.div_ceil(2)
}

impl Frame {
    pub fn new(width: usize, height: usize, bit_depth: u8) -> Self {
        let mid = 1u16 << (bit_depth - 1);
        Frame {
            planes: [
                Plane::filled(width, height, bit_depth, 0),
                Plane::filled(chroma_dim(width), chroma_dim(height), bit_depth, mid),
                Plane::filled(chroma_dim(width), chroma_dim(height), bit_depth, mid),
            ],
            display_width: width,
            display_height: height,
        }
    }

    pub fn from_planes(luma: Plane, cb: Plane, cr: Plane) -> Result<Self> {
        let (w, h) = (luma.width(), luma.height());
        for c in [&cb, &cr] {
            if c.width() != chroma_dim(w) || c.height() != chroma_dim(h) {
                return Err(Error::DimensionMismatch(format!(
                    "chroma plane {}x{} does not match luma {}x{}",
                    c.width(),
                    c.height(),
                    w,
                    h
                )));
            }
            if c.bit_depth() != luma.bit_depth() {
                return Err(Error::MixedFrames);
            }
        }
        Ok(Frame { planes: [luma, cb, cr], display_width: w, display_height: h })
    }

    #[inline]
    pub fn luma(&self) -> &Plane {
        &self.planes[0]
    }

    #[inline]
    pub fn plane(&self, kind: PlaneKind) -> &Plane {
        &self.planes[kind.index()]
    }

    #[inline]
    pub fn plane_mut(&mut self, kind: PlaneKind) -> &mut Plane {
        &mut self.planes[kind.index()]
    }

    #[inline]
    pub fn bit_depth(&self) -> u8 {
        self.planes[0].bit_depth()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    /// Display window size of the given plane.
    pub fn display_size(&self, kind: PlaneKind) -> (usize, usize) {
        match kind {
            PlaneKind::Luma => (self.display_width, self.display_height),
            _ => (chroma_dim(self.display_width), chroma_dim(self.display_height)),
        }
    }

    /// Planes cropped to the display window.
    pub fn cropped_to_display(&self) -> Frame {
        let planes = PlaneKind::ALL.map(|k| {
            let (w, h) = self.display_size(k);
            self.plane(k).cropped(w, h)
        });
        Frame { planes, display_width: self.display_width, display_height: self.display_height }
    }

    /// Pads the frame so that both luma dimensions are multiples of `align`.
    ///
    /// New samples replicate the nearest edge sample of the display window, so
    /// padding an already padded frame changes nothing.
    pub fn padded_to_multiple(&self, align: usize) -> Frame {
        let width = self.display_width.div_ceil(align) * align;
        let height = self.display_height.div_ceil(align) * align;
        let planes = PlaneKind::ALL.map(|k| {
            let (dw, dh) = self.display_size(k);
            let (pw, ph) = match k {
                PlaneKind::Luma => (width, height),
                _ => (width / 2, height / 2),
            };
            self.plane(k).cropped(dw, dh).padded(pw, ph)
        });
        Frame { planes, display_width: self.display_width, display_height: self.display_height }
    }
}

/// Pads `frame` onto the super-block grid implied by `config`.
pub fn pad_to_scu_grid(frame: &Frame, config: &crate::config::EncoderConfig) -> Frame {
    frame.padded_to_multiple(config.max_scu_width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EncoderConfig;

    fn ramp(width: usize, height: usize) -> Frame {
        let mut f = Frame::new(width, height, 8);
        for y in 0..height {
            for x in 0..width {
                f.planes[0].set(x, y, ((x + 3 * y) % 256) as u16);
            }
        }
        f
    }

    #[test]
    fn aligned_frame_is_unchanged() {
        let cfg = EncoderConfig { max_scu_width: 64, max_scu_height: 64, ..EncoderConfig::default() };
        let f = ramp(64, 64);
        assert_eq!(pad_to_scu_grid(&f, &cfg), f);
    }

    #[test]
    fn padding_replicates_the_last_column() {
        let cfg = EncoderConfig { max_scu_width: 64, max_scu_height: 64, ..EncoderConfig::default() };
        let f = ramp(65, 64);
        let p = pad_to_scu_grid(&f, &cfg);
        assert_eq!((p.width(), p.height()), (128, 64));
        assert_eq!((p.display_width, p.display_height), (65, 64));
        for y in 0..64 {
            for x in 64..128 {
                assert_eq!(p.luma().get(x, y), f.luma().get(64, y));
            }
        }
        assert_eq!((p.planes[1].width(), p.planes[1].height()), (64, 32));
    }

    #[test]
    fn uhd_frame_pads_to_256_grid() {
        let f = Frame::new(1920, 1080, 8);
        let p = f.padded_to_multiple(256);
        assert_eq!((p.width(), p.height()), (2048, 1280));
    }

    #[test]
    fn block_access_windows() {
        let f = ramp(8, 4);
        let whole = f.luma().read_block(0, 0, 8, 4).unwrap();
        assert_eq!(whole.data, f.luma().samples());
        let one = f.luma().read_block(0, 0, 1, 1).unwrap();
        assert_eq!(one.data, vec![f.luma().get(0, 0)]);
        assert!(matches!(f.luma().read_block(6, 0, 3, 1), Err(Error::BlockOutOfBounds { .. })));

        let mut p = f.luma().clone();
        p.write_block(2, 1, &Block::filled(3, 2, 9)).unwrap();
        assert_eq!(p.read_block(2, 1, 3, 2).unwrap(), Block::filled(3, 2, 9));
        assert!(p.write_block(7, 3, &Block::filled(2, 2, 0)).is_err());
    }

    #[test]
    fn from_samples_rejects_out_of_range() {
        assert!(Plane::from_samples(1, 1, 10, vec![1024]).is_err());
        assert!(Plane::from_samples(1, 1, 10, vec![1023]).is_ok());
        assert!(Plane::from_samples(2, 1, 8, vec![1]).is_err());
    }

    #[test]
    fn margin_replicates_edges() {
        let p = Plane::from_samples(2, 2, 8, vec![1, 2, 3, 4]).unwrap();
        let m = p.with_margin(2);
        assert_eq!((m.width(), m.height()), (6, 6));
        assert_eq!(m.get(0, 0), 1);
        assert_eq!(m.get(5, 5), 4);
        assert_eq!(m.get(3, 2), 2);
    }
}
