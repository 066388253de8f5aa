//! Deterministic synthetic test clips.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::{chroma_dim, Frame, Plane, PlaneKind};

/// Clip families used by the conformance and evaluation suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Clip {
    /// Flat areas next to moving noise.
    FlatNoise,
    /// Smooth texture panning by (2, 1) samples per frame.
    TranslatingTexture,
    /// Diagonal ramp with a slow brightness drift.
    GradientRamp,
}

impl Clip {
    pub const ALL: [Clip; 3] = [Clip::FlatNoise, Clip::TranslatingTexture, Clip::GradientRamp];

    pub fn name(self) -> &'static str {
        match self {
            Clip::FlatNoise => "flat_noise",
            Clip::TranslatingTexture => "translating_texture",
            Clip::GradientRamp => "gradient_ramp",
        }
    }
}

/// Lifts an 8-bit value to `bit_depth`, filling new low bits from `rng`.
fn render(v: i32, bit_depth: u8, rng: &mut ChaCha8Rng) -> u16 {
    let v = v.clamp(0, 255) as u16;
    match bit_depth {
        8 => v,
        b => {
            let s = b - 8;
            (v << s) | rng.gen_range(0..1u16 << s)
        }
    }
}

fn build(w: usize, h: usize, bit_depth: u8, seed: u64, f: impl Fn(PlaneKind, usize, usize) -> i32) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes = PlaneKind::ALL.map(|k| {
        let (pw, ph) = match k {
            PlaneKind::Luma => (w, h),
            _ => (chroma_dim(w), chroma_dim(h)),
        };
        let data = (0..pw * ph).map(|i| render(f(k, i % pw, i / pw), bit_depth, &mut rng)).collect();
        Plane::from_samples(pw, ph, bit_depth, data).expect("sized plane")
    });
    let [y, u, v] = planes;
    Frame::from_planes(y, u, v).expect("consistent planes")
}

fn noise_field(w: usize, h: usize, seed: u64) -> Vec<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..w * h).map(|_| rng.gen_range(-40..=40)).collect()
}

/// Renders `frames` frames of `clip` at `w`x`h`.
pub fn clip(clip: Clip, w: usize, h: usize, frames: usize, bit_depth: u8, seed: u64) -> Vec<Frame> {
    let margin = 2 * frames + 2;
    let (fw, fh) = (w + margin, h + margin);
    let field = noise_field(fw, fh, seed);
    (0..frames)
        .map(|t| {
            let fseed = seed.wrapping_mul(0x9E37_79B9).wrapping_add(t as u64);
            match clip {
                Clip::FlatNoise => build(w, h, bit_depth, fseed, |k, x, y| {
                    let s = k.shift();
                    let (lx, ly) = (x << s, y << s);
                    // flat left half and bottom band; noise elsewhere drifts one sample per frame
                    let flat = lx < w / 2 || ly >= h * 3 / 4;
                    if flat {
                        return match k {
                            PlaneKind::Luma => 96,
                            PlaneKind::Cb => 120,
                            PlaneKind::Cr => 136,
                        };
                    }
                    let n = field[(ly % fh) * fw + (lx + t) % fw];
                    match k {
                        PlaneKind::Luma => 150 + n,
                        PlaneKind::Cb => 128 + n / 2,
                        PlaneKind::Cr => 128 - n / 2,
                    }
                }),
                Clip::TranslatingTexture => build(w, h, bit_depth, fseed, |k, x, y| {
                    let s = k.shift();
                    let (gx, gy) = ((x << s) + 2 * t, (y << s) + t);
                    let a = ((gx as f64 / 9.0).sin() * 40.0 + (gy as f64 / 13.0).cos() * 30.0) as i32;
                    let b = field[(gy % fh) * fw + gx % fw] / 8;
                    let checker = if (gx / 24 + gy / 24) % 2 == 0 { 20 } else { -20 };
                    match k {
                        PlaneKind::Luma => 128 + a + b + checker,
                        PlaneKind::Cb => 128 + a / 3,
                        PlaneKind::Cr => 128 - checker / 2,
                    }
                }),
                Clip::GradientRamp => build(w, h, bit_depth, fseed, |k, x, y| {
                    let s = k.shift();
                    let (lx, ly) = (x << s, y << s);
                    let base = (lx * 160 / w.max(1) + ly * 60 / h.max(1)) as i32 + 16 + t as i32;
                    match k {
                        PlaneKind::Luma => base,
                        PlaneKind::Cb => 96 + (lx * 64 / w.max(1)) as i32,
                        PlaneKind::Cr => 160 - (ly * 64 / h.max(1)) as i32,
                    }
                }),
            }
        })
        .collect()
}

/// One flat super-block followed by one made of independent random 8x8
/// blocks, side by side.
pub fn flat_and_noise_frame(scu: usize, bit_depth: u8, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = scu / 8;
    let blocks: Vec<i32> = (0..cells * cells).map(|_| rng.gen_range(16..=240)).collect();
    build(2 * scu, scu, bit_depth, seed ^ 0x5A5A, |k, x, y| {
        let s = k.shift();
        let (lx, ly) = (x << s, y << s);
        if lx < scu {
            return 128;
        }
        let v = blocks[(ly / 8) * cells + (lx - scu) / 8];
        match k {
            PlaneKind::Luma => v,
            _ => 128 + (v - 128) / 4,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clips_are_deterministic_and_sized() {
        for c in Clip::ALL {
            let a = clip(c, 64, 48, 3, 8, 7);
            let b = clip(c, 64, 48, 3, 8, 7);
            assert_eq!(a, b);
            assert_eq!(a.len(), 3);
            assert_eq!((a[0].width(), a[0].height()), (64, 48));
            assert_ne!(a[0], a[1], "{}", c.name());
        }
    }

    #[test]
    fn ten_bit_rendering_keeps_the_8_bit_picture() {
        let a = clip(Clip::FlatNoise, 32, 32, 1, 8, 3);
        let b = clip(Clip::FlatNoise, 32, 32, 1, 10, 3);
        for (p, q) in a[0].luma().samples().iter().zip(b[0].luma().samples()) {
            assert_eq!(*p, q >> 2);
        }
    }

    #[test]
    fn flat_and_noise_layout() {
        let f = flat_and_noise_frame(64, 8, 1);
        assert_eq!((f.width(), f.height()), (128, 64));
        assert!(f.luma().row(10)[..64].iter().all(|&v| v == 128));
        assert!(f.luma().row(10)[64..].iter().any(|&v| v != f.luma().get(64, 10)));
    }
}
