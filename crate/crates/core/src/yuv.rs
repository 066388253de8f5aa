//! Raw planar I420 reading and writing.
//!
//! Frames are stored back to back as Y, then U, then V. 8-bit video uses one
//! byte per sample; 10-bit video uses two bytes, little-endian, LSB aligned.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{check_bit_depth, chroma_dim, Frame, Plane};

fn frame_bytes(width: usize, height: usize, bit_depth: u8) -> usize {
    let samples = width * height + 2 * chroma_dim(width) * chroma_dim(height);
    samples * if bit_depth > 8 { 2 } else { 1 }
}

fn decode_plane(bytes: &[u8], width: usize, height: usize, bit_depth: u8) -> Result<Plane> {
    let data: Vec<u16> = if bit_depth > 8 {
        bytes.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect()
    } else {
        bytes.iter().map(|&b| u16::from(b)).collect()
    };
    Plane::from_samples(width, height, bit_depth, data)
}

/// Reads `frame_count` frames from an in-memory I420 buffer.
pub fn parse_yuv(bytes: &[u8], width: usize, height: usize, bit_depth: u8, frame_count: usize) -> Result<Vec<Frame>> {
    check_bit_depth(bit_depth)?;
    let per_frame = frame_bytes(width, height, bit_depth);
    let bps = if bit_depth > 8 { 2 } else { 1 };
    let (cw, ch) = (chroma_dim(width), chroma_dim(height));
    let mut frames = Vec::with_capacity(frame_count);
    for index in 0..frame_count {
        let start = index * per_frame;
        let chunk = bytes.get(start..start + per_frame).ok_or(Error::TruncatedYuv { frame: index })?;
        let (y, rest) = chunk.split_at(width * height * bps);
        let (u, v) = rest.split_at(cw * ch * bps);
        frames.push(Frame::from_planes(
            decode_plane(y, width, height, bit_depth)?,
            decode_plane(u, cw, ch, bit_depth)?,
            decode_plane(v, cw, ch, bit_depth)?,
        )?);
    }
    Ok(frames)
}

pub fn read_yuv(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    bit_depth: u8,
    frame_count: usize,
) -> Result<Vec<Frame>> {
    check_bit_depth(bit_depth)?;
    let needed = frame_bytes(width, height, bit_depth) * frame_count;
    let mut bytes = Vec::with_capacity(needed);
    BufReader::new(File::open(path)?).take(needed as u64).read_to_end(&mut bytes)?;
    parse_yuv(&bytes, width, height, bit_depth, frame_count)
}

/// Number of whole frames in a file of `len` bytes.
pub fn frames_in_len(len: u64, width: usize, height: usize, bit_depth: u8) -> usize {
    (len / frame_bytes(width, height, bit_depth) as u64) as usize
}

/// Serializes frames (cropped to their display window) as I420 bytes.
pub fn encode_yuv(frames: &[Frame]) -> Result<Vec<u8>> {
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let key = |f: &Frame| (f.display_width, f.display_height, f.bit_depth());
    if frames.iter().any(|f| key(f) != key(first)) {
        return Err(Error::MixedFrames);
    }
    let (w, h, bd) = key(first);
    let mut out = Vec::with_capacity(frame_bytes(w, h, bd) * frames.len());
    for frame in frames {
        let cropped = frame.cropped_to_display();
        for plane in &cropped.planes {
            if bd > 8 {
                for &s in plane.samples() {
                    out.extend_from_slice(&s.to_le_bytes());
                }
            } else {
                out.extend(plane.samples().iter().map(|&s| s as u8));
            }
        }
    }
    Ok(out)
}

pub fn write_yuv(frames: &[Frame], path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_yuv(frames)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}
