//! Quality and rate evaluation: PSNR, Bjøntegaard delta rate, CSV reports
//! and QP sweeps.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::config::EncoderConfig;
use crate::encoder::{encode_sequence, FrameStats};
use crate::error::{Error, Result};
use crate::frame::{Frame, Plane, PlaneKind};

/// Reported PSNR for identical planes.
pub const PSNR_CAP: f64 = 999.99;

/// Standard sweep points.
pub const SWEEP_QPS: [u8; 4] = [22, 27, 32, 37];

fn check_window(orig: &Plane, rec: &Plane, display: (usize, usize)) -> Result<()> {
    if orig.bit_depth() != rec.bit_depth() {
        return Err(Error::DimensionMismatch(format!("bit depths {} and {}", orig.bit_depth(), rec.bit_depth())));
    }
    let (w, h) = display;
    if w == 0 || h == 0 || w > orig.width().min(rec.width()) || h > orig.height().min(rec.height()) {
        return Err(Error::DimensionMismatch(format!(
            "window {w}x{h} does not fit planes {}x{} and {}x{}",
            orig.width(),
            orig.height(),
            rec.width(),
            rec.height()
        )));
    }
    Ok(())
}

fn window_sse(orig: &Plane, rec: &Plane, (w, h): (usize, usize)) -> u64 {
    let mut sse = 0u64;
    for y in 0..h {
        for (&a, &b) in orig.row(y)[..w].iter().zip(&rec.row(y)[..w]) {
            let d = i64::from(a) - i64::from(b);
            sse += (d * d) as u64;
        }
    }
    sse
}

fn psnr_from_sse(sse: u64, samples: usize, bit_depth: u8) -> f64 {
    if sse == 0 {
        return PSNR_CAP;
    }
    let mse = sse as f64 / samples as f64;
    let peak = f64::from((1u32 << bit_depth) - 1);
    10.0 * (peak * peak / mse).log10()
}

/// PSNR in dB over the top-left `display` window of both planes, capped at
/// [`PSNR_CAP`] when they match exactly.
pub fn psnr(orig: &Plane, rec: &Plane, display: (usize, usize)) -> Result<f64> {
    check_window(orig, rec, display)?;
    Ok(psnr_from_sse(window_sse(orig, rec, display), display.0 * display.1, orig.bit_depth()))
}

/// Luma, Cb and Cr PSNR of two frames over the first frame's display window.
pub fn frame_psnr(orig: &Frame, rec: &Frame) -> Result<[f64; 3]> {
    if (orig.display_width, orig.display_height) != (rec.display_width, rec.display_height) {
        return Err(Error::DimensionMismatch(format!(
            "display {}x{} vs {}x{}",
            orig.display_width, orig.display_height, rec.display_width, rec.display_height
        )));
    }
    let mut out = [0.0; 3];
    for k in PlaneKind::ALL {
        out[k.index()] = psnr(orig.plane(k), rec.plane(k), orig.display_size(k))?;
    }
    Ok(out)
}

/// Per-plane PSNR of a whole sequence from the pooled squared error.
pub fn sequence_psnr(orig: &[Frame], rec: &[Frame]) -> Result<[f64; 3]> {
    if orig.len() != rec.len() || orig.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} vs {} frames", orig.len(), rec.len())));
    }
    let mut out = [0.0; 3];
    for k in PlaneKind::ALL {
        let (mut sse, mut n) = (0u64, 0usize);
        for (a, b) in orig.iter().zip(rec) {
            let win = a.display_size(k);
            check_window(a.plane(k), b.plane(k), win)?;
            sse += window_sse(a.plane(k), b.plane(k), win);
            n += win.0 * win.1;
        }
        out[k.index()] = psnr_from_sse(sse, n, orig[0].bit_depth());
    }
    Ok(out)
}

pub fn is_lossless(db: f64) -> bool {
    db == PSNR_CAP
}

/// One rate-distortion point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    pub qp: u8,
    /// Total bits.
    pub bits: f64,
    /// Luma, Cb and Cr PSNR of the sequence.
    pub psnr: [f64; 3],
}

/// Rate-distortion points of one configuration, sorted by rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(mut points: Vec<RdPoint>) -> Result<Self> {
        points.sort_by(|a, b| a.bits.total_cmp(&b.bits));
        if points.len() < 4 {
            return Err(Error::BdRate(format!("need at least 4 points, got {}", points.len())));
        }
        if points.iter().any(|p| p.bits.is_nan() || p.bits <= 0.0 || p.psnr.iter().any(|v| !v.is_finite())) {
            return Err(Error::BdRate("rates must be positive and PSNR finite".into()));
        }
        if points.windows(2).any(|w| w[0].bits >= w[1].bits) {
            return Err(Error::BdRate("rates must be strictly increasing".into()));
        }
        Ok(RdCurve { points })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["qp", "bits", "psnrY", "psnrU", "psnrV"]).expect("in-memory write");
        for p in &self.points {
            w.write_record([
                p.qp.to_string(),
                format!("{}", p.bits),
                format!("{:.4}", p.psnr[0]),
                format!("{:.4}", p.psnr[1]),
                format!("{:.4}", p.psnr[2]),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    pub fn from_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let bad = |e: csv::Error| Error::BdRate(format!("curve csv: {e}"));
        let headers = r.headers().map_err(bad)?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::BdRate(format!("curve csv lacks column `{name}`")))
        };
        let (cq, cb) = (col("qp")?, col("bits")?);
        let cp = [col("psnrY")?, col("psnrU")?, col("psnrV")?];
        let mut points = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(bad)?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::BdRate(format!("bad number in curve row {:?}", rec.get(i))))
            };
            points.push(RdPoint { qp: num(cq)? as u8, bits: num(cb)?, psnr: [num(cp[0])?, num(cp[1])?, num(cp[2])?] });
        }
        RdCurve::new(points)
    }
}

/// Least-squares cubic through (x, y); coefficients from constant upward.
fn cubic_fit(x: &[f64], y: &[f64]) -> Result<[f64; 4]> {
    let a = DMatrix::from_fn(x.len(), 4, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-12).map_err(|e| Error::BdRate(format!("polynomial fit failed: {e}")))?;
    Ok([sol[0], sol[1], sol[2], sol[3]])
}

fn integral(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let prim = |x: f64| c[0] * x + c[1] * x * x / 2.0 + c[2] * x.powi(3) / 3.0 + c[3] * x.powi(4) / 4.0;
    prim(hi) - prim(lo)
}

/// Bjøntegaard delta rate in percent of `test` against `anchor` for one
/// component (0 = Y, 1 = Cb, 2 = Cr). Negative means `test` needs fewer bits
/// for the same quality.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve, component: usize) -> Result<f64> {
    if component > 2 {
        return Err(Error::BdRate(format!("component {component} out of range")));
    }
    let series =
        |c: &RdCurve| -> (Vec<f64>, Vec<f64>) { c.points.iter().map(|p| (p.psnr[component], p.bits.log10())).unzip() };
    let (pa, ra) = series(anchor);
    let (pt, rt) = series(test);
    let range = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (a_lo, a_hi) = range(&pa);
    let (t_lo, t_hi) = range(&pt);
    let (lo, hi) = (a_lo.max(t_lo), a_hi.min(t_hi));
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::BdRate(format!(
            "PSNR ranges do not overlap ([{a_lo:.2}, {a_hi:.2}] vs [{t_lo:.2}, {t_hi:.2}])"
        )));
    }
    // centre the abscissa for conditioning; both fits share the shift
    let mid = (lo + hi) / 2.0;
    let shift = |v: &[f64]| v.iter().map(|x| x - mid).collect::<Vec<_>>();
    let fa = cubic_fit(&shift(&pa), &ra)?;
    let ft = cubic_fit(&shift(&pt), &rt)?;
    let (l, h) = (lo - mid, hi - mid);
    let avg = (integral(&ft, l, h) - integral(&fa, l, h)) / (h - l);
    Ok((10f64.powf(avg) - 1.0) * 100.0)
}

/// BD-rate for all three components.
pub fn bd_rate_all(anchor: &RdCurve, test: &RdCurve) -> Result<[f64; 3]> {
    Ok([bd_rate(anchor, test, 0)?, bd_rate(anchor, test, 1)?, bd_rate(anchor, test, 2)?])
}

/// Per-frame report columns.
pub const REPORT_COLUMNS: [&str; 12] = [
    "frame",
    "type",
    "bits",
    "psnrY",
    "psnrU",
    "psnrV",
    "sao_bits",
    "alf_bits",
    "mode_flag_bits",
    "direct_count",
    "quadtree_count",
    "lossless",
];

/// Planes at the PSNR cap, e.g. `"YUV"`, empty when none.
fn lossless_marker(psnr: &[f64; 3]) -> String {
    psnr.iter().zip(["Y", "U", "V"]).filter(|(v, _)| is_lossless(**v)).map(|(_, n)| n).collect()
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes the per-frame report as CSV.
pub fn emit_report(stats: &[FrameStats], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS).map_err(csv_io)?;
    for s in stats {
        w.write_record([
            s.index.to_string(),
            s.frame_type.label().to_string(),
            s.bits.to_string(),
            format!("{:.4}", s.psnr[0]),
            format!("{:.4}", s.psnr[1]),
            format!("{:.4}", s.psnr[2]),
            s.sao_bits.to_string(),
            s.alf_bits.to_string(),
            s.mode_flag_bits.to_string(),
            s.direct_count.to_string(),
            s.quadtree_count.to_string(),
            lossless_marker(&s.psnr),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_string(stats: &[FrameStats]) -> String {
    let mut buf = Vec::new();
    emit_report(stats, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("ascii csv")
}

/// Per-frame PSNR table of two sequences plus an `average` row holding the
/// pooled sequence PSNR.
pub fn psnr_report(orig: &[Frame], rec: &[Frame], out: impl Write) -> Result<[f64; 3]> {
    let pooled = sequence_psnr(orig, rec)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "psnrY", "psnrU", "psnrV", "lossless"]).map_err(csv_io)?;
    let row = |label: String, p: &[f64; 3]| {
        [label, format!("{:.4}", p[0]), format!("{:.4}", p[1]), format!("{:.4}", p[2]), lossless_marker(p)]
    };
    for (i, (a, b)) in orig.iter().zip(rec).enumerate() {
        w.write_record(row(i.to_string(), &frame_psnr(a, b)?)).map_err(csv_io)?;
    }
    w.write_record(row("average".into(), &pooled)).map_err(csv_io)?;
    w.flush()?;
    Ok(pooled)
}

/// Encodes `frames` at each QP and returns the resulting curve; PSNR pools
/// the squared error of the whole sequence.
pub fn sweep(frames: &[Frame], base: &EncoderConfig, qps: &[u8]) -> Result<RdCurve> {
    let mut points = Vec::with_capacity(qps.len());
    for &qp in qps {
        let cfg = EncoderConfig { qp, ..base.clone() };
        let seq = encode_sequence(frames, &cfg)?;
        let psnr = sequence_psnr(frames, &seq.recon())?;
        points.push(RdPoint { qp, bits: seq.total_bits() as f64, psnr });
    }
    RdCurve::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> RdCurve {
        RdCurve::new(vec![
            RdPoint { qp: 37, bits: 1000.0, psnr: [30.0, 38.0, 39.0] },
            RdPoint { qp: 32, bits: 1900.0, psnr: [33.1, 40.0, 40.5] },
            RdPoint { qp: 27, bits: 3700.0, psnr: [36.0, 42.2, 42.1] },
            RdPoint { qp: 22, bits: 7300.0, psnr: [39.2, 44.0, 44.3] },
        ])
        .unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = Plane::filled(4, 4, 8, 100);
        assert_eq!(psnr(&a, &a, (4, 4)).unwrap(), PSNR_CAP);
        let mut b = a.clone();
        for v in b.samples_mut() {
            *v += 1;
        }
        assert!((psnr(&a, &b, (4, 4)).unwrap() - 48.13).abs() < 0.01);
        let a10 = Plane::filled(4, 4, 10, 500);
        let b10 = Plane::filled(4, 4, 10, 501);
        assert!((psnr(&a10, &b10, (4, 4)).unwrap() - 60.20).abs() < 0.01);
        assert!(psnr(&a, &a10, (4, 4)).is_err());
        assert!(psnr(&a, &b, (5, 4)).is_err());
    }

    #[test]
    fn pooled_psnr() {
        let a = Frame::new(8, 8, 8);
        let mut b = a.clone();
        for v in b.planes[0].samples_mut() {
            *v += 2;
        }
        let p = sequence_psnr(&[a.clone(), a.clone()], &[a.clone(), b]).unwrap();
        // MSE 4 in one frame, 0 in the other
        assert!((p[0] - 10.0 * (255.0f64 * 255.0 / 2.0).log10()).abs() < 1e-9);
        assert_eq!(p[1], PSNR_CAP);
    }

    #[test]
    fn bd_rate_identity_and_shift() {
        let a = curve();
        assert_eq!(bd_rate(&a, &a, 0).unwrap(), 0.0);
        let mut b = a.clone();
        for p in &mut b.points {
            p.bits *= 0.95;
        }
        for c in 0..3 {
            assert!((bd_rate(&a, &b, c).unwrap() + 5.0).abs() < 0.1);
            assert!(bd_rate(&b, &a, c).unwrap() > 0.0);
        }
    }

    #[test]
    fn bd_rate_rejects_bad_curves() {
        let a = curve();
        let mut far = a.clone();
        for p in &mut far.points {
            p.psnr = p.psnr.map(|v| v + 50.0);
        }
        assert!(bd_rate(&a, &far, 0).is_err());
        assert!(RdCurve::new(a.points[..3].to_vec()).is_err());
    }

    #[test]
    fn curve_csv_round_trip() {
        let a = curve();
        let back = RdCurve::from_csv(a.to_csv().as_bytes()).unwrap();
        assert_eq!(back.points.len(), 4);
        assert!(bd_rate(&a, &back, 0).unwrap().abs() < 1e-6);
    }
}
