use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sbc_core::synth::{clip, Clip};
use sbc_core::yuv::write_yuv;

fn sbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_clip(dir: &Path, name: &str, c: Clip, frames: usize) -> PathBuf {
    let path = dir.join(name);
    write_yuv(&clip(c, 64, 48, frames, 8, 3), &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 8] = ["--width", "64", "--height", "48", "--scu", "32", "--depth", "2"];

#[test]
fn encode_then_decode_matches_recon() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_clip(dir.path(), "in.yuv", Clip::TranslatingTexture, 3);
    let (stream, recon, stats, out) = (
        dir.path().join("a.sbc"),
        dir.path().join("recon.yuv"),
        dir.path().join("stats.csv"),
        dir.path().join("out.yuv"),
    );
    let o = sbc(&[
        "encode",
        "-i",
        s(&input),
        "--width",
        "64",
        "--height",
        "48",
        "--qp",
        "32",
        "--scu",
        "256",
        "--direct-depth",
        "2",
        "--depth",
        "5",
        "--sao",
        "adaptive",
        "--alf",
        "on",
        "-o",
        s(&stream),
        "--recon",
        s(&recon),
        "--stats",
        s(&stats),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo = stdout(&o);
    assert!(echo.starts_with("# sbc encode\n# maxScuWidth=256\n"));
    assert!(echo.contains("# maxDirectPartitionDepth=2\n"));

    let csv = fs::read_to_string(&stats).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("frame,type,bits,psnrY,psnrU,psnrV,sao_bits,alf_bits,mode_flag_bits,direct_count,quadtree_count,lossless")
    );
    assert_eq!(lines.count(), 3);

    let o = sbc(&["decode", "-i", s(&stream), "-o", s(&out)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("# width=64\n# height=48\n# frames=3\n"));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&recon).unwrap());
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_clip(dir.path(), "in.yuv", Clip::FlatNoise, 2);
    let run = |tag: &str| {
        let stream = dir.path().join(format!("{tag}.sbc"));
        let o = sbc(&[&["encode", "-i", s(&input), "-o", s(&stream)], &SMALL[..]].concat());
        assert!(o.status.success());
        (stdout(&o), fs::read(&stream).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert!(a.0.contains("frame,type,bits"), "stats go to stdout without --stats");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_clip(dir.path(), "in.yuv", Clip::GradientRamp, 2);
    let cfg = dir.path().join("enc.cfg");
    fs::write(&cfg, "# test config\nmaxScuWidth=32\nmaxScuHeight=32\nmaxPartitionDepth=2\nqp=22\nsaoMode=fixed\n")
        .unwrap();
    let stream = dir.path().join("a.sbc");
    let o = sbc(&[
        "encode",
        "-i",
        s(&input),
        "--width",
        "64",
        "--height",
        "48",
        "--config",
        s(&cfg),
        "--qp",
        "37",
        "-o",
        s(&stream),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo = stdout(&o);
    assert!(echo.contains("# qp=37\n"));
    assert!(echo.contains("# saoMode=fixed\n"));
    assert!(echo.contains("# maxScuWidth=32\n"));
}

#[test]
fn invalid_depths_are_rejected_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_clip(dir.path(), "in.yuv", Clip::FlatNoise, 1);
    let stream = dir.path().join("a.sbc");
    let o = sbc(&[
        "encode",
        "-i",
        s(&input),
        "--width",
        "64",
        "--height",
        "48",
        "--direct-depth",
        "3",
        "--depth",
        "2",
        "-o",
        s(&stream),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("maxDirectPartitionDepth"));
    assert!(o.stdout.is_empty());
    assert!(!stream.exists());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sbc(&["encode", "--bogus"]).status.code(), Some(1));
    assert_eq!(sbc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sbc(&[]).status.code(), Some(1));
    let o = sbc(&["encode", "-i", "x.yuv", "--width", "64", "--height", "48", "-o", "x.sbc", "--sao", "sometimes"]);
    assert_eq!(o.status.code(), Some(1));
    let help = sbc(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("sweep"));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.yuv");
    let stream = dir.path().join("a.sbc");
    let o = sbc(&[&["encode", "-i", s(&missing), "-o", s(&stream)], &SMALL[..]].concat());
    assert_eq!(o.status.code(), Some(2));

    let junk = dir.path().join("junk.sbc");
    fs::write(&junk, b"not a stream").unwrap();
    let o = sbc(&["decode", "-i", s(&junk), "-o", s(&dir.path().join("out.yuv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));

    let short = dir.path().join("short.yuv");
    fs::write(&short, [0u8; 100]).unwrap();
    let o = sbc(&[&["encode", "-i", s(&short), "-o", s(&stream)], &SMALL[..]].concat());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn psnr_of_identical_files_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_clip(dir.path(), "a.yuv", Clip::FlatNoise, 2);
    let o = sbc(&["psnr", "--reference", s(&a), "--test", s(&a), "--width", "64", "--height", "48"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("frame,psnrY,psnrU,psnrV,lossless"));
    assert!(out.contains("average,999.9900,999.9900,999.9900,YUV"));
}

#[test]
fn sweep_then_bdrate() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_clip(dir.path(), "in.yuv", Clip::TranslatingTexture, 2);
    let curve = |sao: &str| {
        let path = dir.path().join(format!("{sao}.csv"));
        let o = sbc(&[&["sweep", "-i", s(&input), "--sao", sao, "--alf", "off", "-o", s(&path)], &SMALL[..]].concat());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("# qps=22,27,32,37\n"));
        path
    };
    let (fixed, adaptive) = (curve("fixed"), curve("adaptive"));
    assert_eq!(fs::read_to_string(&fixed).unwrap().lines().count(), 5);

    let o = sbc(&["bdrate", "--anchor", s(&fixed), "--test", s(&adaptive)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let rows: Vec<f64> = out
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("component"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|v| v.is_finite()));

    let o = sbc(&["bdrate", "--anchor", s(&fixed), "--test", s(&fixed)]);
    assert!(stdout(&o).contains("Y,0.0000\nU,0.0000\nV,0.0000\n"));
}

#[test]
fn bdrate_rejects_short_curves() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.csv");
    fs::write(&c, "qp,bits,psnrY,psnrU,psnrV\n22,1000,40,42,42\n27,500,37,40,40\n").unwrap();
    assert_eq!(sbc(&["bdrate", "--anchor", s(&c), "--test", s(&c)]).status.code(), Some(2));
}
