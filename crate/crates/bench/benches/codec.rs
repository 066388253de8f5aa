use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sbc_core::alf::decide_frame_alf;
use sbc_core::frame::pad_to_scu_grid;
use sbc_core::sao::decide_frame_sao;
use sbc_core::synth::{clip, Clip};
use sbc_core::xform::{
    core_matrix, dequantize, derive_quant_params, forward_transform, inverse_transform, quantize, ResidualBlock,
    SUPPORTED_SIZES,
};
use sbc_core::{decode_stream, encode_sequence, Encoder, EncoderConfig, Frame, SaoConfig};

const SIDE: usize = 256;

fn frames(n: usize) -> Vec<Frame> {
    clip(Clip::TranslatingTexture, SIDE, SIDE, n, 8, 1)
}

fn transform(c: &mut Criterion) {
    let mut g = c.benchmark_group("transform_chain");
    for n in SUPPORTED_SIZES {
        let m = core_matrix(n).unwrap();
        let q = derive_quant_params(32, true, n, 8).unwrap();
        let x = ResidualBlock::new(n, (0..n * n).map(|i| (i as i32 * 37 % 255) - 127).collect());
        g.throughput(Throughput::Elements((n * n) as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| {
                let y = forward_transform(black_box(x), m, 8).unwrap();
                inverse_transform(&dequantize(&quantize(&y, &q), &q), m, 8).unwrap()
            })
        });
    }
    g.finish();
}

/// Original and first-pass reconstruction of a QP37 intra frame.
fn coded_pair(cfg: &EncoderConfig) -> (Frame, Frame) {
    let src = frames(1);
    let plain = EncoderConfig { sao_mode: SaoConfig::Off, alf_enabled: false, qp: 37, ..cfg.clone() };
    let rec = encode_sequence(&src, &plain).unwrap().recon();
    (pad_to_scu_grid(&src[0], cfg), pad_to_scu_grid(&rec[0], cfg))
}

fn sao(c: &mut Criterion) {
    let cfg = EncoderConfig::default();
    let (orig, rec) = coded_pair(&cfg);
    let mut g = c.benchmark_group("sao_decide_frame");
    for mode in [SaoConfig::FixedBlock, SaoConfig::AdaptiveBlock] {
        g.bench_function(mode.to_string(), |b| {
            b.iter(|| decide_frame_sao(&orig, &rec, mode, cfg.sao_block_size, cfg.max_scu_width, 50.0))
        });
    }
    g.finish();
}

fn alf(c: &mut Criterion) {
    let cfg = EncoderConfig::default();
    let (orig, rec) = coded_pair(&cfg);
    let cells: Vec<Vec<_>> = (0..4)
        .map(|i| {
            let (x, y) = (i % 2 * 128, i / 2 * 128);
            vec![(x, y, 64), (x + 64, y, 64), (x, y + 64, 64), (x + 64, y + 64, 64)]
        })
        .collect();
    c.bench_function("alf_decide_frame", |b| b.iter(|| decide_frame_alf(&orig, &rec, &cells, 50.0)));
}

fn encode(c: &mut Criterion) {
    let src = frames(2);
    let mut g = c.benchmark_group("encode_frame");
    g.sample_size(10);
    for (name, direct) in [("direct_depth_1", 1), ("bypass", 4)] {
        let cfg = EncoderConfig { max_direct_partition_depth: direct, ..EncoderConfig::default() };
        g.bench_function(BenchmarkId::new("intra", name), |b| {
            b.iter(|| Encoder::new(cfg.clone(), SIDE, SIDE, 1).unwrap().encode_frame(&src[0]).unwrap())
        });
        g.bench_function(BenchmarkId::new("inter", name), |b| {
            b.iter_batched(
                || {
                    let mut e = Encoder::new(cfg.clone(), SIDE, SIDE, 2).unwrap();
                    e.encode_frame(&src[0]).unwrap();
                    e
                },
                |mut e| e.encode_frame(&src[1]).unwrap(),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

fn decode(c: &mut Criterion) {
    let stream = encode_sequence(&frames(4), &EncoderConfig::default()).unwrap().stream;
    let mut g = c.benchmark_group("decode");
    g.throughput(Throughput::Bytes(stream.len() as u64));
    g.bench_function("four_frames", |b| b.iter(|| decode_stream(black_box(&stream)).unwrap()));
    g.finish();
}

criterion_group!(benches, transform, sao, alf, encode, decode);
criterion_main!(benches);
