//! Sequential vs. rayon-parallel kernels.
//!
//! The crate's hot loops (sparse matvec, EED tensor assembly, batched
//! echoes, Gaussian smoothing) are order-preserving maps, so both paths
//! produce bit-identical results; this suite measures what the parallel
//! feature buys at typical grid sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use inpaintopt::grid::{Image, Mask, Seed};
use inpaintopt::inpaint::SolverConfig;
use inpaintopt::operators::{assemble_biharmonic, assemble_laplacian, EedParams};
use inpaintopt::parbench;
use inpaintopt::rng::Pcg32;

fn test_image(n: usize) -> Image {
    let mut rng = Pcg32::new(Seed(1));
    Image::new(n, n, (0..n * n).map(|_| rng.unit() * 255.0).collect()).unwrap()
}

fn test_mask(n: usize, density: f64) -> Mask {
    let mut rng = Pcg32::new(Seed(2));
    let k = ((n * n) as f64 * density) as usize;
    let mut pool: Vec<usize> = (0..n * n).collect();
    let idx = inpaintopt::rng::sample_without_replacement(&mut pool, k, &mut rng);
    Mask::from_indices(n, n, &idx).unwrap()
}

fn bench_matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    for n in [64usize, 128] {
        let op = assemble_biharmonic(n, n).unwrap();
        let x: Vec<f64> = (0..n * n).map(|i| (i as f64).sin()).collect();
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, _| {
            b.iter(|| parbench::apply_seq(&op, &x))
        });
        group.bench_with_input(BenchmarkId::new("par", n), &n, |b, _| {
            b.iter(|| parbench::apply_par(&op, &x))
        });
    }
    group.finish();
}

fn bench_eed_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("eed_assembly");
    for n in [64usize, 128] {
        let img = test_image(n);
        group.bench_with_input(BenchmarkId::new("assemble", n), &n, |b, _| {
            b.iter(|| parbench::eed_assemble(&img, EedParams::default()))
        });
    }
    group.finish();
}

fn bench_echo_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("echo_batch");
    group.sample_size(10);
    let n = 32;
    let mask = test_mask(n, 0.05);
    let op = assemble_laplacian(n, n).unwrap();
    let cfg = SolverConfig::default();
    group.bench_function("seq", |b| b.iter(|| parbench::echoes_seq(&mask, &op, &cfg)));
    group.bench_function("par", |b| b.iter(|| parbench::echoes_par(&mask, &op, &cfg)));
    group.finish();
}

fn bench_smoothing(c: &mut Criterion) {
    let mut group = c.benchmark_group("gaussian_smooth");
    for n in [128usize, 256] {
        let img = test_image(n);
        group.bench_with_input(BenchmarkId::new("sigma1.6", n), &n, |b, _| {
            b.iter(|| parbench::smooth(&img, 1.6))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_matvec, bench_eed_assembly, bench_echo_batch, bench_smoothing);
criterion_main!(benches);
