use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use hashcf_bench::distance::{hamming_checksum, inner_product_checksum, phd_checksum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

const N: usize = 1 << 20;
const M: usize = 64;

fn kernels(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let q: u64 = rng.random();
    let codes: Vec<u64> = (0..N).map(|_| rng.random()).collect();
    let negated: Vec<u64> = codes.iter().map(|c| !c).collect();
    let qf: Vec<f32> = (0..M).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows: Vec<f32> = (0..N * M).map(|_| rng.random_range(-1.0..1.0)).collect();

    let mut g = c.benchmark_group("distance");
    g.throughput(Throughput::Elements(N as u64));
    g.bench_function("hamming", |b| b.iter(|| hamming_checksum(black_box(&[q]), black_box(&codes), 1)));
    g.bench_function("phd", |b| b.iter(|| phd_checksum(black_box(&[q]), black_box(&negated), 1)));
    g.bench_function("inner-product", |b| b.iter(|| inner_product_checksum(black_box(&qf), black_box(&rows))));
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
