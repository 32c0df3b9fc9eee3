use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gap_core::experiments::Engine;
use gap_core::measures::{GapSampler, RhoBasis, RhoSpec, Spectrum};
use gap_core::rng::{purpose, stream};
use gap_core::HilbertDim;

fn thermal(d: usize, basis: RhoBasis) -> gap_core::DensityMatrix {
    RhoSpec { spectrum: Spectrum::Thermal { beta: 2.0, energies: None }, basis }
        .build(HilbertDim::flat(d).unwrap(), &mut stream(1, 0, 0))
        .unwrap()
}

fn sample_gap(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_gap");
    for d in [16usize, 256, 1024] {
        for (label, basis) in [("diagonal", RhoBasis::Computational), ("dense", RhoBasis::Haar)] {
            let sampler = GapSampler::new(&thermal(d, basis));
            let mut rng = stream(2, 0, 0);
            g.throughput(Throughput::Elements(1));
            g.bench_with_input(BenchmarkId::new(label, d), &d, |b, _| b.iter(|| sampler.sample_gap(&mut rng)));
        }
    }
    g.finish();
}

fn engine_batch(c: &mut Criterion) {
    let sampler = GapSampler::new(&thermal(64, RhoBasis::Haar));
    let engine = Engine::new(3, gap_core::experiments::default_workers()).unwrap();
    let n = 16_384u64;
    let mut g = c.benchmark_group("engine");
    g.throughput(Throughput::Elements(n));
    g.sample_size(20);
    g.bench_function("gap_norm_64", |b| {
        b.iter(|| engine.map_samples(purpose::SAMPLES, n, |rng| sampler.sample_gap(rng).amplitudes()[0].norm_sqr()))
    });
    g.finish();
}

criterion_group!(benches, sample_gap, engine_batch);
criterion_main!(benches);
