use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use std::hint::black_box;
use wavelab_bench::reference_waves;
use wavelab_core::asymptotics::picard_fuchs;
use wavelab_core::evans::{monodromy_of, origin_derivatives_of};
use wavelab_core::indices::classify_wave;
use wavelab_core::spectrum::{scan, ScanRegion};

fn wave_family(c: &mut Criterion) {
    let mut g = c.benchmark_group("wave_family");
    for (name, w) in reference_waves() {
        g.bench_with_input(BenchmarkId::new("conserved", name), &w, |b, w| {
            b.iter(|| wavelab_core::PeriodicWave::new(*w.params(), w.nonlinearity()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("gradient_table", name), &w, |b, w| b.iter(|| w.gradient_table().unwrap()));
    }
    g.finish();
}

fn evans(c: &mut Criterion) {
    let mut g = c.benchmark_group("evans");
    let mu = Complex64::new(0.3, 0.7);
    for (name, w) in reference_waves() {
        g.bench_with_input(BenchmarkId::new("monodromy", name), &w, |b, w| {
            b.iter(|| monodromy_of(w, black_box(mu)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("origin_derivatives", name), &w, |b, w| {
            b.iter(|| origin_derivatives_of(w).unwrap())
        });
    }
    g.finish();
}

fn indices_and_spectrum(c: &mut Criterion) {
    let mut g = c.benchmark_group("indices");
    g.sample_size(20);
    let region = ScanRegion { re_min: 0.0, re_max: 0.0, im_min: -2.0, im_max: 2.0 };
    for (name, w) in reference_waves() {
        g.bench_with_input(BenchmarkId::new("classify", name), &w, |b, w| b.iter(|| classify_wave(w).unwrap()));
        g.bench_with_input(BenchmarkId::new("axis_scan_50", name), &w, |b, w| {
            b.iter(|| scan(w, &region, 1, 50, 1e-3).unwrap())
        });
    }
    g.finish();
}

fn asymptotics(c: &mut Criterion) {
    c.bench_function("picard_fuchs", |b| b.iter(|| picard_fuchs(black_box(0.05), black_box(2.0)).unwrap()));
}

criterion_group!(benches, wave_family, evans, indices_and_spectrum, asymptotics);
criterion_main!(benches);
