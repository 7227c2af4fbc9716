use bdmap::analysis::DimensionMethod;
use bdmap::flow::{certify_constants, DEFAULT_TOL};
use bdmap::map::CookieMap;
use bdmap::symbolic::enumerate_intervals;
use bdmap::{Analyzer, Exec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn analyzer(exec: Exec) -> Analyzer {
    let constants = certify_constants(1024, DEFAULT_TOL).expect("certification");
    Analyzer::new(CookieMap::new(constants)).with_exec(exec)
}

fn distortion_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("bd_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        let a = analyzer(exec);
        group.bench_with_input(BenchmarkId::new(name, 8), &8, |b, &k| {
            b.iter(|| a.bd_sweep(black_box(k), 65).unwrap())
        });
    }
    group.finish();
}

fn interval_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_intervals");
    group.sample_size(10);
    for (name, exec) in MODES {
        let a = analyzer(exec);
        group.bench_with_input(BenchmarkId::new(name, 14), &14, |b, &k| {
            b.iter(|| enumerate_intervals(a.map(), black_box(k), exec).unwrap())
        });
    }
    group.finish();
}

fn size_bound_check(c: &mut Criterion) {
    let mut group = c.benchmark_group("lemma3_check_total");
    group.sample_size(10);
    for (name, exec) in MODES {
        let a = analyzer(exec);
        group.bench_with_input(BenchmarkId::new(name, 14), &14, |b, &total| {
            b.iter(|| a.lemma3_check_total(black_box(total)).unwrap())
        });
    }
    group.finish();
}

fn bowen_dimension(c: &mut Criterion) {
    let mut group = c.benchmark_group("dimension_bowen");
    group.sample_size(10);
    for (name, exec) in MODES {
        let a = analyzer(exec);
        group.bench_with_input(BenchmarkId::new(name, 12), &12, |b, &depth| {
            b.iter(|| a.dimension_estimate(black_box(depth), DimensionMethod::Bowen).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    distortion_sweep,
    interval_enumeration,
    size_bound_check,
    bowen_dimension
);
criterion_main!(benches);
