use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cgk::embedding::Embedded;
use cgk::fixtures;
use cgk::par::Exec;
use cgk::star_algebra::{k18_check, matrix_units_check, taf_check};

fn host3() -> Embedded {
    Embedded::auto(fixtures::host(3, 8), fixtures::guest_z(8)).unwrap()
}

pub fn exec_bench(c: &mut Criterion) {
    let cx = host3();
    let mut group = c.benchmark_group("exec");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let name = format!("{exec:?}");
        group.bench_with_input(BenchmarkId::new("taf-2-5", &name), &exec, |b, &e| {
            b.iter(|| taf_check(&cx, 2, 5, e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("k18-1-3", &name), &exec, |b, &e| {
            b.iter(|| k18_check(&cx, 1, 3, e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("units-2", &name), &exec, |b, &e| {
            b.iter(|| matrix_units_check(&cx, 2, 3, e).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exec_bench);
criterion_main!(benches);
