use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ffbsd::curve::Curve;
use ffbsd::ff::Fq;
use ffbsd::funcfield::Poly;
use ffbsd::localred::all_local_data;
use ffbsd::lseries::{trace_sum, FiberModel};
use ffbsd::par::Exec;
use std::hint::black_box;

fn model(q: u64, a: &[i64], b: &[i64]) -> FiberModel {
    let f = Fq::new(q, 1).unwrap();
    let c = Curve::new(Poly::from_i64s(&f, a), Poly::from_i64s(&f, b)).unwrap();
    FiberModel::new(&c, &all_local_data(&c).unwrap()).unwrap()
}

fn fiber_counting(c: &mut Criterion) {
    let cases = [
        ("F5", model(5, &[3, 3, 0, 4], &[1, 2, 1, 2]), [4, 6, 7]),
        ("F7", model(7, &[3, 0, 2], &[2, 4, 1]), [3, 4, 6]),
    ];
    let mut group = c.benchmark_group("trace_sum");
    group.sample_size(10);
    for (name, m, degrees) in &cases {
        // build the extension tables outside the timed loop
        for &n in degrees {
            trace_sum(m, n, Exec::Sequential).unwrap();
        }
        for &n in degrees {
            let id = format!("{name}^{n}");
            group.bench_with_input(BenchmarkId::new("sequential", &id), &n, |b, &n| {
                b.iter(|| trace_sum(m, black_box(n), Exec::Sequential).unwrap().a_n)
            });
            group.bench_with_input(BenchmarkId::new("parallel", &id), &n, |b, &n| {
                b.iter(|| trace_sum(m, black_box(n), Exec::Parallel).unwrap().a_n)
            });
        }
    }
    group.finish();
}

criterion_group!(benches, fiber_counting);
criterion_main!(benches);
