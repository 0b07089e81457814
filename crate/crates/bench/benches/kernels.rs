use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use memrk_core::problem::{gen_parallel_tomo, TomoGeometry};
use memrk_core::solver::{select_max_residual_row, z_project_column};

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("matvec");
    for (name, p) in [
        ("dense_2000x200", memrk_bench::dense(2000, 200)),
        ("csr_2000x400", memrk_bench::sparse(2000, 400)),
    ] {
        let x = vec![1.0; p.a.cols()];
        let mut y = vec![0.0; p.a.rows()];
        g.bench_function(BenchmarkId::new("forward", name), |b| {
            b.iter(|| p.a.matvec_into(black_box(&x), &mut y).unwrap())
        });
        g.bench_function(BenchmarkId::new("transpose", name), |b| {
            b.iter(|| p.a.matvec_transpose(black_box(&y)).unwrap())
        });
    }
    g.finish();
}

fn projections(c: &mut Criterion) {
    let p = memrk_bench::dense(2000, 200);
    let mut z = p.b.clone();
    let mut j = 0;
    c.bench_function("z_project_column/dense_2000x200", |b| {
        b.iter(|| {
            j = (j + 1) % p.a.cols();
            z_project_column(&mut z, &p.a, j).unwrap();
        })
    });
    c.bench_function("select_max_residual_row/2000", |b| {
        b.iter(|| select_max_residual_row(black_box(&p.b)))
    });
}

fn siddon(c: &mut Criterion) {
    let geom = TomoGeometry::reduced();
    c.bench_function("gen_parallel_tomo/reduced", |b| {
        b.iter(|| gen_parallel_tomo(black_box(&geom)).unwrap())
    });
}

criterion_group!(benches, matvec, projections, siddon);
criterion_main!(benches);
