use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraclab_bench::fixture;
use fraclab_core::fracops::{frac_laplacian, Backend};
use fraclab_core::kernelspace::{kernel_besov_norm, kernel_dhalf};
use fraclab_core::multicomm::apply_tk;
use fraclab_core::KernelNormParams;

fn frac_laplacian_backends(c: &mut Criterion) {
    let mut group = c.benchmark_group("frac_laplacian");
    for n in [256, 1024] {
        let (_, v) = fixture(n);
        for (name, backend) in [("multiplier", Backend::Multiplier), ("quadrature", Backend::Quadrature)] {
            group.bench_with_input(BenchmarkId::new(name, n), &v, |b, v| {
                b.iter(|| frac_laplacian(black_box(v), 0.5, backend).unwrap())
            });
        }
    }
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);
    for n in [128, 256] {
        let (q, v) = fixture(n);
        group.bench_with_input(BenchmarkId::new("dhalf", n), &q, |b, q| b.iter(|| kernel_dhalf(black_box(q))));
        let k = kernel_dhalf(&q);
        let params = KernelNormParams::new(-0.25, 2.0, 2.0);
        group.bench_with_input(BenchmarkId::new("besov_norm", n), &k, |b, k| {
            b.iter(|| kernel_besov_norm(black_box(k), params).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("apply_tk", n), &v, |b, v| {
            b.iter(|| apply_tk(&k, black_box(v)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, frac_laplacian_backends, kernels);
criterion_main!(benches);
