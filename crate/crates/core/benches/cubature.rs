use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use volpot::{
    test_density, BoxDomain, Cubature, ExecutionMode, ExtensionKind, Grid, LambdaSquared, PolynomialOrder,
    Profile, QuadratureParams,
};

fn cubature(n: usize, h: f64, quad: QuadratureParams, mode: ExecutionMode) -> Cubature {
    Cubature::new(
        BoxDomain::cube(n, -1.0, 1.0).unwrap(),
        Grid::isotropic(n, h, 4.0, 6.0).unwrap(),
        PolynomialOrder::new(3).unwrap(),
        LambdaSquared::real(1.0).unwrap(),
        quad,
        ExtensionKind::None,
    )
    .unwrap()
    .with_mode(mode)
}

fn bench_modes(c: &mut Criterion) {
    let lambda2 = LambdaSquared::real(1.0).unwrap();
    let cases = [
        ("n3_h40", 3usize, 1.0f64 / 40.0, QuadratureParams::three_dimensional(), Profile::CosSquared),
        ("n100_h20", 100, 1.0 / 20.0, QuadratureParams::high_dimensional(), Profile::SinBump),
    ];
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for (label, n, h, quad, profile) in cases {
        let density = test_density(profile, lambda2, n);
        let mut k = vec![0i64; n];
        k[0] = (0.5 / h).round() as i64;
        for mode in [ExecutionMode::Sequential, ExecutionMode::Parallel] {
            let cub = cubature(n, h, quad, mode);
            group.bench_with_input(BenchmarkId::new(format!("{mode:?}"), label), &k, |b, k| {
                b.iter(|| black_box(cub.evaluate(&density, k).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_modes);
criterion_main!(benches);
