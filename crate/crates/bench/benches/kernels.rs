use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cocolab::{
    compute_bundles, difference_field, iterate_product_scaled, le_from_bundle, le_norm_growth, schrodinger_cocycle,
    BundleOptions, Frequency, ParameterFamily, Potential, QuadratureOptions,
};

fn peaked(e: f64) -> ParameterFamily {
    schrodinger_cocycle(Potential::peaked(30.0).unwrap(), 0.0, Frequency::golden_mean()).family(e)
}

fn products(c: &mut Criterion) {
    let f = peaked(-2.5);
    c.bench_function("product_10k", |b| b.iter(|| iterate_product_scaled(&f, black_box(0.1), 10_000)));
    c.bench_function("norm_growth_100k", |b| b.iter(|| le_norm_growth(&f, black_box(100_000), 100, 0.0)));
}

fn bundles(c: &mut Criterion) {
    let mut g = c.benchmark_group("bundles");
    g.sample_size(10);
    let opts = BundleOptions::default();
    for e in [-2.5, -2.05] {
        let f = peaked(e);
        g.bench_function(format!("grid_1024_e{e}"), |b| b.iter(|| compute_bundles(&f, 1024, &opts).unwrap()));
        let pair = compute_bundles(&f, 1024, &opts).unwrap();
        let field = difference_field(&pair).unwrap();
        g.bench_function(format!("le_integral_e{e}"), |b| {
            b.iter(|| le_from_bundle(&pair, Some(&field), &QuadratureOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(kernels, products, bundles);
criterion_main!(kernels);
