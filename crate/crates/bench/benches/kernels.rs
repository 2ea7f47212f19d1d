use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levy_smooth::solver::random_coefficient_field;
use levy_smooth::{
    apply_operator_quadrature, symbol_from_kernel, symbol_lower_bound_fit, validate_kernel, Grid,
    LevyKernelSpec, QuadratureConfig,
};

fn symbols(c: &mut Criterion) {
    let quad = QuadratureConfig::default();
    let mut group = c.benchmark_group("symbol_from_kernel");
    for (dim, n) in [(1, 128), (2, 32)] {
        let spec = LevyKernelSpec::fractional_laplacian(dim, 0.5);
        let g = Grid::new(dim, n, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("d{dim}"), n), &g, |b, g| {
            b.iter(|| symbol_from_kernel(&spec, *g, &quad).unwrap())
        });
    }
    group.finish();

    let spec = LevyKernelSpec::log_damped(1, 1.0, 0.25, 1.0, std::f64::consts::E);
    let sym = levy_smooth::symbol_closed_form(&spec, Grid::new(1, 256, 1.0).unwrap()).unwrap();
    c.bench_function("symbol_lower_bound_fit/n256", |b| {
        b.iter(|| symbol_lower_bound_fit(&sym, 1.0, 0.25).unwrap())
    });
}

fn quadrature(c: &mut Criterion) {
    let quad = QuadratureConfig::default();
    let spec = LevyKernelSpec::fractional_laplacian(1, 0.5);
    c.bench_function("validate_kernel/d1", |b| {
        b.iter(|| validate_kernel(&spec, &quad).unwrap())
    });
    let g = Grid::new(1, 64, 1.0).unwrap();
    let theta = random_coefficient_field(g, 1, |k| if k <= 8.0 { 1.0 } else { 0.0 });
    c.bench_function("apply_operator_quadrature/n64", |b| {
        b.iter(|| apply_operator_quadrature(&theta, &spec, &quad).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = symbols, quadrature
}
criterion_main!(benches);
