use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use levy_smooth::solver::random_coefficient_field;
use levy_smooth::{
    bony_commutator_decomposition, BlockDecomposition, DriftSpec, DyadicPartition, Grid,
    InitialSpec, LevyKernelSpec, Solver, SolverConfig, VectorField,
};

fn decomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("block_decomposition");
    for n in [64, 256] {
        let g = Grid::new(2, n, 1.0).unwrap();
        let part = DyadicPartition::new(g).unwrap();
        let theta = random_coefficient_field(g, 3, |k| if k <= n as f64 / 4.0 { 1.0 } else { 0.0 });
        group.bench_with_input(BenchmarkId::from_parameter(n), &theta, |b, t| {
            b.iter(|| BlockDecomposition::new(t, &part).unwrap())
        });
    }
    group.finish();

    let g = Grid::new(2, 64, 1.0).unwrap();
    let part = DyadicPartition::new(g).unwrap();
    let theta = random_coefficient_field(g, 4, |k| if k <= 12.0 { 1.0 } else { 0.0 });
    let u = VectorField::new(vec![
        random_coefficient_field(g, 5, |k| if k <= 6.0 { 1.0 } else { 0.0 }),
        random_coefficient_field(g, 6, |k| if k <= 6.0 { 1.0 } else { 0.0 }),
    ])
    .unwrap();
    c.bench_function("bony_commutator/n64_j3", |b| {
        b.iter(|| bony_commutator_decomposition(&u, &theta, 3, &part).unwrap())
    });
}

fn time_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("if_rk2_step");
    for (name, drift) in [
        (
            "weierstrass",
            DriftSpec::Weierstrass {
                amplitude: 0.4,
                delta: 0.8,
                terms: None,
                seed: 1,
                time_frequency: 0.0,
            },
        ),
        ("sqg", DriftSpec::Sqg {}),
    ] {
        for n in [64, 128] {
            let g = Grid::new(2, n, 1.0).unwrap();
            let mut cfg =
                SolverConfig::new(g, LevyKernelSpec::fractional_laplacian(2, 0.8), 1e-4, 1.0);
            cfg.drift = drift.clone();
            cfg.initial = InitialSpec::BandLimited {
                amplitude: 0.05,
                kmax: 8.0,
                seed: 2,
            };
            group.bench_with_input(BenchmarkId::new(name, n), &cfg, |b, cfg| {
                b.iter_batched_ref(
                    || Solver::new(cfg.clone()).unwrap(),
                    |s| s.step(1e-4).unwrap(),
                    BatchSize::LargeInput,
                )
            });
        }
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = decomposition, time_step
}
criterion_main!(benches);
