//! Preset-level behavior: determinism, not-applicable paths, mean
//! conservation.

use std::path::Path;

use levy_smooth::harness::default_config;
use levy_smooth::{
    run_preset, solve, CheckStatus, DriftSpec, ExperimentConfig, ForcingSpec, Grid, InitialSpec,
    LevyKernelSpec, SolverConfig,
};

fn csv(outcome: &levy_smooth::PresetOutcome) -> Vec<String> {
    outcome.reports.iter().map(|r| r.csv_row()).collect()
}

#[test]
fn identical_config_and_seed_give_bitwise_identical_reports() {
    for name in ["mp-31", "decay-32", "c1gamma-thm2"] {
        let cfg = default_config(name).unwrap();
        let a = run_preset(name, &cfg).unwrap();
        let b = run_preset(name, &cfg).unwrap();
        assert_eq!(csv(&a), csv(&b), "{name}");
        for (x, y) in a.reports.iter().zip(&b.reports) {
            for (k, v) in &x.constants {
                assert_eq!(v.to_bits(), y.constants[k].to_bits(), "{name}: {k}");
            }
        }
        assert_eq!(a.tables, b.tables, "{name}");
    }
}

#[test]
fn seed_changes_randomized_data_but_not_the_verdict() {
    let cfg = default_config("decay-32").unwrap();
    let a = run_preset("decay-32", &cfg).unwrap();
    let b = run_preset("decay-32", &cfg.clone().with_seed(cfg.experiment.seed + 1)).unwrap();
    assert_ne!(csv(&a), csv(&b));
    assert!(a.passed() && b.passed());
}

#[test]
fn every_report_carries_hash_and_seed() {
    for name in ["timeweight-33", "symbol-41", "decay-32"] {
        let cfg = default_config(name).unwrap();
        let out = run_preset(name, &cfg).unwrap();
        assert!(!out.reports.is_empty());
        for r in &out.reports {
            assert_eq!(r.config_hash.len(), 64, "{name}: {}", r.name);
            assert_eq!(r.seed, Some(cfg.experiment.seed));
        }
        for t in &out.tables {
            let text = t.to_csv(&cfg.hash());
            assert!(text.lines().skip(1).all(|l| l.ends_with(&cfg.hash())));
        }
    }
}

const SIGNED_KERNEL: &str = r#"
[experiment]
name = "mp-signed"
seed = 7

[grid]
dim = 1
n = 64

[operator]
form = "piecewise"
alpha = 0.8
sigma = 0.1
inner_coef = 1.0
outer_coef = 1.0
outer_order = 0.8
split = 1.0
negative_band = [1.0, 40.0]

[drift]
mode = "constant"
velocity = [0.3]

[initial]
kind = "rough"

[time]
dt = 0.005
t_final = 0.2

[harness]
runs = 2
"#;

#[test]
fn maximum_principle_is_not_applicable_for_a_signed_kernel() {
    let cfg = ExperimentConfig::from_toml(SIGNED_KERNEL, "mp-signed", Path::new(".")).unwrap();
    let out = run_preset("mp-31", &cfg).unwrap();
    assert!(!out.reports.is_empty());
    for r in &out.reports {
        assert_eq!(r.status, CheckStatus::NotApplicable, "{}", r.summary_line());
        assert!(r.passed());
    }
}

#[test]
fn mean_moves_only_with_the_forcing_mean() {
    let g = Grid::new(2, 32, 1.0).unwrap();
    for (drift, forcing, slope) in [
        (DriftSpec::Sqg {}, ForcingSpec::None {}, 0.0),
        (
            DriftSpec::Constant {
                velocity: vec![0.4, -0.2],
            },
            ForcingSpec::Constant { value: 0.3 },
            0.3,
        ),
        (
            DriftSpec::Sqg {},
            ForcingSpec::Cosine {
                amplitude: 1.0,
                wavevector: [2, 1],
            },
            0.0,
        ),
    ] {
        let mut c = SolverConfig::new(g, LevyKernelSpec::fractional_laplacian(2, 0.7), 0.005, 0.5);
        c.drift = drift;
        c.forcing = forcing;
        c.initial = InitialSpec::BandLimited {
            amplitude: 0.05,
            kmax: 6.0,
            seed: 9,
        };
        c.snapshot_times = vec![0.1, 0.25, 0.4];
        let traj = solve(&c).unwrap();
        let m0 = traj.initial().mean();
        for s in &traj.snapshots {
            let expected = m0 + slope * s.t;
            assert!(
                (s.field.mean() - expected).abs() < 1e-12,
                "t={}: {} vs {expected}",
                s.t,
                s.field.mean()
            );
        }
        assert!((traj.terminal().mean() - (m0 + slope * traj.final_time())).abs() < 1e-12);
    }
}
