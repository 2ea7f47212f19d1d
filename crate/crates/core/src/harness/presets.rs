//! Named verification suites driven by an [`ExperimentConfig`].

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::decay::{block_decay_rates, check_block_decay, check_drift_decay, DecayWindow};
use super::golden::Golden;
use super::principles::{
    check_lp_bound, check_lp_constant_stability, check_maximum_principle, LpCap,
};
use super::schedule::{fit_j0_resolved, EmbeddingChain, Framework, IterationSchedule, Threshold};
use super::smoothing::{
    check_c1gamma, check_ladder, check_lp_smoothing_ladder, check_smoothing_rate,
    smoothing_profile, FrozenConstant,
};
use super::timeweight::check_time_weight_lemma;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::kernels::{
    symbol_for, symbol_lower_bound_fit, validate_kernel, KernelForm, LowerBoundFit, SymbolGrid,
};
use crate::littlewood_paley::{commutator_bound_check, DyadicPartition};
use crate::report::EstimateReport;
use crate::solver::{solve, Drift, DriftSpec, SolverConfig, Trajectory};
use crate::spectral::VectorField;

/// Identifiers accepted by [`run_preset`].
pub const PRESETS: [&str; 9] = [
    "mp-31",
    "decay-32",
    "timeweight-33",
    "symbol-41",
    "lp-43",
    "smooth-step1",
    "ladder-step2",
    "c1gamma-thm1",
    "c1gamma-thm2",
];

/// Numeric table produced by a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// CSV with a trailing `config_hash` column.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = self.header.join(",");
        out.push_str(",config_hash\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(out, "{},{config_hash}", cells.join(","));
        }
        out
    }
}

/// Reports and tables of one preset run.
#[derive(Debug, Clone, Default)]
pub struct PresetOutcome {
    pub reports: Vec<EstimateReport>,
    pub tables: Vec<Table>,
}

impl PresetOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(EstimateReport::passed)
    }
}

/// Built-in configuration of a check, or of the `linear` sweep setup.
pub fn default_config(name: &str) -> Result<ExperimentConfig> {
    let text = match name {
        "mp-31" => include_str!("../../presets/mp-31.toml"),
        "decay-32" => include_str!("../../presets/decay-32.toml"),
        "timeweight-33" => include_str!("../../presets/timeweight-33.toml"),
        "symbol-41" => include_str!("../../presets/symbol-41.toml"),
        "lp-43" => include_str!("../../presets/lp-43.toml"),
        "smooth-step1" => include_str!("../../presets/smooth-step1.toml"),
        "ladder-step2" => include_str!("../../presets/ladder-step2.toml"),
        "c1gamma-thm1" => include_str!("../../presets/c1gamma-thm1.toml"),
        "c1gamma-thm2" => include_str!("../../presets/c1gamma-thm2.toml"),
        "linear" => include_str!("../../presets/linear.toml"),
        other => return Err(unknown(other)),
    };
    ExperimentConfig::from_toml(text, &format!("preset {name}"), Path::new("."))
}

fn unknown(name: &str) -> Error {
    Error::Config(format!(
        "unknown check '{name}' (expected one of {})",
        PRESETS.join(", ")
    ))
}

/// Run one preset against `cfg`.
pub fn run_preset(name: &str, cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let mut outcome = match name {
        "mp-31" => maximum_principle(cfg),
        "decay-32" => block_decay(cfg),
        "timeweight-33" => time_weight(cfg),
        "symbol-41" => symbol_bound(cfg),
        "lp-43" => lp_bound(cfg),
        "smooth-step1" => smoothing(cfg),
        "ladder-step2" => ladder(cfg),
        "c1gamma-thm1" => c1gamma_linf(cfg),
        "c1gamma-thm2" => c1gamma_lp(cfg),
        other => Err(unknown(other)),
    }?;
    if let Some(golden) = load_golden(cfg)? {
        let slack = cfg.harness.golden_slack.unwrap_or(0.1);
        let report = golden_report(name, &golden, &outcome.reports, slack);
        outcome.reports.push(report);
    }
    for r in &mut outcome.reports {
        r.seed = Some(cfg.experiment.seed);
        if r.config_hash.is_empty() {
            r.config_hash = cfg.hash();
        }
    }
    Ok(outcome)
}

fn load_golden(cfg: &ExperimentConfig) -> Result<Option<Golden>> {
    match &cfg.harness.golden {
        Some(path) => Golden::load(&cfg.base_dir.join(path)).map(Some),
        None => Ok(None),
    }
}

/// Compares every `report.constant` key present in the golden file against
/// the measured constants; the residual is the worst relative deviation.
pub fn golden_report(
    anchor: &str,
    golden: &Golden,
    reports: &[EstimateReport],
    slack: f64,
) -> EstimateReport {
    let mut out = EstimateReport::new("golden_constants", anchor).constant("slack", slack);
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for r in reports {
        for (k, &v) in &r.constants {
            let key = format!("{}.{k}", r.name);
            if let Ok(c) = golden.compare(&key, v, slack) {
                compared += 1;
                out.set(&key, v);
                out.set(&format!("{key}.frozen"), c.frozen);
                if !(c.relative <= worst) {
                    worst = c.relative;
                }
            }
        }
    }
    out.set("compared", compared as f64);
    out.note("residual: worst relative deviation from the frozen constants");
    if compared == 0 {
        out.note("no golden key matches a measured constant");
        return out.judge(f64::INFINITY, slack);
    }
    out.judge(worst, slack)
}

fn refined(c: &SolverConfig) -> SolverConfig {
    c.with_grid(c.grid.refined())
}

fn solve_pair(a: &SolverConfig, b: &SolverConfig) -> Result<(Trajectory, Trajectory)> {
    let (x, y) = rayon::join(|| solve(a), || solve(b));
    Ok((x?, y?))
}

fn kernel_nonnegative(cfg: &ExperimentConfig) -> Result<bool> {
    let audit = validate_kernel(&cfg.operator_spec()?, &cfg.quadrature())?;
    Ok(audit.all_pass())
}

fn require(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("[harness] key '{key}' is required by this check")))
}

fn drift_delta(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.drift_delta().ok_or_else(|| {
        Error::Config("declare the drift exponent ([drift] delta or [harness] delta)".into())
    })
}

fn with_times(mut c: SolverConfig, records: &[f64], snapshots: &[f64]) -> SolverConfig {
    c.record_times.extend_from_slice(records);
    c.record_times.sort_by(f64::total_cmp);
    c.snapshot_times.extend_from_slice(snapshots);
    c
}

fn maximum_principle(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let runs = cfg.harness.runs.unwrap_or(1).max(1);
    let nonneg = kernel_nonnegative(cfg)?;
    let configs: Vec<SolverConfig> = (0..runs as u64)
        .map(|r| {
            cfg.clone()
                .with_seed(cfg.experiment.seed.wrapping_add(2 * r))
                .solver_config()
        })
        .collect::<Result<_>>()?;
    let trajs: Vec<Trajectory> = configs.par_iter().map(solve).collect::<Result<_>>()?;
    let mut table = Table::new("sup_norm_history", &["run", "t", "sup_norm"]);
    let mut reports = Vec::new();
    for (r, traj) in trajs.iter().enumerate() {
        for (t, s) in traj.times.iter().zip(&traj.sup_norms) {
            table.rows.push(vec![r as f64, *t, *s]);
        }
        let mut rep = check_maximum_principle(traj, nonneg);
        rep.set("run", r as f64);
        reports.push(rep);
    }
    Ok(PresetOutcome {
        reports,
        tables: vec![table],
    })
}

fn block_decay(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let base = cfg.solver_config()?;
    let spec = base.operator.clone();
    let mut pure = base.clone();
    pure.drift = DriftSpec::None {};
    let symbol = symbol_for(&spec, base.grid, &base.quadrature)?;
    let decay = base.decay_rates(&symbol);
    let drift_active = !matches!(base.drift, DriftSpec::None {});
    let (pure_traj, drift_traj) = if drift_active {
        let (a, b) = solve_pair(&pure, &base)?;
        (a, Some(b))
    } else {
        (solve(&pure)?, None)
    };
    let (report, late, mut constants) = check_block_decay(
        &pure_traj,
        &decay,
        spec.alpha,
        spec.sigma,
        DecayWindow::Late { fraction: 0.5 },
        0.1,
    )?;
    let early_window = DecayWindow::Early { e_folds: 2.0 };
    let pure_early = block_decay_rates(&pure_traj, &decay, early_window)?;
    let mut table = Table::new(
        "block_rates",
        &[
            "j",
            "band_min",
            "band_max",
            "rate_late",
            "rate_early",
            "rate_early_drift",
        ],
    );
    let drift_early = match &drift_traj {
        Some(t) => block_decay_rates(t, &decay, early_window)?,
        None => Vec::new(),
    };
    for r in &late {
        let early = pure_early
            .iter()
            .find(|e| e.j == r.j)
            .map_or(f64::NAN, |e| e.rate);
        let de = drift_early
            .iter()
            .find(|e| e.j == r.j)
            .map_or(f64::NAN, |e| e.rate);
        table
            .rows
            .push(vec![r.j as f64, r.band_min, r.band_max, r.rate, early, de]);
    }
    let mut reports = vec![report];
    if let Some(traj) = drift_traj {
        let delta = drift_delta(cfg)?;
        let part = DyadicPartition::new(base.grid)?;
        let theta0 = traj.initial();
        let u = Drift::new(&base.drift, base.grid)?
            .field(&theta0.to_spectrum(), 0.0)
            .unwrap_or_else(|| VectorField::zeros(base.grid));
        let mut commutator = 0.0f64;
        for j in 0..=part.j_max() {
            let r = commutator_bound_check(&u, theta0, j, delta.min(0.999), f64::INFINITY, &part)?;
            for key in ["c_i1", "c_i2", "c_i3"] {
                let v = r.constants[key];
                if v.is_finite() {
                    commutator = commutator.max(v);
                }
            }
        }
        constants.commutator = commutator;
        let u_norm = traj.drift_holder.unwrap_or(0.0);
        let j0 = fit_j0_resolved(
            u_norm,
            spec.alpha,
            spec.sigma,
            delta,
            &constants,
            Threshold::LInfinity,
            traj.j_max,
        );
        match j0 {
            Ok(j0) => {
                let mut rep = check_drift_decay(&pure_early, &drift_early, j0, &traj.config_hash);
                rep.set("commutator_fit", commutator);
                rep.set("u_holder", u_norm);
                rep.set("c_fit", constants.c);
                rep.set("c1_fit", constants.c1);
                reports.push(rep);
            }
            Err(e) => {
                let mut rep = EstimateReport::new("block_decay_weak_drift", "decay-32")
                    .with_hash(&traj.config_hash)
                    .constant("commutator_fit", commutator)
                    .constant("u_holder", u_norm);
                rep.note(e.to_string());
                reports.push(rep.judge(f64::INFINITY, 0.0));
            }
        }
    }
    Ok(PresetOutcome {
        reports,
        tables: vec![table],
    })
}

fn time_weight(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let h = &cfg.harness;
    let lambdas = h
        .lambdas
        .clone()
        .unwrap_or_else(|| (0..=10).map(|i| 2f64.powi(i)).collect());
    let ls = h.ls.clone().unwrap_or_else(|| vec![0.1, 0.5, 0.9]);
    let ts =
        h.ts.clone()
            .unwrap_or_else(|| (-5..=3).map(|i| 2f64.powi(i)).collect());
    let report = check_time_weight_lemma(&lambdas, &ls, &ts, h.quad_tol.unwrap_or(1e-11))?;
    Ok(PresetOutcome {
        reports: vec![report],
        tables: Vec::new(),
    })
}

fn symbol_bound(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let spec = cfg.operator_spec()?;
    let grid = cfg.grid()?;
    let quad = cfg.quadrature();
    let grids = [grid, grid.refined(), grid.densified()];
    let syms: Vec<SymbolGrid> = grids
        .par_iter()
        .map(|g| symbol_for(&spec, *g, &quad))
        .collect::<Result<_>>()?;
    let fits: Vec<LowerBoundFit> = syms
        .iter()
        .map(|s| symbol_lower_bound_fit(s, spec.alpha, spec.sigma))
        .collect::<Result<_>>()?;
    let (fa, fb, fx) = (&fits[0], &fits[1], &fits[2]);
    let rel = relative_change(fa.constant, fb.constant);
    let mut report = EstimateReport::new("symbol_lower_bound", "symbol-41")
        .with_hash(&cfg.hash())
        .constant("alpha", spec.alpha)
        .constant("sigma", spec.sigma)
        .constant("c_coarse", fa.constant)
        .constant("c_fine", fb.constant)
        .constant("c_dense", fx.constant)
        .constant("dense_change", relative_change(fa.constant, fx.constant))
        .constant("worst_wavenumber_coarse", fa.worst_wavenumber)
        .constant("worst_wavenumber_fine", fb.worst_wavenumber)
        .constant("worst_wavenumber_dense", fx.worst_wavenumber)
        .constant("relative_change", rel);
    report.note("residual: |C(2N) / C(N) - 1| on the same torus");
    report.note("c_dense: same wavenumber range at half the spacing (not asserted)");
    let residual = if fa.constant.is_finite() && fb.constant.is_finite() {
        rel
    } else {
        f64::INFINITY
    };
    let a = &syms[0];
    let mut table = Table::new("symbol_samples", &["wavenumber", "symbol"]);
    for (q, v) in a.radial_samples() {
        table.rows.push(vec![q, v]);
    }
    Ok(PresetOutcome {
        reports: vec![report.judge(residual, 0.05)],
        tables: vec![table],
    })
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b / a - 1.0).abs()
    }
}

fn lp_cap(cfg: &SolverConfig) -> LpCap {
    if matches!(cfg.operator.form, KernelForm::FractionalLaplacian) && cfg.forcing.is_zero() {
        LpCap::Value(1e-6)
    } else {
        LpCap::Finite
    }
}

fn lp_bound(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let base = cfg.solver_config()?;
    let mut half = base.clone();
    half.dt *= 0.5;
    let (a, b) = solve_pair(&base, &half)?;
    let mut reports = Vec::new();
    let mut table = Table::new("lp_history", &["p", "t", "lp_norm"]);
    for &p in &base.lp_orders {
        reports.push(check_lp_bound(&a, p, lp_cap(&base))?);
        reports.push(check_lp_constant_stability(&a, &b, p)?);
        for (t, v) in a.times.iter().zip(a.lp_series(p).unwrap_or(&[])) {
            table.rows.push(vec![p, *t, *v]);
        }
    }
    Ok(PresetOutcome {
        reports,
        tables: vec![table],
    })
}

fn smoothing(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let s = require(cfg.harness.s, "s")?;
    let base = cfg.solver_config()?;
    let (framework, p) = match cfg.harness.p {
        Some(p) if p.is_finite() => (Framework::Lp, p),
        _ => (Framework::LInfinity, f64::INFINITY),
    };
    let mut base = base;
    if p.is_finite() && !base.lp_orders.contains(&p) {
        base.lp_orders.push(p);
    }
    let (a, b) = solve_pair(&base, &refined(&base))?;
    let spec = &base.operator;
    let report = check_smoothing_rate(
        &a,
        &b,
        s,
        spec.alpha,
        spec.sigma,
        cfg.drift_delta(),
        framework,
        p,
    )?;
    let am = spec.alpha - spec.sigma;
    let mut tables = Vec::new();
    for (name, traj) in [("smoothing_coarse", &a), ("smoothing_fine", &b)] {
        let mut t = Table::new(name, &["t", "w"]);
        for (x, w) in smoothing_profile(traj, s, am, p)? {
            t.rows.push(vec![x, w]);
        }
        tables.push(t);
    }
    Ok(PresetOutcome {
        reports: vec![report],
        tables,
    })
}

fn schedule_for(
    cfg: &ExperimentConfig,
    framework: Framework,
    gamma: f64,
) -> Result<IterationSchedule> {
    let spec = cfg.operator_spec()?;
    let delta = drift_delta(cfg)?;
    let t_tilde = require(cfg.harness.t_tilde, "t_tilde")?;
    let s = IterationSchedule::new(
        spec.alpha,
        spec.sigma,
        delta,
        gamma,
        t_tilde,
        framework,
        cfg.harness.allow_endpoint,
    )?;
    match &cfg.harness.waypoints {
        Some(w) => s.with_waypoints(w.clone()),
        None => Ok(s),
    }
}

fn ladder(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let schedule = schedule_for(
        cfg,
        Framework::LInfinity,
        require(cfg.harness.gamma, "gamma")?,
    )?;
    let base = with_times(cfg.solver_config()?, &schedule.waypoints, &[]);
    let (a, b) = solve_pair(&base, &refined(&base))?;
    Ok(PresetOutcome {
        reports: vec![check_ladder(&a, &b, &schedule, f64::INFINITY)?],
        tables: Vec::new(),
    })
}

fn golden_constant(cfg: &ExperimentConfig, key: &str) -> Result<Option<FrozenConstant>> {
    let Some(g) = load_golden(cfg)? else {
        return Ok(None);
    };
    Ok(g.get(key).map(|value| FrozenConstant {
        value,
        slack: cfg.harness.golden_slack.unwrap_or(0.1),
    }))
}

fn c1gamma_linf(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let schedule = schedule_for(
        cfg,
        Framework::LInfinity,
        require(cfg.harness.gamma, "gamma")?,
    )?;
    let base = with_times(cfg.solver_config()?, &schedule.waypoints, &[]);
    let (a, b) = solve_pair(&base, &refined(&base))?;
    let frozen = golden_constant(cfg, "c1gamma_window.c_fit")?;
    let mut window = Table::new("window_norm", &["t", "besov_coarse"]);
    let reg = 1.0 + schedule.gamma;
    for (i, &t) in a
        .times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t + 1e-12 >= schedule.t_tilde)
    {
        window.rows.push(vec![t, a.besov_sup(i, reg)]);
    }
    Ok(PresetOutcome {
        reports: vec![
            check_c1gamma(&a, &b, &schedule, frozen)?,
            check_ladder(&a, &b, &schedule, f64::INFINITY)?,
        ],
        tables: vec![window],
    })
}

fn c1gamma_lp(cfg: &ExperimentConfig) -> Result<PresetOutcome> {
    let spec = cfg.operator_spec()?;
    let p = cfg.harness.p.unwrap_or(2.0);
    let delta = drift_delta(cfg)?;
    let chain = EmbeddingChain::new(spec.dim, p, spec.alpha, spec.sigma, delta)?;
    let schedule = schedule_for(cfg, Framework::Lp, chain.gamma)?;
    let mut base = with_times(
        cfg.solver_config()?,
        &schedule.waypoints,
        &[schedule.t_tilde],
    );
    if !base.lp_orders.contains(&p) {
        base.lp_orders.push(p);
    }
    let mut half = base.clone();
    half.dt *= 0.5;
    let fine = refined(&base);
    let (ab, c) = rayon::join(|| solve_pair(&base, &fine), || solve(&half));
    let (a, b) = ab?;
    let c = c?;
    let nonneg = kernel_nonnegative(cfg)?;
    let mut chain_table = Table::new("embedding_chain", &["j", "inverse_order", "order"]);
    for (j, (x, q)) in chain.inverse_orders.iter().zip(&chain.orders).enumerate() {
        chain_table.rows.push(vec![j as f64, *x, *q]);
    }
    Ok(PresetOutcome {
        reports: vec![
            check_lp_bound(&a, p, lp_cap(&base))?,
            check_lp_constant_stability(&a, &c, p)?,
            check_lp_smoothing_ladder(&a, &b, &schedule, &chain, p)?,
            check_maximum_principle(&a, nonneg),
        ],
        tables: vec![chain_table],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_has_a_parsable_default() {
        for name in PRESETS {
            let c = default_config(name).unwrap();
            assert!(c.experiment.checks.iter().any(|k| k == name), "{name}");
        }
        assert!(default_config("nope").is_err());
    }

    #[test]
    fn table_rows_carry_the_hash() {
        let mut t = Table::new("x", &["a", "b"]);
        t.rows.push(vec![1.0, 2.0]);
        let csv = t.to_csv("h");
        assert!(csv.starts_with("a,b,config_hash\n"));
        assert!(csv.trim_end().ends_with(",h"));
    }
}
