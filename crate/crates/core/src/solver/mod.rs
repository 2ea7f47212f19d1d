//! Integrating-factor pseudo-spectral integration of
//! `∂ₜθ + u·∇θ + 𝓛θ − εΔθ = f` on the torus.
//!
//! With `E(ξ) = A(ξ) + ε|ξ|²` and `N(θ, t) = −P(u·∇θ) + f̂`, one step of
//! size `h` is Heun's method on `e^{tE}θ̂`:
//!
//! ```text
//! θ* = e^{−hE}(θ̂ₙ + h N(θ̂ₙ, tₙ))
//! θ̂ₙ₊₁ = e^{−hE}θ̂ₙ + h/2 (e^{−hE}N(θ̂ₙ, tₙ) + N(θ*, tₙ + h))
//! ```

mod data;
mod drift;
pub mod io;
mod sweep;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use data::{
    mollify_data, random_coefficient_field, random_phase_field, ForcingSpec, InitialSpec, Mollified,
};
pub use drift::{default_terms, divergence_sup, drift_holder, sqg_velocity, Drift, DriftSpec};
pub use sweep::{vanishing_viscosity_sweep, ConvergenceReport};

use crate::error::{Error, Result};
use crate::kernels::{symbol_for, LevyKernelSpec, SymbolGrid};
use crate::littlewood_paley::DyadicPartition;
use crate::quadrature::QuadratureConfig;
use crate::report::config_hash;
use crate::spectral::{lp_norm, Dealiaser, Field, FieldSpectrum, Grid};

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: Grid,
    pub operator: LevyKernelSpec,
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    pub cfl: f64,
    pub drift: DriftSpec,
    pub forcing: ForcingSpec,
    pub initial: InitialSpec,
    /// Data mollification scale `ε_m`; `None` keeps the raw data.
    pub mollify: Option<f64>,
    /// Dense history stride in steps.
    pub record_every: usize,
    /// Extra history times the integrator lands on exactly.
    pub record_times: Vec<f64>,
    /// Times at which full fields are kept (`0` and `T` always are).
    pub snapshot_times: Vec<f64>,
    /// Orders `p` of the recorded `L^p` histories.
    pub lp_orders: Vec<f64>,
    pub quadrature: QuadratureConfig,
    /// Directory that relative data paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl SolverConfig {
    pub fn new(grid: Grid, operator: LevyKernelSpec, dt: f64, t_final: f64) -> Self {
        Self {
            grid,
            operator,
            epsilon: 0.0,
            dt,
            t_final,
            cfl: 0.5,
            drift: DriftSpec::None {},
            forcing: ForcingSpec::None {},
            initial: InitialSpec::Zero {},
            mollify: None,
            record_every: 1,
            record_times: Vec::new(),
            snapshot_times: Vec::new(),
            lp_orders: vec![2.0],
            quadrature: QuadratureConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.operator.validate()?;
        if self.operator.dim != self.grid.dim() {
            return Err(Error::Config(format!(
                "{}-d operator on a {}-d grid",
                self.operator.dim,
                self.grid.dim()
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "[time] epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.dt > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::Config(
                "[time] dt and t_final must be positive".into(),
            ));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::Config(format!(
                "[time] cfl must lie in (0, 0.5], got {}",
                self.cfl
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config(
                "[time] record_every must be at least 1".into(),
            ));
        }
        if let Some(m) = self.mollify {
            if !(m > 0.0) {
                return Err(Error::Config(format!(
                    "[initial] mollify must be positive, got {m}"
                )));
            }
        }
        if self.lp_orders.iter().any(|&p| !(p >= 1.0)) {
            return Err(Error::Config("[output] lp_orders must be >= 1".into()));
        }
        self.drift.validate(self.grid.dim())
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }

    pub fn with_grid(&self, grid: Grid) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }

    /// `E(ξ) = A(ξ) + ε|ξ|²` on the lattice.
    pub fn decay_rates(&self, symbol: &SymbolGrid) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| symbol.value(i) + self.epsilon * self.grid.wavenumber(i).powi(2))
            .collect()
    }
}

/// Mutable integrator state.
pub struct Solver {
    config: SolverConfig,
    symbol: SymbolGrid,
    decay: Vec<f64>,
    dealias: Dealiaser,
    drift: Drift,
    forcing: FieldSpectrum,
    state: FieldSpectrum,
    t: f64,
    steps: usize,
    cached: Option<(f64, Vec<f64>)>,
    padded_drift: Option<Vec<Vec<f64>>>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let raw = config.initial.build(config.grid, &config.base_dir)?;
        Self::with_initial(config, raw)
    }

    /// Start from explicit raw data (mollified when the config asks for it).
    pub fn with_initial(config: SolverConfig, raw: Field) -> Result<Self> {
        config.validate()?;
        config.grid.ensure_same(raw.grid())?;
        let symbol = symbol_for(&config.operator, config.grid, &config.quadrature)?;
        Self::with_symbol(config, raw, symbol)
    }

    /// Start with a precomputed symbol.
    pub fn with_symbol(config: SolverConfig, raw: Field, symbol: SymbolGrid) -> Result<Self> {
        config.validate()?;
        config.grid.ensure_same(symbol.grid())?;
        let theta0 = match config.mollify {
            Some(m) => mollify_data(&raw, m)?.field,
            None => raw,
        };
        let decay = config.decay_rates(&symbol);
        let drift = Drift::new(&config.drift, config.grid)?;
        let forcing = config.forcing.build(config.grid).to_spectrum();
        let dealias = Dealiaser::new(config.grid);
        let padded_drift = match &drift {
            Drift::Prescribed { spectra, .. } => Some(dealias.pad_velocity(spectra)?),
            _ => None,
        };
        Ok(Self {
            dealias,
            padded_drift,
            state: theta0.to_spectrum(),
            symbol,
            decay,
            drift,
            forcing,
            t: 0.0,
            steps: 0,
            cached: None,
            config,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn symbol(&self) -> &SymbolGrid {
        &self.symbol
    }

    pub fn state(&self) -> &FieldSpectrum {
        &self.state
    }

    pub fn field(&self) -> Field {
        self.state.to_field()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn forcing(&self) -> Field {
        self.forcing.to_field()
    }

    /// Current velocity sup norm.
    pub fn velocity_sup(&self) -> f64 {
        self.drift
            .field(&self.state, self.t)
            .map(|u| u.sup_norm())
            .unwrap_or(0.0)
    }

    /// Largest admissible step at the current state.
    pub fn cfl_limit(&self) -> f64 {
        let u = self.velocity_sup();
        if u > 0.0 {
            self.config.cfl * self.config.grid.spacing() / u
        } else {
            f64::INFINITY
        }
    }

    fn nonlinear(&self, theta: &FieldSpectrum, t: f64) -> Result<FieldSpectrum> {
        let mut out = self.forcing.clone();
        if let (Some(u), Drift::Prescribed { omega, .. }) = (&self.padded_drift, &self.drift) {
            let c = if *omega == 0.0 {
                1.0
            } else {
                (omega * t).cos()
            };
            return out.sub(&self.dealias.advection_padded(u, c, theta)?);
        }
        if let Some(u) = self.drift.velocity(theta, t) {
            let adv = self.dealias.advection(&u, theta)?;
            out = out.sub(&adv)?;
        }
        Ok(out)
    }

    fn factors(&mut self, h: f64) -> Vec<f64> {
        if let Some((dt, f)) = &self.cached {
            if *dt == h {
                return f.clone();
            }
        }
        let f: Vec<f64> = self.decay.iter().map(|e| (-h * e).exp()).collect();
        self.cached = Some((h, f.clone()));
        f
    }

    /// Advance by `h`; refuses steps that break the advective CFL bound.
    pub fn step(&mut self, h: f64) -> Result<()> {
        let limit = self.cfl_limit();
        if h > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation {
                dt: h,
                limit,
                u_max: self.velocity_sup(),
            });
        }
        let e = self.factors(h);
        let t = self.t;
        let next = if !self.drift.is_active() && self.config.forcing.is_zero() {
            self.state.apply_multiplier(|i| e[i])
        } else {
            let n0 = self.nonlinear(&self.state, t)?;
            let mut star = self.state.clone();
            star.add_assign(&n0.scaled(h))?;
            let star = star.apply_multiplier(|i| e[i]);
            let n1 = self.nonlinear(&star, t + h)?;
            let mut next = self.state.apply_multiplier(|i| e[i]);
            let mut rhs = n0.apply_multiplier(|i| e[i]);
            rhs.add_assign(&n1)?;
            next.add_assign(&rhs.scaled(0.5 * h))?;
            next
        };
        if next
            .coeffs()
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::BlowUp { t: t + h });
        }
        self.state = next;
        self.t = t + h;
        self.steps += 1;
        Ok(())
    }
}

/// One step of the configured size.
pub fn step(solver: &mut Solver) -> Result<()> {
    let h = solver.config.dt;
    solver.step(h)
}

/// Full field kept at a time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

/// Time series of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub config_hash: String,
    pub j_max: i32,
    pub j_top: i32,
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub means: Vec<f64>,
    pub lp_orders: Vec<f64>,
    /// `lp_norms[order][time]`.
    pub lp_norms: Vec<Vec<f64>>,
    /// `block_sup[time][j + 1]`.
    pub block_sup: Vec<Vec<f64>>,
    /// `block_lp[order][time][j + 1]`.
    pub block_lp: Vec<Vec<Vec<f64>>>,
    pub snapshots: Vec<Snapshot>,
    pub forcing: Field,
    /// Largest velocity sup norm met during the run.
    pub drift_sup: f64,
    /// Measured `‖u‖_{Ċ^δ}` at the declared `δ` (largest over records).
    pub drift_holder: Option<f64>,
    pub drift_divergence: f64,
    pub mollifier_overshoot: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn initial(&self) -> &Field {
        &self.snapshots[0].field
    }

    pub fn terminal(&self) -> &Field {
        &self.snapshots.last().expect("terminal snapshot").field
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("nonempty history")
    }

    /// `‖Δ_jθ(t)‖_∞` history of one block.
    pub fn block_series(&self, j: i32) -> Vec<f64> {
        self.block_sup.iter().map(|b| b[(j + 1) as usize]).collect()
    }

    /// `max_{j ≤ j_max} 2^{js}‖Δ_jθ(t_i)‖_∞`.
    pub fn besov_sup(&self, i: usize, s: f64) -> f64 {
        (-1..=self.j_max)
            .map(|j| 2f64.powf(j as f64 * s) * self.block_sup[i][(j + 1) as usize])
            .fold(0.0, f64::max)
    }

    /// `max_{j ≤ j_max} 2^{js}‖Δ_jθ(t_i)‖_p` for a recorded order.
    pub fn besov_lp(&self, i: usize, s: f64, p: f64) -> Option<f64> {
        let o = self.lp_orders.iter().position(|&q| q == p)?;
        Some(
            (-1..=self.j_max)
                .map(|j| 2f64.powf(j as f64 * s) * self.block_lp[o][i][(j + 1) as usize])
                .fold(0.0, f64::max),
        )
    }

    pub fn lp_series(&self, p: f64) -> Option<&[f64]> {
        self.lp_orders
            .iter()
            .position(|&q| q == p)
            .map(|o| self.lp_norms[o].as_slice())
    }

    /// Snapshot closest to `t`.
    pub fn snapshot_near(&self, t: f64) -> &Snapshot {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("snapshots are never empty")
    }

    /// Index of the history time closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }
}

struct Recorder {
    part: DyadicPartition,
    traj: Trajectory,
    delta: Option<f64>,
}

impl Recorder {
    fn record(&mut self, solver: &Solver) -> Result<()> {
        let t = solver.time();
        let field = solver.field();
        let spec = solver.state();
        let tr = &mut self.traj;
        tr.times.push(t);
        tr.sup_norms.push(field.sup_norm());
        tr.means.push(spec.coeffs()[0].re);
        let blocks: Vec<Field> = (-1..=self.part.j_top())
            .map(|j| Ok(self.part.project_spectrum(spec, j)?.to_field()))
            .collect::<Result<_>>()?;
        tr.block_sup
            .push(blocks.iter().map(Field::sup_norm).collect());
        for (o, &p) in tr.lp_orders.iter().enumerate() {
            tr.lp_norms[o].push(field.lp_norm(p));
            tr.block_lp[o].push(blocks.iter().map(|b| lp_norm(b.values(), p)).collect());
        }
        if let Some(u) = solver.drift().field(spec, t) {
            tr.drift_sup = tr.drift_sup.max(u.sup_norm());
            if let Some(d) = self.delta {
                let h = drift_holder(&u, d);
                tr.drift_holder = Some(tr.drift_holder.unwrap_or(0.0).max(h));
            }
            if let Some(v) = solver.drift().velocity(spec, t) {
                tr.drift_divergence = tr.drift_divergence.max(divergence_sup(&v));
            }
        }
        Ok(())
    }
}

fn merged_checkpoints(config: &SolverConfig) -> Vec<f64> {
    let mut ts: Vec<f64> = config
        .record_times
        .iter()
        .chain(&config.snapshot_times)
        .copied()
        .filter(|&t| t > 0.0 && t < config.t_final)
        .collect();
    ts.push(config.t_final);
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * config.t_final);
    ts
}

/// Integrate a prepared solver to the configured horizon.
pub fn run(mut solver: Solver, mollifier_overshoot: f64) -> Result<Trajectory> {
    let config = solver.config().clone();
    let grid = config.grid;
    let part = DyadicPartition::new(grid)?;
    let n_orders = config.lp_orders.len();
    let mut rec = Recorder {
        traj: Trajectory {
            grid,
            config_hash: config.hash(),
            j_max: part.j_max(),
            j_top: part.j_top(),
            times: Vec::new(),
            sup_norms: Vec::new(),
            means: Vec::new(),
            lp_orders: config.lp_orders.clone(),
            lp_norms: vec![Vec::new(); n_orders],
            block_sup: Vec::new(),
            block_lp: vec![Vec::new(); n_orders],
            snapshots: vec![Snapshot {
                t: 0.0,
                field: solver.field(),
            }],
            forcing: solver.forcing(),
            drift_sup: 0.0,
            drift_holder: None,
            drift_divergence: 0.0,
            mollifier_overshoot,
            steps: 0,
        },
        delta: config.drift.declared_delta(),
        part,
    };
    rec.record(&solver)?;
    let checkpoints = merged_checkpoints(&config);
    let is_record = |t: f64| {
        config
            .record_times
            .iter()
            .any(|&r| (r - t).abs() <= 1e-12 * config.t_final)
    };
    let is_snapshot = |t: f64| {
        config
            .snapshot_times
            .iter()
            .any(|&r| (r - t).abs() <= 1e-12 * config.t_final)
    };
    let mut since_record = 0usize;
    for &target in &checkpoints {
        loop {
            let remaining = target - solver.time();
            if remaining <= 1e-12 * config.t_final {
                break;
            }
            let h = if remaining < config.dt * (1.0 + 1e-9) {
                remaining
            } else {
                config.dt
            };
            solver.step(h)?;
            since_record += 1;
            let landed = (target - solver.time()).abs() <= 1e-12 * config.t_final;
            if since_record >= config.record_every && !landed {
                rec.record(&solver)?;
                since_record = 0;
            }
        }
        let t = solver.time();
        if is_record(t)
            || is_snapshot(t)
            || target == config.t_final
            || since_record >= config.record_every
        {
            rec.record(&solver)?;
            since_record = 0;
        }
        if is_snapshot(t) || target == config.t_final {
            rec.traj.snapshots.push(Snapshot {
                t,
                field: solver.field(),
            });
        }
    }
    rec.traj.steps = solver.steps();
    Ok(rec.traj)
}

/// Build the solver from a config and integrate to `T`.
pub fn solve(config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let raw = config.initial.build(config.grid, &config.base_dir)?;
    solve_from(config, raw)
}

/// Integrate from explicit raw data.
pub fn solve_from(config: &SolverConfig, raw: Field) -> Result<Trajectory> {
    let overshoot = match config.mollify {
        Some(m) => mollify_data(&raw, m)?.overshoot,
        None => 0.0,
    };
    run(Solver::with_initial(config.clone(), raw)?, overshoot)
}

/// Write snapshots and histories of a trajectory under `dir`.
pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<Vec<PathBuf>> {
    io::write_trajectory(traj, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::LevyKernelSpec;

    fn fl(dim: usize, alpha: f64) -> LevyKernelSpec {
        LevyKernelSpec::fractional_laplacian(dim, alpha)
    }

    #[test]
    fn pure_diffusion_is_exact_semigroup() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let mut c = SolverConfig::new(g, fl(1, 0.5), 0.01, 1.0);
        c.initial = InitialSpec::Rough {
            amplitude: 1.0,
            seed: 2,
        };
        let traj = solve(&c).unwrap();
        let theta0 = traj.initial().to_spectrum();
        let expected = theta0.apply_multiplier(|i| (-g.wavenumber(i).sqrt()).exp());
        let got = traj.terminal().to_spectrum();
        let err = got
            .coeffs()
            .iter()
            .zip(expected.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!((traj.final_time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_drift_translates() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        // Translation composed with the exact diffusive decay of the mode.
        let mut c = SolverConfig::new(g, fl(1, 0.5), 1e-4, 2.0 * std::f64::consts::PI);
        c.drift = DriftSpec::Constant {
            velocity: vec![1.0],
        };
        c.initial = InitialSpec::Cosine {
            amplitude: 1.0,
            wavevector: [2, 0],
        };
        c.record_every = 10_000;
        let traj = solve(&c).unwrap();
        let decay = (-(2f64).sqrt() * c.t_final).exp();
        let expected = Field::from_fn(g, |x| decay * (2.0 * (x[0] - c.t_final)).cos());
        let err = traj.terminal().sub(&expected).unwrap().sup_norm();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn cfl_violation_is_refused() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let mut c = SolverConfig::new(g, fl(1, 0.5), 0.5, 1.0);
        c.drift = DriftSpec::Constant {
            velocity: vec![1.0],
        };
        c.initial = InitialSpec::Cosine {
            amplitude: 1.0,
            wavevector: [1, 0],
        };
        assert!(matches!(solve(&c), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn sqg_energy_decreases_and_mean_is_conserved() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let mut c = SolverConfig::new(g, fl(2, 0.5), 0.01, 0.5);
        c.drift = DriftSpec::Sqg {};
        c.initial = InitialSpec::BandLimited {
            amplitude: 0.3,
            kmax: 4.0,
            seed: 5,
        };
        let traj = solve(&c).unwrap();
        let l2 = traj.lp_series(2.0).unwrap();
        for w in l2.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-8), "{} -> {}", w[0], w[1]);
        }
        let m0 = traj.means[0];
        assert!(traj.means.iter().all(|m| (m - m0).abs() < 1e-14));
        assert!(traj.drift_divergence < 1e-12);
    }

    #[test]
    fn self_convergence_between_resolutions() {
        let run = |n: usize| {
            let g = Grid::new(1, n, 1.0).unwrap();
            let mut c = SolverConfig::new(g, fl(1, 0.7), 2e-3, 0.5);
            c.drift = DriftSpec::Constant {
                velocity: vec![0.3],
            };
            c.initial = InitialSpec::BandLimited {
                amplitude: 0.2,
                kmax: 6.0,
                seed: 1,
            };
            c.record_every = 100;
            solve(&c).unwrap()
        };
        let a = run(64);
        let b = run(128);
        let fine_on_coarse = b.terminal().restrict_to(*a.terminal().grid()).unwrap();
        assert!(fine_on_coarse.sub(a.terminal()).unwrap().sup_norm() < 1e-6);
    }

    #[test]
    fn checkpoints_are_hit_exactly() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let mut c = SolverConfig::new(g, fl(1, 0.5), 0.1, 1.0);
        c.record_every = 4;
        c.record_times = vec![0.05, 0.333];
        c.snapshot_times = vec![0.5];
        c.initial = InitialSpec::Cosine {
            amplitude: 1.0,
            wavevector: [1, 0],
        };
        let traj = solve(&c).unwrap();
        for t in [0.0, 0.05, 0.333, 0.5, 1.0] {
            assert!(
                traj.times.iter().any(|&s| (s - t).abs() < 1e-12),
                "{t} missing"
            );
        }
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.snapshots.len(), 3);
        assert_eq!(traj.times.len(), traj.block_sup.len());
    }
}
