//! Maximum principle and `L^p` growth bound.

use crate::error::{Error, Result};
use crate::report::EstimateReport;
use crate::solver::Trajectory;

/// Relative slack of the sup-norm bound.
pub const TOL_MP: f64 = 1e-3;

/// `max_t ‖θ(t)‖_∞ ≤ ‖θ₀‖_∞ + t‖f‖_∞ + tol`. Kernels that fail the
/// positivity audit get a not-applicable report carrying the measurement.
pub fn check_maximum_principle(traj: &Trajectory, kernel_nonnegative: bool) -> EstimateReport {
    let sup0 = traj.sup_norms[0];
    let f_sup = traj.forcing.sup_norm();
    let t_final = traj.final_time();
    let scale = match sup0.max(t_final * f_sup) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let mut excess = f64::NEG_INFINITY;
    let mut t_worst = 0.0;
    for (&t, &s) in traj.times.iter().zip(&traj.sup_norms) {
        let e = (s - sup0 - t * f_sup) / scale;
        if e > excess || e.is_nan() {
            excess = e;
            t_worst = t;
        }
    }
    let max_sup = traj
        .sup_norms
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut report = EstimateReport::new("maximum_principle", "mp-31")
        .with_hash(&traj.config_hash)
        .constant("sup_initial", sup0)
        .constant("sup_max", max_sup)
        .constant("forcing_sup", f_sup)
        .constant("t_worst", t_worst)
        .constant("relative_excess", excess);
    if !kernel_nonnegative {
        report.residual = excess;
        return report.not_applicable(
            "kernel is not nonnegative; the sup-norm bound is reported without assertion",
        );
    }
    report.note("residual: max_t (|theta(t)|_inf - |theta_0|_inf - t |f|_inf) / scale");
    report.judge(excess.max(0.0), TOL_MP)
}

/// Admissible growth constant in the `L^p` bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpCap {
    /// `C′ ≤ value`.
    Value(f64),
    /// Only finiteness is asserted.
    Finite,
}

/// `C′ = max(0, ln(max_t ‖θ‖_p / (‖θ₀‖_p + T‖f‖_p))) / T`.
pub fn lp_growth_constant(traj: &Trajectory, p: f64) -> Result<f64> {
    let series = traj
        .lp_series(p)
        .ok_or_else(|| Error::Config(format!("L^{p} history was not recorded")))?;
    let t_final = traj.final_time();
    let base = series[0] + t_final * traj.forcing.lp_norm(p);
    let peak = series.iter().cloned().fold(0.0f64, f64::max);
    if series.iter().any(|v| !v.is_finite()) {
        return Ok(f64::INFINITY);
    }
    if peak == 0.0 {
        return Ok(0.0);
    }
    if base == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((peak / base).ln().max(0.0) / t_final)
}

/// Fits `C′` and asserts it against the cap.
pub fn check_lp_bound(traj: &Trajectory, p: f64, cap: LpCap) -> Result<EstimateReport> {
    if traj.drift_divergence > 1e-8 {
        return Err(Error::Config(format!(
            "L^p bound needs a divergence-free drift (measured |div u|_inf = {:e})",
            traj.drift_divergence
        )));
    }
    let c = lp_growth_constant(traj, p)?;
    let mut report = EstimateReport::new("lp_bound", "lp-43")
        .with_hash(&traj.config_hash)
        .constant("p", p)
        .constant("c_prime", c)
        .constant(
            "lp_initial",
            traj.lp_series(p).map(|s| s[0]).unwrap_or(f64::NAN),
        );
    Ok(match cap {
        LpCap::Value(v) => {
            report.note("residual: fitted C'");
            report.constant("cap", v).judge(c, v)
        }
        LpCap::Finite => {
            report.note("residual: 0 when the fitted C' is finite");
            report.judge(if c.is_finite() { 0.0 } else { f64::INFINITY }, 0.0)
        }
    })
}

/// `C′` from two runs that differ only in the time step, within ±20%.
pub fn check_lp_constant_stability(
    coarse_dt: &Trajectory,
    fine_dt: &Trajectory,
    p: f64,
) -> Result<EstimateReport> {
    let a = lp_growth_constant(coarse_dt, p)?;
    let b = lp_growth_constant(fine_dt, p)?;
    let rel = if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    };
    let mut report = EstimateReport::new("lp_constant_dt_stability", "lp-43")
        .with_hash(&coarse_dt.config_hash)
        .constant("p", p)
        .constant("c_prime_dt", a)
        .constant("c_prime_half_dt", b)
        .constant("relative_change", rel);
    report.note("residual: |C'(dt/2) - C'(dt)| / max");
    let residual = if a.is_finite() && b.is_finite() {
        rel
    } else {
        f64::INFINITY
    };
    Ok(report.judge(residual, 0.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::LevyKernelSpec;
    use crate::solver::{solve, ForcingSpec, InitialSpec, SolverConfig};
    use crate::spectral::Grid;

    fn base(n: usize) -> SolverConfig {
        let g = Grid::new(1, n, 1.0).unwrap();
        let mut c = SolverConfig::new(g, LevyKernelSpec::fractional_laplacian(1, 0.5), 0.01, 1.0);
        c.lp_orders = vec![2.0, 4.0];
        c
    }

    #[test]
    fn zero_data_constant_forcing_grows_linearly() {
        let mut c = base(32);
        c.forcing = ForcingSpec::Constant { value: 0.5 };
        let traj = solve(&c).unwrap();
        assert!((traj.terminal().sup_norm() - 0.5).abs() < 1e-12);
        let r = check_maximum_principle(&traj, true);
        assert!(r.passed() && r.residual < 1e-12, "{}", r.summary_line());
    }

    #[test]
    fn signed_kernel_is_not_applicable() {
        let mut c = base(32);
        c.initial = InitialSpec::Rough {
            amplitude: 1.0,
            seed: 1,
        };
        let traj = solve(&c).unwrap();
        let r = check_maximum_principle(&traj, false);
        assert_eq!(r.status, crate::report::CheckStatus::NotApplicable);
    }

    #[test]
    fn zero_state_stays_zero() {
        let traj = solve(&base(32)).unwrap();
        assert!(traj.sup_norms.iter().all(|&s| s == 0.0));
        assert_eq!(lp_growth_constant(&traj, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn fractional_diffusion_has_zero_growth() {
        let mut c = base(64);
        c.initial = InitialSpec::Rough {
            amplitude: 1.0,
            seed: 2,
        };
        let traj = solve(&c).unwrap();
        for p in [2.0, 4.0] {
            let r = check_lp_bound(&traj, p, LpCap::Value(1e-6)).unwrap();
            assert!(
                r.passed() && r.constants["c_prime"] == 0.0,
                "{}",
                r.summary_line()
            );
        }
    }
}
