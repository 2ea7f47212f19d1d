//! Smoothing rates, the `C^{1,γ}` window and the `L^p` ladder.

use serde::{Deserialize, Serialize};

use super::schedule::{EmbeddingChain, Framework, IterationSchedule};
use crate::error::{Error, Result};
use crate::littlewood_paley::{besov_norm, holder_seminorm, DyadicPartition};
use crate::report::EstimateReport;
use crate::solver::Trajectory;

/// Relative change tolerated under `N → 2N`.
pub const REFINEMENT_TOL: f64 = 0.25;

fn besov_at(traj: &Trajectory, i: usize, s: f64, p: f64) -> Result<f64> {
    if p.is_infinite() {
        Ok(traj.besov_sup(i, s))
    } else {
        traj.besov_lp(i, s, p)
            .ok_or_else(|| Error::Config(format!("L^{p} block history was not recorded")))
    }
}

fn relative_change(coarse: f64, fine: f64) -> f64 {
    if !(coarse.is_finite() && fine.is_finite()) {
        return f64::INFINITY;
    }
    if coarse == fine {
        return 0.0;
    }
    (fine / coarse - 1.0).abs()
}

/// `W(t) = t^{s/(α−σ)} ‖θ(t)‖_{B^s_{p,∞}}` at every recorded `t > 0`.
pub fn smoothing_profile(
    traj: &Trajectory,
    s: f64,
    alpha_minus_sigma: f64,
    p: f64,
) -> Result<Vec<(f64, f64)>> {
    let e = s / alpha_minus_sigma;
    traj.times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t > 0.0)
        .map(|(i, &t)| Ok((t, t.powf(e) * besov_at(traj, i, s, p)?)))
        .collect()
}

fn profile_sup(profile: &[(f64, f64)]) -> (f64, f64) {
    profile
        .iter()
        .fold((f64::NEG_INFINITY, 0.0), |(m, tm), &(t, w)| {
            if w > m || w.is_nan() {
                (w, t)
            } else {
                (m, tm)
            }
        })
}

/// `sup_t W(t)` finite and within 25% between resolutions `N` and `2N`.
pub fn check_smoothing_rate(
    coarse: &Trajectory,
    fine: &Trajectory,
    s: f64,
    alpha: f64,
    sigma: f64,
    delta: Option<f64>,
    framework: Framework,
    p: f64,
) -> Result<EstimateReport> {
    let a = alpha - sigma;
    let floor = match framework {
        Framework::LInfinity => 1.0 - delta.unwrap_or(1.0),
        Framework::Lp => 0.0,
    };
    if !(s > floor && s < a) {
        return Err(Error::Schedule(format!(
            "smoothing exponent s = {s} must lie in ({floor}, {a})"
        )));
    }
    let (wc, tc) = profile_sup(&smoothing_profile(coarse, s, a, p)?);
    let (wf, tf) = profile_sup(&smoothing_profile(fine, s, a, p)?);
    let rel = relative_change(wc, wf);
    let mut report = EstimateReport::new("smoothing_rate", "smooth-step1")
        .with_hash(&coarse.config_hash)
        .constant("s", s)
        .constant("p", p)
        .constant("sup_w_coarse", wc)
        .constant("sup_w_fine", wf)
        .constant("t_at_sup_coarse", tc)
        .constant("t_at_sup_fine", tf)
        .constant("relative_change", rel)
        .constant("theta0_sup", coarse.sup_norms[0]);
    report.set("n_coarse", coarse.grid.n() as f64);
    report.set("n_fine", fine.grid.n() as f64);
    report.note("residual: |sup W(2N) / sup W(N) - 1|");
    Ok(report.judge(rel, REFINEMENT_TOL))
}

/// Norm at one waypoint of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub waypoint: f64,
    pub regularity: f64,
    pub norm: f64,
}

/// Window maximum of `‖θ(t)‖_{B^{1+γ}_{p,∞}}` over `[t̃, T]` plus the
/// ladder norms `‖θ(t_i)‖_{B^{s₀+…+s_i}_{p,∞}}` for `i ≤ k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowNorm {
    pub max: f64,
    pub t_at_max: f64,
    pub ladder: Vec<LadderRung>,
}

fn recorded_index(traj: &Trajectory, t: f64) -> Result<usize> {
    let i = traj.index_near(t);
    if (traj.times[i] - t).abs() > 1e-9 * traj.final_time().max(1.0) {
        return Err(Error::Config(format!(
            "time {t} was not recorded (closest record {}); add it to record_times",
            traj.times[i]
        )));
    }
    Ok(i)
}

pub fn c1gamma_window(
    traj: &Trajectory,
    schedule: &IterationSchedule,
    gamma: f64,
    p: f64,
) -> Result<WindowNorm> {
    let mut max = f64::NEG_INFINITY;
    let mut t_at_max = schedule.t_tilde;
    for (i, &t) in traj.times.iter().enumerate() {
        if t + 1e-12 < schedule.t_tilde {
            continue;
        }
        let v = besov_at(traj, i, 1.0 + gamma, p)?;
        if v > max || v.is_nan() {
            max = v;
            t_at_max = t;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::Config(format!(
            "no record inside the window [{}, T]",
            schedule.t_tilde
        )));
    }
    let sums = schedule.partial_sums();
    let ladder = schedule
        .waypoints
        .iter()
        .zip(&sums)
        .take(schedule.k + 1)
        .map(|(&t, &reg)| {
            let i = recorded_index(traj, t)?;
            Ok(LadderRung {
                waypoint: t,
                regularity: reg,
                norm: besov_at(traj, i, reg, p)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(WindowNorm {
        max,
        t_at_max,
        ladder,
    })
}

/// `‖θ₀‖_∞ + ‖f‖_∞ + [f]_{C^δ}`.
pub fn data_norm(traj: &Trajectory, delta: f64) -> f64 {
    let f = &traj.forcing;
    let seminorm = if f.sup_norm() > 0.0 {
        holder_seminorm(f, delta)
    } else {
        0.0
    };
    traj.sup_norms[0] + f.sup_norm() + seminorm
}

/// Frozen window constant with its relative slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenConstant {
    pub value: f64,
    pub slack: f64,
}

/// Window norm finite, stable under `N → 2N` within 25%, ladder finite at
/// every waypoint and, when frozen, `max ≤ C (‖θ₀‖_∞ + ‖f‖_{C^δ})`.
pub fn check_c1gamma(
    coarse: &Trajectory,
    fine: &Trajectory,
    schedule: &IterationSchedule,
    frozen: Option<FrozenConstant>,
) -> Result<EstimateReport> {
    let wc = c1gamma_window(coarse, schedule, schedule.gamma, f64::INFINITY)?;
    let wf = c1gamma_window(fine, schedule, schedule.gamma, f64::INFINITY)?;
    let data = data_norm(coarse, schedule.delta);
    let c_fit = wc.max / data;
    let rel = relative_change(wc.max, wf.max);
    let mut report = EstimateReport::new("c1gamma_window", "c1gamma-thm1")
        .with_hash(&coarse.config_hash)
        .constant("gamma", schedule.gamma)
        .constant("t_tilde", schedule.t_tilde)
        .constant("window_coarse", wc.max)
        .constant("window_fine", wf.max)
        .constant("relative_change", rel)
        .constant("data_norm", data)
        .constant("c_fit", c_fit)
        .constant("k", schedule.k as f64);
    let mut ladder_ok = true;
    for (i, (a, b)) in wc.ladder.iter().zip(&wf.ladder).enumerate() {
        report.set(&format!("ladder{i}_coarse"), a.norm);
        report.set(&format!("ladder{i}_fine"), b.norm);
        ladder_ok &= a.norm.is_finite() && b.norm.is_finite();
    }
    report.note("residual: |window(2N) / window(N) - 1|; infinite when a ladder norm diverges or the frozen constant is exceeded");
    let mut residual = if ladder_ok { rel } else { f64::INFINITY };
    if let Some(fc) = frozen {
        report.set("c_frozen", fc.value);
        if !(c_fit <= fc.value * (1.0 + fc.slack)) {
            report.note(format!(
                "fitted constant {c_fit:.6e} exceeds frozen {:.6e}",
                fc.value
            ));
            residual = f64::INFINITY;
        }
    }
    Ok(report.judge(residual, REFINEMENT_TOL))
}

/// Ladder norms at the waypoints only, compared across resolutions.
pub fn check_ladder(
    coarse: &Trajectory,
    fine: &Trajectory,
    schedule: &IterationSchedule,
    p: f64,
) -> Result<EstimateReport> {
    let wc = c1gamma_window(coarse, schedule, schedule.gamma, p)?;
    let wf = c1gamma_window(fine, schedule, schedule.gamma, p)?;
    let mut report = EstimateReport::new("iteration_ladder", "ladder-step2")
        .with_hash(&coarse.config_hash)
        .constant("k", schedule.k as f64)
        .constant("p", p);
    let mut worst = 0.0f64;
    for (i, (a, b)) in wc.ladder.iter().zip(&wf.ladder).enumerate() {
        report.set(&format!("waypoint{i}"), a.waypoint);
        report.set(&format!("regularity{i}"), a.regularity);
        report.set(&format!("ladder{i}_coarse"), a.norm);
        report.set(&format!("ladder{i}_fine"), b.norm);
        worst = worst.max(relative_change(a.norm, b.norm));
    }
    report.note("residual: worst |rung(2N) / rung(N) - 1| over the waypoints");
    Ok(report.judge(worst, REFINEMENT_TOL))
}

/// `L^p` path: ladder in `B^{Σs}_{p,∞}`, the `B^{1+ν}_{p_j,∞}` norms of the
/// embedding chain at `t̃`, and the `B^{1+γ}_{∞,∞}` window with `γ` from the
/// chain, stable under `N → 2N`.
pub fn check_lp_smoothing_ladder(
    coarse: &Trajectory,
    fine: &Trajectory,
    schedule: &IterationSchedule,
    chain: &EmbeddingChain,
    p: f64,
) -> Result<EstimateReport> {
    if schedule.framework != Framework::Lp {
        return Err(Error::Schedule(
            "the L^p ladder needs an L^p schedule".into(),
        ));
    }
    if coarse.drift_divergence > 1e-8 || fine.drift_divergence > 1e-8 {
        return Err(Error::Config(
            "the L^p ladder needs a divergence-free drift".into(),
        ));
    }
    let lc = c1gamma_window(coarse, schedule, chain.gamma, p)?;
    let lf = c1gamma_window(fine, schedule, chain.gamma, p)?;
    let wc = c1gamma_window(coarse, schedule, chain.gamma, f64::INFINITY)?;
    let wf = c1gamma_window(fine, schedule, chain.gamma, f64::INFINITY)?;
    let rel = relative_change(wc.max, wf.max);
    let mut report = EstimateReport::new("lp_smoothing_ladder", "c1gamma-thm2")
        .with_hash(&coarse.config_hash)
        .constant("p", p)
        .constant("nu", chain.nu)
        .constant("gamma", chain.gamma)
        .constant("upgrades", chain.upgrades() as f64)
        .constant("window_coarse", wc.max)
        .constant("window_fine", wf.max)
        .constant("relative_change", rel);
    let mut finite = wc.max.is_finite() && wf.max.is_finite();
    for (i, (a, b)) in lc.ladder.iter().zip(&lf.ladder).enumerate() {
        report.set(&format!("ladder{i}_coarse"), a.norm);
        report.set(&format!("ladder{i}_fine"), b.norm);
        finite &= a.norm.is_finite() && b.norm.is_finite();
    }
    let snap = coarse.snapshot_near(schedule.t_tilde);
    if (snap.t - schedule.t_tilde).abs() > 1e-9 * coarse.final_time().max(1.0) {
        return Err(Error::Config(format!(
            "no snapshot at t_tilde = {}",
            schedule.t_tilde
        )));
    }
    let part = DyadicPartition::new(coarse.grid)?;
    for (j, &pj) in chain.orders.iter().enumerate() {
        let b = besov_norm(&snap.field, 1.0 + chain.nu, pj, f64::INFINITY, &part)?.total;
        report.set(&format!("chain{j}_order"), pj);
        report.set(&format!("chain{j}_norm"), b);
        finite &= b.is_finite();
    }
    let f = &coarse.forcing;
    report.set(
        "forcing_besov_p",
        besov_norm(f, schedule.delta, p, f64::INFINITY, &part)?.total,
    );
    report.set(
        "forcing_besov_inf",
        besov_norm(f, schedule.delta, f64::INFINITY, f64::INFINITY, &part)?.total,
    );
    report.note("residual: |window(2N) / window(N) - 1| of the B^{1+gamma}_{inf,inf} window; infinite when a ladder or chain norm diverges");
    Ok(report.judge(if finite { rel } else { f64::INFINITY }, REFINEMENT_TOL))
}
