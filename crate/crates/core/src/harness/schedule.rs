//! Iteration ladder, block threshold `j₀` and the `L^p` embedding chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which a priori framework a schedule or threshold belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framework {
    /// Increments in `(1 − δ, α − σ)`.
    LInfinity,
    /// Increments in `(0, α − σ)`.
    Lp,
}

/// Increments `s₀..s_{k+1}` with waypoints `t₀ < … < t_{k+1} = t̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSchedule {
    pub alpha: f64,
    pub sigma: f64,
    pub delta: f64,
    pub framework: Framework,
    pub k: usize,
    pub increments: Vec<f64>,
    pub waypoints: Vec<f64>,
    pub t_tilde: f64,
    pub gamma: f64,
}

/// Smallest `k ≥ 0` with `α − σ ∈ (1/(k+2), 1/(k+1)]`.
pub fn ladder_depth(alpha_minus_sigma: f64) -> Result<usize> {
    if !(alpha_minus_sigma > 0.0 && alpha_minus_sigma <= 1.0) {
        return Err(Error::Schedule(format!(
            "alpha - sigma must lie in (0, 1], got {alpha_minus_sigma}"
        )));
    }
    let mut k = 0usize;
    while alpha_minus_sigma <= 1.0 / (k as f64 + 2.0) {
        k += 1;
    }
    Ok(k)
}

impl IterationSchedule {
    /// Equal increments `s_i = (1 + γ)/(k + 2)` and the default waypoints
    /// `t_i = (i + 1)/(k + 2) · t̃`. Drift exponents at the endpoint
    /// `δ = 1 − α + σ` are rejected unless `allow_endpoint` is set.
    pub fn new(
        alpha: f64,
        sigma: f64,
        delta: f64,
        gamma: f64,
        t_tilde: f64,
        framework: Framework,
        allow_endpoint: bool,
    ) -> Result<Self> {
        let a = alpha - sigma;
        let k = ladder_depth(a)?;
        let lower = 1.0 - a;
        if delta > 1.0
            || delta < lower
            || (delta == lower && !allow_endpoint)
            || (delta == 1.0 && !allow_endpoint)
        {
            return Err(Error::Schedule(format!(
                "delta = {delta} must lie strictly inside (1 - alpha + sigma, 1) = ({lower}, 1)"
            )));
        }
        if !(gamma > 0.0) || !(t_tilde > 0.0) {
            return Err(Error::Schedule(format!(
                "gamma and t_tilde must be positive, got {gamma}, {t_tilde}"
            )));
        }
        let total = 1.0 + gamma;
        if total >= delta + a {
            return Err(Error::Schedule(format!(
                "1 + gamma = {total} must stay below delta + alpha - sigma = {}",
                delta + a
            )));
        }
        let s = total / (k as f64 + 2.0);
        let floor = match framework {
            Framework::LInfinity => 1.0 - delta,
            Framework::Lp => 0.0,
        };
        if !(s > floor && s < a) {
            return Err(Error::Schedule(format!(
                "increment {s} falls outside ({floor}, {a}); choose a smaller gamma"
            )));
        }
        let m = k + 2;
        Ok(Self {
            alpha,
            sigma,
            delta,
            framework,
            k,
            increments: vec![s; m],
            waypoints: (0..m)
                .map(|i| (i + 1) as f64 / m as f64 * t_tilde)
                .collect(),
            t_tilde,
            gamma,
        })
    }

    /// Replace the waypoints; they must increase strictly and end at `t̃`.
    pub fn with_waypoints(mut self, waypoints: Vec<f64>) -> Result<Self> {
        if waypoints.len() != self.increments.len() {
            return Err(Error::Schedule(format!(
                "expected {} waypoints, got {}",
                self.increments.len(),
                waypoints.len()
            )));
        }
        if waypoints[0] <= 0.0 || waypoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schedule(
                "waypoints must be positive and strictly increasing".into(),
            ));
        }
        self.t_tilde = *waypoints.last().expect("nonempty");
        self.waypoints = waypoints;
        Ok(self)
    }

    /// `s₀ + … + s_i` for every rung.
    pub fn partial_sums(&self) -> Vec<f64> {
        self.increments
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect()
    }

    pub fn alpha_minus_sigma(&self) -> f64 {
        self.alpha - self.sigma
    }
}

/// Fitted constants feeding the threshold formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConstants {
    /// Slope `c` of the rate fit `rate ≈ c 2^{j(α−σ)} − C₁`.
    pub c: f64,
    /// Offset `C₁`.
    pub c1: f64,
    /// Commutator constant `C` (or `C̃` in the `L^p` framework).
    pub commutator: f64,
}

/// Exponent scaling of the drift term in the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    LInfinity,
    Lp,
    /// Rung with accumulated regularity `s₀ + s`.
    Ladder {
        regularity: f64,
    },
}

fn floor_log(x: f64, scale: f64) -> Option<f64> {
    (x > 0.0 && x.is_finite()).then(|| (x.log2() * scale).floor())
}

/// `j₀ = max{⌊κ log₂(2C‖u‖)⌋, ⌊log₂(2C₁/c)/(α−σ)⌋} + 1` with
/// `κ = 1/(δ − (1 − α + σ))` (doubled on ladder rungs with `s₀ + s ≤ 1`,
/// `1/(δ + α − σ − (s₀ + s))` above one). Branches with a nonpositive
/// argument drop out; the result is at least `0`.
pub fn fit_j0(
    u_norm: f64,
    alpha: f64,
    sigma: f64,
    delta: f64,
    constants: &DecayConstants,
    threshold: Threshold,
) -> Result<i32> {
    let a = alpha - sigma;
    let gap = delta - (1.0 - a);
    if !(gap > 0.0) {
        return Err(Error::Schedule(format!(
            "delta = {delta} must exceed 1 - alpha + sigma = {}",
            1.0 - a
        )));
    }
    let kappa = match threshold {
        Threshold::LInfinity | Threshold::Lp => 1.0 / gap,
        Threshold::Ladder { regularity } if regularity <= 1.0 => 2.0 / gap,
        Threshold::Ladder { regularity } => {
            let room = delta + a - regularity;
            if !(room > 0.0) {
                return Err(Error::Schedule(format!(
                    "rung regularity {regularity} must stay below delta + alpha - sigma = {}",
                    delta + a
                )));
            }
            1.0 / room
        }
    };
    let drift = floor_log(2.0 * constants.commutator * u_norm, kappa);
    let diffusion = if constants.c > 0.0 {
        floor_log(2.0 * constants.c1 / constants.c, 1.0 / a)
    } else {
        return Err(Error::Schedule(format!(
            "fitted diffusion slope must be positive, got {}",
            constants.c
        )));
    };
    let top = [drift, diffusion]
        .into_iter()
        .flatten()
        .fold(-1.0, f64::max);
    Ok((top as i32 + 1).max(0))
}

/// `fit_j0`, rejecting thresholds beyond the resolved blocks.
pub fn fit_j0_resolved(
    u_norm: f64,
    alpha: f64,
    sigma: f64,
    delta: f64,
    constants: &DecayConstants,
    threshold: Threshold,
    j_max: i32,
) -> Result<i32> {
    let j0 = fit_j0(u_norm, alpha, sigma, delta, constants, threshold)?;
    if j0 > j_max {
        return Err(Error::Schedule(format!(
            "threshold j0 = {j0} exceeds J_max = {j_max}; the configuration is under-resolved"
        )));
    }
    Ok(j0)
}

/// Integrability ladder of the `L^p` path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingChain {
    pub d: usize,
    pub p: f64,
    pub nu: f64,
    /// `m` of the chain rule, `None` when `p > d/ν` already.
    pub m: Option<usize>,
    /// `d/p_j` for `j = 0..=m+1` (just `d/p` without upgrades).
    pub inverse_orders: Vec<f64>,
    /// `p_j` for the same indices.
    pub orders: Vec<f64>,
    pub gamma: f64,
}

impl EmbeddingChain {
    /// `ν = min{((k+2)(α−σ) − 1)/2, (δ + α − σ − 1)/2}`. For `p > d/ν` the
    /// embedding `B^{1+ν}_{p,∞} ↪ B^{1+ν−d/p}_{∞,∞}` gives `γ = ν − d/p`;
    /// otherwise `d/p_j = d/p − j(1 + ν)` up to the `m` with
    /// `d/p − m(1+ν) ≥ ν > d/p − (m+1)(1+ν)`, followed by `p_{m+1} = 2d/ν`
    /// and `γ = ν/2`.
    pub fn new(d: usize, p: f64, alpha: f64, sigma: f64, delta: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Schedule(format!(
                "p must be finite and >= 1, got {p}"
            )));
        }
        let a = alpha - sigma;
        let k = ladder_depth(a)? as f64;
        let nu = (((k + 2.0) * a - 1.0) / 2.0).min((delta + a - 1.0) / 2.0);
        if !(nu > 0.0) {
            return Err(Error::Schedule(format!("nu = {nu} must be positive")));
        }
        let df = d as f64;
        let dp = df / p;
        if dp < nu {
            return Ok(Self {
                d,
                p,
                nu,
                m: None,
                inverse_orders: vec![dp],
                orders: vec![p],
                gamma: nu - dp,
            });
        }
        let mut m = 0usize;
        while dp - (m as f64 + 1.0) * (1.0 + nu) >= nu {
            m += 1;
        }
        let mut inverse_orders: Vec<f64> = (0..=m).map(|j| dp - j as f64 * (1.0 + nu)).collect();
        inverse_orders.push(nu / 2.0);
        let orders = inverse_orders.iter().map(|x| df / x).collect();
        Ok(Self {
            d,
            p,
            nu,
            m: Some(m),
            inverse_orders,
            orders,
            gamma: nu / 2.0,
        })
    }

    /// Number of integrability upgrades `p → p₁ → …`.
    pub fn upgrades(&self) -> usize {
        self.m.map(|m| m + 1).unwrap_or(0)
    }

    /// Order whose `B^{1+ν}` norm feeds the final embedding.
    pub fn final_order(&self) -> f64 {
        *self.orders.last().expect("nonempty chain")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_rung_ladder() {
        let s =
            IterationSchedule::new(0.5, 0.1, 0.9, 0.1, 0.5, Framework::LInfinity, false).unwrap();
        assert_eq!(s.k, 1);
        assert_eq!(s.increments.len(), 3);
        assert!((s.increments[0] - 1.1 / 3.0).abs() < 1e-15);
        assert!((s.waypoints[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((s.waypoints[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.waypoints[2] - 0.5).abs() < 1e-15);
        assert!((s.partial_sums()[2] - 1.1).abs() < 1e-14);
    }

    #[test]
    fn endpoint_delta_needs_override() {
        let e = IterationSchedule::new(0.5, 0.1, 0.6, 0.05, 0.5, Framework::LInfinity, false);
        assert!(matches!(e, Err(Error::Schedule(_))));
        assert!(
            IterationSchedule::new(0.5, 0.0, 0.5, 0.01, 0.5, Framework::LInfinity, false).is_err()
        );
        assert!(
            IterationSchedule::new(0.6, 0.0, 0.8, 0.1, 0.5, Framework::LInfinity, false).is_ok()
        );
    }

    #[test]
    fn depth_boundaries() {
        assert_eq!(ladder_depth(1.0).unwrap(), 0);
        assert_eq!(ladder_depth(0.5).unwrap(), 1);
        assert_eq!(ladder_depth(0.51).unwrap(), 0);
        assert_eq!(ladder_depth(0.34).unwrap(), 1);
        assert_eq!(ladder_depth(1.0 / 3.0).unwrap(), 2);
    }

    fn consts() -> DecayConstants {
        DecayConstants {
            c: 0.8,
            c1: 2.0,
            commutator: 3.0,
        }
    }

    #[test]
    fn vanishing_drift_leaves_diffusion_branch() {
        let j0 = fit_j0(0.0, 0.5, 0.0, 0.8, &consts(), Threshold::LInfinity).unwrap();
        let expected = ((2.0f64 * 2.0 / 0.8).log2() / 0.5).floor() as i32 + 1;
        assert_eq!(j0, expected);
    }

    #[test]
    fn under_resolved_threshold_is_rejected() {
        let r = fit_j0_resolved(1e6, 0.5, 0.0, 0.8, &consts(), Threshold::LInfinity, 5);
        assert!(matches!(r, Err(Error::Schedule(_))));
    }

    #[test]
    fn chain_for_one_dimensional_l2() {
        let c = EmbeddingChain::new(1, 2.0, 0.8, 0.1, 0.95).unwrap();
        assert!((c.nu - 0.2).abs() < 1e-12);
        assert_eq!(c.m, Some(0));
        assert!((c.final_order() - 10.0).abs() < 1e-9);
        assert!((c.gamma - 0.1).abs() < 1e-12);
        let direct = EmbeddingChain::new(1, 8.0, 0.8, 0.1, 0.95).unwrap();
        assert_eq!(direct.upgrades(), 0);
        assert!((direct.gamma - (0.2 - 0.125)).abs() < 1e-12);
    }

    #[test]
    fn chain_for_two_dimensional_l2() {
        let c = EmbeddingChain::new(2, 2.0, 0.6, 0.0, 0.45).unwrap();
        assert!(c.nu < 0.05);
        assert!(c.upgrades() >= 1);
        assert!(c.orders.windows(2).all(|w| w[1] > w[0]));
        assert!(c.final_order() > 2.0 / c.nu);
    }

    proptest! {
        #[test]
        fn doubling_drift_moves_threshold_boundedly(
            u in 1e-3f64..1e3,
            alpha in 0.3f64..1.0,
            frac in 0.05f64..0.95,
            c in 0.1f64..5.0,
            c1 in 0.0f64..5.0,
            comm in 0.1f64..10.0,
        ) {
            let sigma = 0.0;
            let delta = 1.0 - alpha + frac * alpha;
            let k = DecayConstants { c, c1, commutator: comm };
            let a = fit_j0(u, alpha, sigma, delta, &k, Threshold::LInfinity).unwrap();
            let b = fit_j0(2.0 * u, alpha, sigma, delta, &k, Threshold::LInfinity).unwrap();
            let bound = (1.0 / (delta - (1.0 - alpha))).ceil() as i32;
            prop_assert!(b >= a && b - a <= bound);
        }

        #[test]
        fn chain_terminates_past_d_over_nu(
            d in 1usize..=2,
            p in 1.0f64..16.0,
            alpha in 0.3f64..1.0,
            sigma_frac in 0.0f64..0.5,
            delta_frac in 0.05f64..0.95,
        ) {
            let sigma = sigma_frac * alpha;
            let a = alpha - sigma;
            let delta = 1.0 - a + delta_frac * a;
            let c = EmbeddingChain::new(d, p, alpha, sigma, delta).unwrap();
            prop_assert!(c.gamma > 0.0);
            prop_assert!(c.orders.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(c.final_order() > d as f64 / c.nu);
        }

        #[test]
        fn schedule_invariants(alpha in 0.2f64..1.0, delta_frac in 0.05f64..0.95, g_frac in 0.05f64..0.95) {
            let a = alpha;
            let delta = 1.0 - a + delta_frac * a;
            let k = ladder_depth(a).unwrap() as f64;
            let gamma_max = (delta + a - 1.0).min((k + 2.0) * a - 1.0);
            let gamma = g_frac * gamma_max;
            if let Ok(s) = IterationSchedule::new(alpha, 0.0, delta, gamma, 1.0, Framework::LInfinity, false) {
                let total: f64 = s.increments.iter().sum();
                prop_assert!(total > 1.0 && total < delta + a);
                prop_assert!(s.increments.iter().all(|&x| x > 1.0 - delta && x < a));
                prop_assert!(a > 1.0 / (s.k as f64 + 2.0) && a <= 1.0 / (s.k as f64 + 1.0));
                prop_assert!(s.waypoints.windows(2).all(|w| w[1] > w[0]));
            }
        }
    }
}
