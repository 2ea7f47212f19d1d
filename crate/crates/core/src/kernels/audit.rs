//! Admissibility audits: integrability, two-sided comparability with
//! `|y|^{-d-α}` near the origin, and sign.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::radial::radial_breaks;
use super::{KernelForm, LevyKernelSpec, RadialProfile};
use crate::error::{Error, Result};
use crate::quadrature::{bessel_j0, composite_nodes, QuadratureConfig};

/// Measured admissibility of a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAudit {
    /// `∫ min{1, |y|²}|K(y)| dy < ∞`.
    pub integrable: bool,
    /// `c2^{-1}|y|^{-d-α+σ} ≤ K(y) ≤ c2|y|^{-d-α}` on `0 < |y| ≤ 1`.
    pub comparable: bool,
    /// `K ≥ 0` on the sample grid.
    pub nonnegative: bool,
    /// Measured `∫ min{1, |y|²}|K(y)| dy`.
    pub c1: f64,
    /// Error estimate of `c1` (difference between two refinement levels).
    pub c1_error: f64,
    /// Smallest `c2 ≥ 1` making the two-sided bound hold on the radial
    /// sample (`∞` when some sample is nonpositive).
    pub c2: f64,
    /// Effective local order of the kernel at the origin.
    pub inner_order: f64,
    /// Smallest sampled kernel value.
    pub min_kernel: f64,
    /// True when `K` was reconstructed from the multiplier.
    pub reconstructed: bool,
    /// Declared constants that the measurement contradicts.
    pub declaration_violations: Vec<String>,
}

impl KernelAudit {
    pub fn all_pass(&self) -> bool {
        self.integrable && self.comparable && self.nonnegative
    }
}

const C2_SAMPLES: usize = 256;

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn c2_fit(samples: &[(f64, f64)], d: usize, alpha: f64, sigma: f64) -> f64 {
    let d = d as f64;
    let mut c2 = 1.0f64;
    for &(r, k) in samples {
        if k <= 0.0 {
            return f64::INFINITY;
        }
        let upper = k * r.powf(d + alpha);
        let lower = 1.0 / (k * r.powf(d + alpha - sigma));
        c2 = c2.max(upper).max(lower);
    }
    c2
}

/// Audit a kernel spec.
pub fn validate_kernel(spec: &LevyKernelSpec, quad: &QuadratureConfig) -> Result<KernelAudit> {
    spec.validate()?;
    let mut audit = match spec.explicit_profile() {
        Some(profile) => audit_explicit(spec, &profile, quad)?,
        None => audit_reconstructed(spec, quad)?,
    };
    if let Some(c1) = spec.c1 {
        if audit.c1 > c1 * (1.0 + 1e-6) {
            audit
                .declaration_violations
                .push(format!("declared c1 = {c1} below measured {}", audit.c1));
        }
    }
    if let Some(c2) = spec.c2 {
        if audit.c2 > c2 * (1.0 + 1e-6) {
            audit
                .declaration_violations
                .push(format!("declared c2 = {c2} below measured {}", audit.c2));
        }
    }
    if let KernelForm::RadialKernel {
        declared_nonnegative: true,
        ..
    } = spec.form
    {
        if !audit.nonnegative {
            return Err(Error::MalformedSpec(format!(
                "profile declared nonnegative but takes the value {} on the sample grid",
                audit.min_kernel
            )));
        }
    }
    Ok(audit)
}

/// Integral of `min{1, r²}|k(r)|` against the radial measure.
fn c1_integral(
    profile: &RadialProfile,
    d: usize,
    quad: &QuadratureConfig,
    level: usize,
) -> Result<f64> {
    let measure = |r: f64| match d {
        1 => 2.0,
        _ => 2.0 * PI * r,
    };
    let breaks = {
        let mut b = radial_breaks(profile, 1.0, quad.r_max_periods.max(1.0), quad, level);
        b.push(1.0);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    };
    let n = (quad.points_per_panel << level).min(64);
    let mut v = 0.0;
    for (r, w) in composite_nodes(&breaks, n) {
        let weight = if r < 1.0 { r * r } else { 1.0 };
        v += w * weight * measure(r) * profile.value(r, d).abs();
    }
    let (ci, a) = profile.inner_power(d);
    if a >= 2.0 && ci != 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "local order {a} >= 2: min(1, |y|^2)|K| is not integrable at the origin"
        )));
    }
    // Analytic pieces below r_min and beyond the mesh.
    let rmin = quad.r_min;
    v += ci.abs() * rmin.powf(2.0 - a) / (2.0 - a) * if d == 1 { 2.0 } else { 2.0 * PI };
    let (ct, s) = profile.tail_power(d);
    let r_end = *breaks.last().expect("nonempty mesh");
    if ct != 0.0 {
        if s <= 0.0 {
            return Err(Error::DivergentIntegral(format!(
                "tail order {s} <= 0: K is not integrable at infinity"
            )));
        }
        v += ct.abs() * r_end.powf(-s) / s * if d == 1 { 2.0 } else { 2.0 * PI };
    }
    Ok(v)
}

fn effective_inner_order(profile: &RadialProfile, d: usize, quad: &QuadratureConfig) -> f64 {
    let r1 = quad.r_min;
    let r2 = 2.0 * r1;
    let (k1, k2) = (profile.value(r1, d).abs(), profile.value(r2, d).abs());
    if k1 == 0.0 || k2 == 0.0 {
        return f64::NEG_INFINITY;
    }
    -(k2 / k1).ln() / 2f64.ln() - d as f64
}

fn audit_explicit(
    spec: &LevyKernelSpec,
    profile: &RadialProfile,
    quad: &QuadratureConfig,
) -> Result<KernelAudit> {
    let d = spec.dim;
    let inner_order = effective_inner_order(profile, d, quad);
    if inner_order >= 2.0 {
        return Err(Error::DivergentIntegral(format!(
            "effective local order {inner_order:.4} >= 2 at the origin"
        )));
    }
    let c1_coarse = c1_integral(profile, d, quad, 0)?;
    let c1 = c1_integral(profile, d, quad, 1)?;
    let c1_error = (c1 - c1_coarse).abs();
    if c1_error > 1e-6 * c1.max(f64::MIN_POSITIVE) {
        return Err(Error::NonConvergence {
            context: "integrability constant".into(),
            previous: c1_coarse,
            last: c1,
        });
    }

    // Comparability: fit on (2^-20, 1], then confirm the fit does not move
    // when the sample reaches down to 2^-40 (a mismatched exponent would).
    let near: Vec<(f64, f64)> = log_spaced(2f64.powi(-20), 1.0, C2_SAMPLES)
        .into_iter()
        .map(|r| (r, profile.value(r, d)))
        .collect();
    let deep: Vec<(f64, f64)> = log_spaced(quad.r_min, 1.0, C2_SAMPLES)
        .into_iter()
        .map(|r| (r, profile.value(r, d)))
        .collect();
    let c2_near = c2_fit(&near, d, spec.alpha, spec.sigma);
    let c2_deep = c2_fit(&deep, d, spec.alpha, spec.sigma);
    let c2 = c2_near.max(c2_deep);
    let comparable = c2.is_finite() && c2_deep <= c2_near * 1.01;

    // Sign on a log grid out to the truncation radius, plus both sides of
    // every breakpoint and the declared tail.
    let r_max = quad.r_max_periods;
    let mut sample = log_spaced(quad.r_min, r_max.max(1.0) * 4.0, 4 * C2_SAMPLES);
    for b in profile.breakpoints() {
        sample.push(b * (1.0 - 1e-9));
        sample.push(b * (1.0 + 1e-9));
    }
    let mut min_kernel = sample
        .iter()
        .map(|&r| profile.value(r, d))
        .fold(f64::INFINITY, f64::min);
    let (ct, _) = profile.tail_power(d);
    if ct < 0.0 {
        min_kernel = min_kernel.min(ct);
    }
    Ok(KernelAudit {
        integrable: c1.is_finite(),
        comparable,
        nonnegative: min_kernel >= 0.0,
        c1,
        c1_error,
        c2,
        inner_order,
        min_kernel,
        reconstructed: false,
        declaration_violations: Vec::new(),
    })
}

/// Parameters of the windowed inverse transform used to recover `K` from a
/// multiplier.
const RECON_Y_MIN: f64 = 1.0 / 16.0;
const RECON_WINDOW: f64 = 40.0 / RECON_Y_MIN;

/// `K(y)` at radii `ys` recovered from the multiplier through a
/// Gaussian-windowed inverse Fourier transform:
/// `K(y) = −(1/π) ∫_0^∞ A(ξ) w(ξ) cos(yξ) dξ` (d = 1) or
/// `K(y) = −(1/2π) ∫_0^∞ A(ρ) w(ρ) J0(ρ y) ρ dρ` (d = 2), with
/// `w(ξ) = exp(−(ξ/Ξ)²)`. Accurate for `y ≳ 40/Ξ`.
pub fn reconstruct_kernel(spec: &LevyKernelSpec, ys: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.closed_form(1.0).is_none() {
        return Err(Error::UnsupportedForm {
            form: spec.form.name(),
            reason: "kernel reconstruction needs a closed-form multiplier".into(),
        });
    }
    let xi_cap = RECON_WINDOW;
    let upper = 6.0 * xi_cap;
    let sym =
        |x: f64| spec.closed_form(x).expect("closed form checked") * (-(x / xi_cap).powi(2)).exp();
    let d = spec.dim;
    Ok(ys
        .par_iter()
        .map(|&y| {
            let period_panel = (0.5 * PI / y).min(xi_cap / 16.0);
            let x0 = period_panel.min(1.0);
            let mut breaks = vec![];
            let mut x = x0;
            while x > 1e-14 {
                breaks.push(x);
                x *= 0.5;
            }
            breaks.push(0.0);
            breaks.reverse();
            let panels = ((upper - x0) / period_panel).ceil() as usize;
            let h = (upper - x0) / panels as f64;
            for i in 1..=panels {
                breaks.push(x0 + i as f64 * h);
            }
            let nodes = composite_nodes(&breaks, 12);
            match d {
                1 => {
                    -nodes
                        .iter()
                        .map(|&(x, w)| w * sym(x) * (y * x).cos())
                        .sum::<f64>()
                        / PI
                }
                _ => {
                    -nodes
                        .iter()
                        .map(|&(x, w)| w * sym(x) * bessel_j0(y * x) * x)
                        .sum::<f64>()
                        / (2.0 * PI)
                }
            }
        })
        .collect())
}

fn audit_reconstructed(spec: &LevyKernelSpec, quad: &QuadratureConfig) -> Result<KernelAudit> {
    let d = spec.dim;
    let r_max = quad.r_max_periods.max(1.0);
    let ys = log_spaced(RECON_Y_MIN, r_max, 97);
    let ks = reconstruct_kernel(spec, &ys)?;
    let scale = ks.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let min_kernel = ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let nonnegative = min_kernel >= -1e-8 * scale;

    let near: Vec<(f64, f64)> = ys
        .iter()
        .cloned()
        .zip(ks.iter().cloned())
        .filter(|p| p.0 <= 1.0)
        .collect();
    let c2 = c2_fit(&near, d, spec.alpha, spec.sigma);

    // Trapezoid rule in log r on the samples, with power-law extrapolation
    // beyond both ends.
    let measure = |r: f64| if d == 1 { 2.0 } else { 2.0 * PI * r };
    let integrand = |r: f64, k: f64| r * (if r < 1.0 { r * r } else { 1.0 }) * measure(r) * k.abs();
    let trap = |stride: usize| -> f64 {
        let idx: Vec<usize> = (0..ys.len()).step_by(stride).collect();
        idx.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                0.5 * (ys[b] / ys[a]).ln() * (integrand(ys[a], ks[a]) + integrand(ys[b], ks[b]))
            })
            .sum()
    };
    let body = trap(1);
    let coarse = trap(2);
    let local_order = |i: usize, j: usize| -> f64 {
        -(ks[j].abs() / ks[i].abs()).ln() / (ys[j] / ys[i]).ln() - d as f64
    };
    let inner_order = local_order(0, 1);
    let outer_order = local_order(ys.len() - 2, ys.len() - 1);
    let surface = if d == 1 { 2.0 } else { 2.0 * PI };
    let mut extra = 0.0;
    let integrable = inner_order < 2.0 && outer_order > 0.0;
    if integrable {
        let (y0, k0) = (ys[0], ks[0].abs());
        extra += surface * k0 * y0.powf(d as f64 + inner_order) * y0.powf(2.0 - inner_order)
            / (2.0 - inner_order);
        let (y1, k1) = (ys[ys.len() - 1], ks[ks.len() - 1].abs());
        extra +=
            surface * k1 * y1.powf(d as f64 + outer_order) * y1.powf(-outer_order) / outer_order;
    }
    let c1 = if integrable {
        body + extra
    } else {
        f64::INFINITY
    };
    Ok(KernelAudit {
        integrable,
        comparable: c2.is_finite(),
        nonnegative,
        c1,
        c1_error: (body - coarse).abs(),
        c2,
        inner_order,
        min_kernel,
        reconstructed: true,
        declaration_violations: Vec::new(),
    })
}
