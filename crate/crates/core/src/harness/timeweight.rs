//! Time-weighted convolution `I(λ, l, t) = ∫₀ᵗ e^{−(t−τ)λ} τ^{−l} dτ`.

use crate::error::{Error, Result};
use crate::quadrature::adaptive;
use crate::report::EstimateReport;

/// `2^l + 2^{l−1}/(1 − l)`.
pub fn time_weight_factor(l: f64) -> f64 {
    2f64.powf(l) + 2f64.powf(l - 1.0) / (1.0 - l)
}

/// `I(λ, l, t)`; the substitution `τ = s^{1/(1−l)}` removes the endpoint
/// singularity and the interval is split where the exponential turns on.
pub fn time_weight_integral(lambda: f64, l: f64, t: f64, tol: f64) -> Result<f64> {
    if !(lambda > 0.0 && t > 0.0 && (0.0..1.0).contains(&l)) {
        return Err(Error::Config(format!(
            "time-weight integral needs lambda > 0, t > 0, l in [0, 1); got {lambda}, {t}, {l}"
        )));
    }
    let q = 1.0 / (1.0 - l);
    let g = |s: f64| q * (-(t - s.powf(q)) * lambda).exp();
    let top = t.powf(1.0 - l);
    let cut = (t - 40.0 / lambda).max(0.0).powf(1.0 - l);
    let mut total = 0.0;
    for (a, b) in [(0.0, cut), (cut, top)] {
        if b > a {
            total += adaptive(g, a, b, 0.0, tol)?.0;
        }
    }
    Ok(total)
}

/// `I / (λ^{−1} t^{−l})`.
pub fn time_weight_ratio(lambda: f64, l: f64, t: f64, tol: f64) -> Result<f64> {
    Ok(time_weight_integral(lambda, l, t, tol)? * lambda * t.powf(l))
}

/// Fits the smallest `C` with `I ≤ C (2^l + 2^{l−1}/(1−l)) λ^{−1} t^{−l}` over
/// the grid and checks that the ratio is invariant under `(t, λ) → (t/a, aλ)`.
pub fn check_time_weight_lemma(
    lambdas: &[f64],
    ls: &[f64],
    ts: &[f64],
    quad_tol: f64,
) -> Result<EstimateReport> {
    if lambdas.is_empty() || ls.is_empty() || ts.is_empty() {
        return Err(Error::Config("time-weight grids must be nonempty".into()));
    }
    if ls.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
        return Err(Error::Config(
            "time-weight exponents must lie in (0, 1)".into(),
        ));
    }
    let scales = [0.125, 0.5, 2.0, 8.0];
    let mut c_fit = 0.0f64;
    let mut worst = (0.0, 0.0, 0.0);
    let mut scaling_defect = 0.0f64;
    let mut samples = Vec::new();
    for &l in ls {
        for &lambda in lambdas {
            for &t in ts {
                let r = time_weight_ratio(lambda, l, t, quad_tol)?;
                let c = r / time_weight_factor(l);
                if c > c_fit {
                    c_fit = c;
                    worst = (lambda, l, t);
                }
                for a in scales {
                    let ra = time_weight_ratio(a * lambda, l, t / a, quad_tol)?;
                    scaling_defect = scaling_defect.max((ra - r).abs() / r);
                }
                samples.push((l, lambda, t, c));
            }
        }
    }
    let margin = samples
        .iter()
        .map(|&(l, _, _, c)| (c_fit - c) * time_weight_factor(l))
        .fold(f64::INFINITY, f64::min);
    let mut report = EstimateReport::new("time_weight_lemma", "timeweight-33")
        .constant("c_fit", c_fit)
        .constant("worst_lambda", worst.0)
        .constant("worst_l", worst.1)
        .constant("worst_t", worst.2)
        .constant("min_margin", margin)
        .constant("scaling_defect", scaling_defect)
        .constant("points", samples.len() as f64);
    report.note("residual: relative change of the ratio under (t, lambda) -> (t/a, a lambda)");
    let residual = if margin >= 0.0 && c_fit.is_finite() {
        scaling_defect
    } else {
        f64::INFINITY
    };
    Ok(report.judge(residual, 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `e^{−1}∫₀¹ e^τ τ^{−1/2} dτ = e^{−1} Σ 1/(n!(n + 1/2))`.
    fn series_oracle() -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for n in 0..40 {
            if n > 0 {
                fact *= n as f64;
            }
            sum += 1.0 / (fact * (n as f64 + 0.5));
        }
        (-1.0f64).exp() * sum
    }

    #[test]
    fn matches_series_at_unit_parameters() {
        let v = time_weight_integral(1.0, 0.5, 1.0, 1e-12).unwrap();
        assert!((v - series_oracle()).abs() < 1e-10, "{v}");
        assert!((v - 1.076_15).abs() < 1e-5);
    }

    #[test]
    fn zero_exponent_is_closed_form() {
        for (lambda, t) in [(1.0, 1.0), (16.0, 0.25), (1024.0, 8.0), (0.5, 0.01)] {
            let v = time_weight_integral(lambda, 0.0, t, 1e-12).unwrap();
            let exact = (1.0 - (-lambda * t).exp()) / lambda;
            assert!((v / exact - 1.0).abs() < 1e-10);
        }
        assert!((time_weight_factor(0.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn sharp_exponential_is_resolved() {
        // Large λt: I ≈ t^{−l}/λ (1 + l/(λt) + ...).
        let (lambda, l, t) = (1024.0, 0.9, 8.0);
        let v = time_weight_integral(lambda, l, t, 1e-12).unwrap();
        let asym =
            t.powf(-l) / lambda * (1.0 + l / (lambda * t) + l * (l + 1.0) / (lambda * t).powi(2));
        assert!((v / asym - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unit_grid_check_passes() {
        let r = check_time_weight_lemma(&[1.0, 4.0], &[0.5], &[0.25, 1.0], 1e-12).unwrap();
        assert!(r.passed(), "{}", r.summary_line());
    }

    #[test]
    fn rejects_exponent_one() {
        assert!(time_weight_integral(1.0, 1.0, 1.0, 1e-10).is_err());
    }
}
