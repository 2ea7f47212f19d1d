//! Lévy-type diffusion operators: kernel descriptions, admissibility audits,
//! symbols and operator application.

mod audit;
mod config;
mod profile;
mod radial;

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::spectral::{Field, FieldSpectrum, Grid};

pub use audit::{reconstruct_kernel, validate_kernel, KernelAudit};
pub use config::OperatorSection;
pub use profile::RadialProfile;
pub use radial::{apply_operator_quadrature, radial_symbol};

/// Normalization making `c_{d,α} p.v.∫(1 − cos y·ξ)|y|^{-d-α} dy = |ξ|^α`.
pub fn fractional_constant(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (d + alpha))
        / (PI.powf(0.5 * d) * gamma(1.0 - 0.5 * alpha))
}

/// How the operator is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelForm {
    /// Multiplier `|ξ|^α`.
    FractionalLaplacian,
    /// Multiplier `|ξ|^α / log(λ + |ξ|)^μ`.
    LogDamped { mu: f64, lambda: f64 },
    /// Explicit radial kernel. `declared_nonnegative` asserts `K ≥ 0`; the
    /// audit rejects the declaration when sampling finds a negative value.
    RadialKernel {
        profile: RadialProfile,
        declared_nonnegative: bool,
    },
}

impl KernelForm {
    pub fn name(&self) -> &'static str {
        match self {
            KernelForm::FractionalLaplacian => "fractional_laplacian",
            KernelForm::LogDamped { .. } => "log_damped",
            KernelForm::RadialKernel { .. } => "radial_kernel",
        }
    }
}

/// Parametric description of a diffusion operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyKernelSpec {
    pub dim: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub form: KernelForm,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
}

impl LevyKernelSpec {
    pub fn fractional_laplacian(dim: usize, alpha: f64) -> Self {
        Self {
            dim,
            alpha,
            sigma: 0.0,
            form: KernelForm::FractionalLaplacian,
            c1: None,
            c2: None,
        }
    }

    pub fn log_damped(dim: usize, alpha: f64, sigma: f64, mu: f64, lambda: f64) -> Self {
        Self {
            dim,
            alpha,
            sigma,
            form: KernelForm::LogDamped { mu, lambda },
            c1: None,
            c2: None,
        }
    }

    pub fn radial(
        dim: usize,
        alpha: f64,
        sigma: f64,
        profile: RadialProfile,
        declared_nonnegative: bool,
    ) -> Self {
        Self {
            dim,
            alpha,
            sigma,
            form: KernelForm::RadialKernel {
                profile,
                declared_nonnegative,
            },
            c1: None,
            c2: None,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::MalformedSpec(format!(
                "dimension must be 1 or 2, got {}",
                self.dim
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::MalformedSpec(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma < self.alpha) {
            return Err(Error::MalformedSpec(format!(
                "sigma must lie in [0, alpha), got {}",
                self.sigma
            )));
        }
        for (name, c) in [("c1", self.c1), ("c2", self.c2)] {
            if let Some(c) = c {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::MalformedSpec(format!(
                        "{name} must be positive, got {c}"
                    )));
                }
            }
        }
        match &self.form {
            KernelForm::FractionalLaplacian => {}
            KernelForm::LogDamped { mu, lambda } => {
                if !(mu.is_finite() && *mu >= 0.0) {
                    return Err(Error::MalformedSpec(format!("mu must be >= 0, got {mu}")));
                }
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::MalformedSpec(format!(
                        "lambda must be > 0, got {lambda}"
                    )));
                }
                if *mu > 0.0 && *lambda <= 1.0 {
                    return Err(Error::MalformedSpec(format!(
                        "lambda must exceed 1 when mu > 0 (log(lambda) vanishes or changes sign), got {lambda}"
                    )));
                }
            }
            KernelForm::RadialKernel { profile, .. } => profile.validate()?,
        }
        Ok(())
    }

    /// Radial profile of `K`, when the operator is given by a kernel.
    pub fn explicit_profile(&self) -> Option<RadialProfile> {
        match &self.form {
            KernelForm::FractionalLaplacian => Some(RadialProfile::Power {
                coef: fractional_constant(self.dim, self.alpha),
                order: self.alpha,
            }),
            KernelForm::LogDamped { .. } => None,
            KernelForm::RadialKernel { profile, .. } => Some(profile.clone()),
        }
    }

    /// Closed-form symbol at `|ξ| = q`, when one exists.
    pub fn closed_form(&self, q: f64) -> Option<f64> {
        match &self.form {
            KernelForm::FractionalLaplacian => Some(q.powf(self.alpha)),
            KernelForm::LogDamped { mu, lambda } => {
                if q == 0.0 {
                    Some(0.0)
                } else {
                    Some(q.powf(self.alpha) / (lambda + q).ln().powf(*mu))
                }
            }
            KernelForm::RadialKernel { .. } => None,
        }
    }
}

/// Symbol values `A(ξ)` on the lattice of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    grid: Grid,
    values: Vec<f64>,
}

impl SymbolGrid {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LatticeMismatch(format!(
                "expected {} symbol values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Symbol of a radial function of `|ξ|`, evaluated once per distinct
    /// wavenumber.
    pub fn from_radial(grid: Grid, f: impl Fn(f64) -> Result<f64> + Sync) -> Result<Self> {
        let mut distinct: Vec<f64> = (0..grid.len()).map(|i| grid.wavenumber(i)).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let computed: Vec<(u64, f64)> = distinct
            .par_iter()
            .map(|&q| f(q).map(|v| (q.to_bits(), v)))
            .collect::<Result<_>>()?;
        let table: HashMap<u64, f64> = computed.into_iter().collect();
        let values = (0..grid.len())
            .map(|i| table[&grid.wavenumber(i).to_bits()])
            .collect();
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Most negative symbol value (zero for nonnegative symbols).
    pub fn negative_part(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(-v))
    }

    /// `(|ξ|, A(ξ))` pairs over the lattice, sorted by `|ξ|` with duplicates
    /// removed.
    pub fn radial_samples(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = (0..self.grid.len())
            .map(|i| (self.grid.wavenumber(i), self.values[i]))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        pts
    }
}

/// Exact multiplier evaluation on the lattice.
pub fn symbol_closed_form(spec: &LevyKernelSpec, grid: Grid) -> Result<SymbolGrid> {
    spec.validate()?;
    if spec.closed_form(1.0).is_none() {
        return Err(Error::UnsupportedForm {
            form: spec.form.name(),
            reason: "no closed-form multiplier; use the kernel integral".into(),
        });
    }
    let values = (0..grid.len())
        .map(|i| {
            spec.closed_form(grid.wavenumber(i))
                .expect("closed form checked")
        })
        .collect();
    SymbolGrid::new(grid, values)
}

/// Symbol `A(ξ) = ∫(1 − cos y·ξ)K(y) dy` by graded radial quadrature.
pub fn symbol_from_kernel(
    spec: &LevyKernelSpec,
    grid: Grid,
    quad: &QuadratureConfig,
) -> Result<SymbolGrid> {
    spec.validate()?;
    let Some(profile) = spec.explicit_profile() else {
        return Err(Error::UnsupportedForm {
            form: spec.form.name(),
            reason: "no explicit kernel; use the closed-form multiplier".into(),
        });
    };
    if grid.dim() != spec.dim {
        return Err(Error::LatticeMismatch(format!(
            "{}-d operator on a {}-d lattice",
            spec.dim,
            grid.dim()
        )));
    }
    let r_max = quad.r_max_periods * grid.period_scale();
    SymbolGrid::from_radial(grid, |q| radial_symbol(&profile, spec.dim, q, r_max, quad))
}

/// Closed form when available, kernel quadrature otherwise.
pub fn symbol_for(
    spec: &LevyKernelSpec,
    grid: Grid,
    quad: &QuadratureConfig,
) -> Result<SymbolGrid> {
    if spec.closed_form(1.0).is_some() {
        symbol_closed_form(spec, grid)
    } else {
        symbol_from_kernel(spec, grid, quad)
    }
}

/// Smallest `C ≥ 1` with `A(ξ) ≥ C^{-1}|ξ|^{α−σ} − C` on a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundFit {
    pub constant: f64,
    pub exponent: f64,
    /// `min_ξ A(ξ) − (C^{-1}|ξ|^{α−σ} − C)`; zero when the fit is tight.
    pub worst_margin: f64,
    /// Wavenumber of the binding lattice point.
    pub worst_wavenumber: f64,
    pub max_wavenumber: f64,
    pub points: usize,
}

pub fn symbol_lower_bound_fit(sym: &SymbolGrid, alpha: f64, sigma: f64) -> Result<LowerBoundFit> {
    lower_bound_fit_samples(&sym.radial_samples(), alpha - sigma)
}

/// Lower-bound fit on explicit `(|ξ|, A)` samples.
pub fn lower_bound_fit_samples(samples: &[(f64, f64)], beta: f64) -> Result<LowerBoundFit> {
    let max_q = samples.iter().fold(0.0f64, |m, s| m.max(s.0));
    if max_q < 4.0 {
        return Err(Error::LatticeTooSmall(format!(
            "lower-bound fit needs max |xi| >= 4, got {max_q}"
        )));
    }
    // C² + A C − q^β ≥ 0  ⇔  C ≥ (−A + √(A² + 4q^β)) / 2.
    let mut c = 1.0f64;
    for &(q, a) in samples {
        if a == f64::NEG_INFINITY {
            return Ok(LowerBoundFit {
                constant: f64::INFINITY,
                exponent: beta,
                worst_margin: f64::NEG_INFINITY,
                worst_wavenumber: q,
                max_wavenumber: max_q,
                points: samples.len(),
            });
        }
        let qb = q.powf(beta);
        let need = if a >= 0.0 {
            2.0 * qb / (a + (a * a + 4.0 * qb).sqrt())
        } else {
            0.5 * (-a + (a * a + 4.0 * qb).sqrt())
        };
        c = c.max(need);
    }
    let mut margin = f64::INFINITY;
    let mut worst_q = 0.0;
    for &(q, a) in samples {
        let m = a - (q.powf(beta) / c - c);
        if m < margin {
            margin = m;
            worst_q = q;
        }
    }
    Ok(LowerBoundFit {
        constant: c,
        exponent: beta,
        worst_margin: margin,
        worst_wavenumber: worst_q,
        max_wavenumber: max_q,
        points: samples.len(),
    })
}

/// `𝓛θ` in Fourier space: coefficientwise product with the symbol.
pub fn apply_operator_spectral(field: &FieldSpectrum, sym: &SymbolGrid) -> Result<FieldSpectrum> {
    field.grid().ensure_same(sym.grid())?;
    Ok(field.apply_multiplier(|i| sym.values[i]))
}

/// Physical-space convenience wrapper around [`apply_operator_spectral`].
pub fn apply_operator_spectral_field(field: &Field, sym: &SymbolGrid) -> Result<Field> {
    Ok(apply_operator_spectral(&field.to_spectrum(), sym)?.to_field())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_constant_known_values() {
        assert!((fractional_constant(1, 1.0) - 1.0 / PI).abs() < 1e-15);
        assert!((fractional_constant(1, 0.5) - 0.5 / (2.0 * PI).sqrt()).abs() < 1e-15);
        // d = 2, α = 1: c = Γ(3/2) / (π Γ(1/2)) = 1/(2π).
        assert!((fractional_constant(2, 1.0) - 0.5 / PI).abs() < 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let s = symbol_closed_form(&LevyKernelSpec::fractional_laplacian(2, 1.0), g).unwrap();
        let idx = g.flat([3, 4]);
        assert!((s.value(idx) - 5.0).abs() < 1e-14);
        let ld = LevyKernelSpec::log_damped(1, 0.5, 0.0, 2.0, 2.0);
        let v = ld.closed_form(6.0).unwrap();
        assert!((v - 6f64.sqrt() / 8f64.ln().powi(2)).abs() < 1e-15);
        assert!((v - 0.5666).abs() < 5e-4);
        assert_eq!(
            LevyKernelSpec::log_damped(1, 1.0, 0.0, 1.0, std::f64::consts::E).closed_form(0.0),
            Some(0.0)
        );
    }

    #[test]
    fn malformed_specs_are_rejected() {
        let mut s = LevyKernelSpec::fractional_laplacian(1, 0.5);
        s.alpha = 1.2;
        assert!(matches!(s.validate(), Err(Error::MalformedSpec(_))));
        let s = LevyKernelSpec::fractional_laplacian(1, 0.5).with_sigma(0.5);
        assert!(matches!(s.validate(), Err(Error::MalformedSpec(_))));
        let s = LevyKernelSpec::log_damped(1, 0.5, 0.1, 1.0, 0.5);
        assert!(matches!(s.validate(), Err(Error::MalformedSpec(_))));
    }

    #[test]
    fn closed_form_rejects_radial_kernel() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let s = LevyKernelSpec::radial(1, 0.5, 0.0, RadialProfile::truncated(1.0, 0.5, 1.0), true);
        assert!(matches!(
            symbol_closed_form(&s, g),
            Err(Error::UnsupportedForm { .. })
        ));
        let ld = LevyKernelSpec::log_damped(1, 0.5, 0.1, 1.0, 3.0);
        let q = QuadratureConfig::default();
        assert!(matches!(
            symbol_from_kernel(&ld, g, &q),
            Err(Error::UnsupportedForm { .. })
        ));
    }

    #[test]
    fn fractional_lower_bound_is_exact() {
        let g = Grid::new(1, 128, 1.0).unwrap();
        let s = symbol_closed_form(&LevyKernelSpec::fractional_laplacian(1, 0.5), g).unwrap();
        let fit = symbol_lower_bound_fit(&s, 0.5, 0.0).unwrap();
        assert_eq!(fit.constant, 1.0);
        assert!(fit.worst_margin >= 0.0 && fit.worst_margin <= 1.0 + 1e-12);
    }

    #[test]
    fn lower_bound_constant_satisfies_inequality() {
        let g = Grid::new(1, 256, 1.0).unwrap();
        let spec = LevyKernelSpec::log_damped(1, 1.0, 0.25, 1.0, std::f64::consts::E);
        let s = symbol_closed_form(&spec, g).unwrap();
        let fit = symbol_lower_bound_fit(&s, 1.0, 0.25).unwrap();
        assert!(fit.constant.is_finite() && fit.constant > 1.0);
        assert!(fit.worst_margin > -1e-12);
        assert!(fit.worst_margin < 1e-9);
        // A slightly smaller constant must violate the bound somewhere.
        let c = fit.constant * (1.0 - 1e-6);
        let violated = s
            .radial_samples()
            .iter()
            .any(|&(q, a)| a < q.powf(0.75) / c - c);
        assert!(violated);
    }

    #[test]
    fn spectral_application_eigenfunction() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let spec = LevyKernelSpec::fractional_laplacian(1, 0.5);
        let s = symbol_closed_form(&spec, g).unwrap();
        let theta = Field::from_fn(g, |x| (5.0 * x[0]).cos());
        let out = apply_operator_spectral_field(&theta, &s).unwrap();
        for (o, t) in out.values().iter().zip(theta.values()) {
            assert!((o - 5f64.sqrt() * t).abs() < 1e-13);
        }
        let c = apply_operator_spectral_field(&Field::constant(g, 3.0), &s).unwrap();
        assert!(c.sup_norm() < 1e-15);
    }
}
