//! Drift velocity fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::holder_seminorm;
use crate::spectral::{Field, FieldSpectrum, Grid, VectorField};

/// Drift mode.
///
/// `weierstrass` in one dimension is `u(x) = a Σ_n 2^{−nδ} cos(2^n x/L + φ_n)`;
/// in two dimensions it is the shear pair `u = (W₁(x₂), W₂(x₁))`, which is
/// divergence free. `sqg` couples `u = (−R₂θ, R₁θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    None {},
    Constant {
        velocity: Vec<f64>,
    },
    Weierstrass {
        amplitude: f64,
        delta: f64,
        /// Number of octaves; by default every octave below half the
        /// Nyquist wavenumber.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<usize>,
        #[serde(default)]
        seed: u64,
        /// Optional time modulation `cos(ωt)`.
        #[serde(default)]
        time_frequency: f64,
    },
    Sqg {},
}

impl Default for DriftSpec {
    fn default() -> Self {
        DriftSpec::None {}
    }
}

impl DriftSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            DriftSpec::Weierstrass {
                amplitude,
                delta,
                terms,
                time_frequency,
                ..
            } => DriftSpec::Weierstrass {
                amplitude,
                delta,
                terms,
                seed,
                time_frequency,
            },
            other => other,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            DriftSpec::Weierstrass { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Declared Hölder exponent, if any.
    pub fn declared_delta(&self) -> Option<f64> {
        match self {
            DriftSpec::Weierstrass { delta, .. } => Some(*delta),
            _ => None,
        }
    }

    pub fn is_divergence_free(&self, dim: usize) -> bool {
        match self {
            DriftSpec::None {} | DriftSpec::Constant { .. } | DriftSpec::Sqg {} => true,
            DriftSpec::Weierstrass { .. } => dim == 2,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            DriftSpec::None {} => Ok(()),
            DriftSpec::Constant { velocity } => {
                if velocity.len() != dim || velocity.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!(
                        "[drift] constant velocity needs {dim} finite components"
                    )));
                }
                Ok(())
            }
            DriftSpec::Weierstrass {
                amplitude, delta, ..
            } => {
                if !amplitude.is_finite() || !(*delta > 0.0 && *delta <= 1.0) {
                    return Err(Error::Config(format!(
                        "[drift] weierstrass needs finite amplitude and delta in (0, 1], got {amplitude}, {delta}"
                    )));
                }
                Ok(())
            }
            DriftSpec::Sqg {} => {
                if dim != 2 {
                    return Err(Error::Config("[drift] sqg mode requires dim = 2".into()));
                }
                Ok(())
            }
        }
    }
}

/// Drift ready for time stepping.
#[derive(Debug, Clone)]
pub enum Drift {
    None,
    /// Spectra of a fixed spatial profile with a time modulation `cos(ωt)`.
    Prescribed {
        spectra: Vec<FieldSpectrum>,
        omega: f64,
    },
    Sqg,
}

fn weierstrass_series(
    grid: Grid,
    amplitude: f64,
    delta: f64,
    terms: usize,
    rng: &mut ChaCha8Rng,
) -> impl Fn(f64) -> f64 {
    let l = grid.period_scale();
    let octaves: Vec<(f64, f64, f64)> = (0..terms)
        .map(|n| {
            let phase = 2.0 * PI * rng.gen::<f64>();
            (
                2f64.powi(n as i32) / l,
                amplitude * 2f64.powf(-(n as f64) * delta),
                phase,
            )
        })
        .collect();
    move |x: f64| octaves.iter().map(|(k, a, p)| a * (k * x + p).cos()).sum()
}

/// Default octave count: all `2^n ≤ N/4`.
pub fn default_terms(grid: Grid) -> usize {
    let mut t = 0;
    while (1usize << t) <= grid.n() / 4 {
        t += 1;
    }
    t
}

impl Drift {
    pub fn new(spec: &DriftSpec, grid: Grid) -> Result<Self> {
        spec.validate(grid.dim())?;
        Ok(match spec {
            DriftSpec::None {} => Drift::None,
            DriftSpec::Constant { velocity } => Drift::Prescribed {
                spectra: velocity
                    .iter()
                    .map(|&c| Field::constant(grid, c).to_spectrum())
                    .collect(),
                omega: 0.0,
            },
            DriftSpec::Weierstrass {
                amplitude,
                delta,
                terms,
                seed,
                time_frequency,
            } => {
                let terms = terms.unwrap_or_else(|| default_terms(grid));
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let components = if grid.dim() == 1 {
                    let w = weierstrass_series(grid, *amplitude, *delta, terms, &mut rng);
                    vec![Field::from_fn(grid, |x| w(x[0]))]
                } else {
                    let w1 = weierstrass_series(grid, *amplitude, *delta, terms, &mut rng);
                    let w2 = weierstrass_series(grid, *amplitude, *delta, terms, &mut rng);
                    vec![
                        Field::from_fn(grid, |x| w1(x[1])),
                        Field::from_fn(grid, |x| w2(x[0])),
                    ]
                };
                Drift::Prescribed {
                    spectra: components.iter().map(Field::to_spectrum).collect(),
                    omega: *time_frequency,
                }
            }
            DriftSpec::Sqg {} => Drift::Sqg,
        })
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, Drift::None)
    }

    /// Velocity spectra at time `t` for the state `theta`.
    pub fn velocity(&self, theta: &FieldSpectrum, t: f64) -> Option<Vec<FieldSpectrum>> {
        match self {
            Drift::None => None,
            Drift::Prescribed { spectra, omega } => {
                if *omega == 0.0 {
                    Some(spectra.clone())
                } else {
                    let c = (omega * t).cos();
                    Some(spectra.iter().map(|s| s.scaled(c)).collect())
                }
            }
            Drift::Sqg => Some(sqg_velocity(theta).to_vec()),
        }
    }

    /// Physical velocity field at time `t`.
    pub fn field(&self, theta: &FieldSpectrum, t: f64) -> Option<VectorField> {
        self.velocity(theta, t).map(|v| {
            VectorField::new(v.iter().map(FieldSpectrum::to_field).collect())
                .expect("components share a grid")
        })
    }
}

/// `u = (−R₂θ, R₁θ)` with `R̂_j = −i k_j/|k|`; modes on a Nyquist line are
/// dropped so the velocity stays real.
pub fn sqg_velocity(theta: &FieldSpectrum) -> [FieldSpectrum; 2] {
    let g = *theta.grid();
    let mut u1 = FieldSpectrum::zeros(g);
    let mut u2 = FieldSpectrum::zeros(g);
    let c = theta.coeffs();
    for i in 0..g.len() {
        if g.is_nyquist(i) {
            continue;
        }
        let k = g.wavevector(i);
        let q = g.wavenumber(i);
        if q == 0.0 {
            continue;
        }
        let ic = Complex64::new(0.0, 1.0) * c[i];
        u1.coeffs_mut()[i] = ic * (k[1] / q);
        u2.coeffs_mut()[i] = -ic * (k[0] / q);
    }
    [u1, u2]
}

/// Discrete divergence `‖∇·u‖_∞` computed spectrally.
pub fn divergence_sup(u: &[FieldSpectrum]) -> f64 {
    let mut div = FieldSpectrum::zeros(*u[0].grid());
    for (axis, c) in u.iter().enumerate() {
        div.add_assign(&c.derivative(axis)).expect("same grid");
    }
    div.to_field().sup_norm()
}

/// Largest component Hölder seminorm of a velocity field.
pub fn drift_holder(u: &VectorField, delta: f64) -> f64 {
    u.components()
        .iter()
        .map(|c| holder_seminorm(c, delta))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqg_is_divergence_free() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let theta = Field::from_fn(g, |x| {
            (x[0] + 2.0 * x[1]).sin() + (3.0 * x[0]).cos() * x[1].sin()
        });
        let u = sqg_velocity(&theta.to_spectrum());
        assert!(divergence_sup(&u) < 1e-13);
        assert!(u[0].reality_defect() < 1e-14 && u[1].reality_defect() < 1e-14);
    }

    #[test]
    fn two_d_weierstrass_is_divergence_free_and_holder() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let spec = DriftSpec::Weierstrass {
            amplitude: 1.0,
            delta: 0.7,
            terms: None,
            seed: 3,
            time_frequency: 0.0,
        };
        let d = Drift::new(&spec, g).unwrap();
        let z = FieldSpectrum::zeros(g);
        let u = d.velocity(&z, 0.0).unwrap();
        assert!(divergence_sup(&u) < 1e-12);
        let h = drift_holder(&d.field(&z, 0.0).unwrap(), 0.7);
        assert!(h.is_finite() && h > 0.1);
    }

    #[test]
    fn weierstrass_seminorm_is_stable_under_refinement() {
        let spec = DriftSpec::Weierstrass {
            amplitude: 1.0,
            delta: 0.8,
            terms: None,
            seed: 1,
            time_frequency: 0.0,
        };
        let h = |n: usize| {
            let g = Grid::new(1, n, 1.0).unwrap();
            let d = Drift::new(&spec, g).unwrap();
            drift_holder(&d.field(&FieldSpectrum::zeros(g), 0.0).unwrap(), 0.8)
        };
        let (a, b) = (h(256), h(1024));
        assert!((b / a - 1.0).abs() < 0.3, "{a} {b}");
    }

    #[test]
    fn sqg_requires_two_dimensions() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        assert!(Drift::new(&DriftSpec::Sqg {}, g).is_err());
        let s: DriftSpec =
            toml::from_str("mode = \"weierstrass\"\namplitude = 0.5\ndelta = 0.9\n").unwrap();
        assert_eq!(s.declared_delta(), Some(0.9));
        assert!(toml::from_str::<DriftSpec>("mode = \"sqg\"\namplitude = 1.0\n").is_err());
    }
}
