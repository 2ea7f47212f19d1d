//! Initial data, forcing and mollification.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::chi;
use crate::spectral::{Field, FieldSpectrum, Grid};

/// Initial condition generators. Random families are keyed per lattice
/// vector, so a coarse grid sees exactly the low modes of a fine one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Zero {},
    Constant {
        value: f64,
    },
    Cosine {
        amplitude: f64,
        wavevector: [i64; 2],
    },
    /// Random phases with `|θ̂₀(k)| = amplitude · |k|^{−d}`.
    Rough {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Uniform random coefficients on `0 < |k| ≤ kmax`.
    BandLimited {
        #[serde(default = "one")]
        amplitude: f64,
        kmax: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Binary snapshot written by this crate.
    Snapshot {
        path: String,
    },
}

fn one() -> f64 {
    1.0
}

impl InitialSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            InitialSpec::Rough { amplitude, .. } => InitialSpec::Rough { amplitude, seed },
            InitialSpec::BandLimited {
                amplitude, kmax, ..
            } => InitialSpec::BandLimited {
                amplitude,
                kmax,
                seed,
            },
            other => other,
        }
    }

    /// Seed of a random family.
    pub fn seed(&self) -> Option<u64> {
        match self {
            InitialSpec::Rough { seed, .. } | InitialSpec::BandLimited { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    pub fn build(&self, grid: Grid, base_dir: &std::path::Path) -> Result<Field> {
        Ok(match self {
            InitialSpec::Zero {} => Field::zeros(grid),
            InitialSpec::Constant { value } => Field::constant(grid, *value),
            InitialSpec::Cosine {
                amplitude,
                wavevector,
            } => cosine_field(grid, *amplitude, *wavevector),
            InitialSpec::Rough { amplitude, seed } => {
                let d = grid.dim() as f64;
                random_phase_field(grid, *seed, |q| {
                    if q > 0.0 {
                        amplitude * q.powf(-d)
                    } else {
                        0.0
                    }
                })
            }
            InitialSpec::BandLimited {
                amplitude,
                kmax,
                seed,
            } => random_coefficient_field(grid, *seed, |q| {
                if q > 0.0 && q <= *kmax {
                    *amplitude
                } else {
                    0.0
                }
            }),
            InitialSpec::Snapshot { path } => {
                let (field, _) = super::io::read_snapshot(&base_dir.join(path))?;
                if field.grid().dim() != grid.dim() {
                    return Err(Error::LatticeMismatch(format!(
                        "snapshot '{path}' is {}-d, grid is {}-d",
                        field.grid().dim(),
                        grid.dim()
                    )));
                }
                field.to_spectrum().resample(grid)?.to_field()
            }
        })
    }
}

/// Time-independent forcing `f(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    None {},
    Constant {
        value: f64,
    },
    Cosine {
        amplitude: f64,
        wavevector: [i64; 2],
    },
}

impl Default for ForcingSpec {
    fn default() -> Self {
        ForcingSpec::None {}
    }
}

impl ForcingSpec {
    pub fn build(&self, grid: Grid) -> Field {
        match self {
            ForcingSpec::None {} => Field::zeros(grid),
            ForcingSpec::Constant { value } => Field::constant(grid, *value),
            ForcingSpec::Cosine {
                amplitude,
                wavevector,
            } => cosine_field(grid, *amplitude, *wavevector),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingSpec::None {})
    }
}

fn cosine_field(grid: Grid, amplitude: f64, m: [i64; 2]) -> Field {
    let l = grid.period_scale();
    let k = [m[0] as f64 / l, m[1] as f64 / l];
    Field::from_fn(grid, |x| amplitude * (k[0] * x[0] + k[1] * x[1]).cos())
}

/// Stream key of the canonical representative of `±m`.
fn canonical_key(m: [i64; 2]) -> (u64, bool) {
    let flip = m[0] < 0 || (m[0] == 0 && m[1] < 0);
    let c = if flip { [-m[0], -m[1]] } else { m };
    let key = (((c[0] + (1 << 20)) as u64) << 21) | ((c[1] + (1 << 20)) as u64);
    (key, flip)
}

fn keyed_rng(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

fn hermitian_field(grid: Grid, mut coefficient: impl FnMut(usize) -> Complex64) -> Field {
    let mut s = FieldSpectrum::zeros(grid);
    let c = s.coeffs_mut();
    for (i, slot) in c.iter_mut().enumerate() {
        if !grid.is_nyquist(i) {
            *slot = coefficient(i);
        }
    }
    s.to_field()
}

/// `θ̂(k) = a(|k|) e^{iφ_k}` with seeded phases, `φ_{−k} = −φ_k`.
pub fn random_phase_field(grid: Grid, seed: u64, amplitude: impl Fn(f64) -> f64) -> Field {
    hermitian_field(grid, |i| {
        let a = amplitude(grid.wavenumber(i));
        if a == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let m = grid.lattice_vector(i);
        let (key, flip) = canonical_key(m);
        if key == canonical_key([0, 0]).0 {
            return Complex64::new(a, 0.0);
        }
        let phase = 2.0 * PI * keyed_rng(seed, key).gen::<f64>();
        let phase = if flip { -phase } else { phase };
        Complex64::from_polar(a, phase)
    })
}

/// `θ̂(k) = a(|k|)(ξ_k + iη_k)` with seeded uniform `ξ, η ∈ [−1, 1]`.
pub fn random_coefficient_field(grid: Grid, seed: u64, amplitude: impl Fn(f64) -> f64) -> Field {
    hermitian_field(grid, |i| {
        let a = amplitude(grid.wavenumber(i));
        if a == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (key, flip) = canonical_key(grid.lattice_vector(i));
        let mut rng = keyed_rng(seed, key);
        let re = rng.gen_range(-1.0..1.0);
        let im = if key == canonical_key([0, 0]).0 {
            0.0
        } else {
            rng.gen_range(-1.0..1.0)
        };
        let c = Complex64::new(a * re, a * im);
        if flip {
            c.conj()
        } else {
            c
        }
    })
}

/// Mollified data and the sup-norm overshoot
/// `η = max(0, ‖mollified‖_∞ / ‖raw‖_∞ − 1)`.
#[derive(Debug, Clone)]
pub struct Mollified {
    pub field: Field,
    pub overshoot: f64,
}

/// Spectral mollification by `χ(ε_m |ξ|)`: modes with `|ξ| ≥ 1/ε_m` are
/// removed, modes with `|ξ| ≤ 3/(4ε_m)` are untouched.
pub fn mollify_data(raw: &Field, epsilon_m: f64) -> Result<Mollified> {
    if !(epsilon_m > 0.0) {
        return Err(Error::Config(format!(
            "mollification scale must be positive, got {epsilon_m}"
        )));
    }
    let g = *raw.grid();
    let field = raw
        .to_spectrum()
        .apply_multiplier(|i| chi(epsilon_m * g.wavenumber(i)))
        .to_field();
    let raw_sup = raw.sup_norm();
    let overshoot = if raw_sup > 0.0 {
        (field.sup_norm() / raw_sup - 1.0).max(0.0)
    } else {
        0.0
    };
    Ok(Mollified { field, overshoot })
}
