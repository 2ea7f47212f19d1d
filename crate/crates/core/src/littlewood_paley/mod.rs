//! Dyadic partition of unity, block projections, Besov and Hölder norms.
//!
//! The low-frequency cut-off `χ` equals 1 on `|ξ| ≤ 3/4` and vanishes for
//! `|ξ| ≥ 1`, with an `exp(−1/t)` smoothstep in between; the annulus bump
//! is `φ(ξ) = χ(ξ/2) − χ(ξ)`, supported in `3/4 ≤ |ξ| ≤ 2` with `φ(1) = 1`.
//! `Δ_{−1} = χ(D)`, `Δ_j = φ(2^{−j}D)` for `j ≥ 0`, `S_j = Σ_{l ≤ j−1} Δ_l`.

mod bony;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{lp_norm, Field, FieldSpectrum, Grid};

pub use bony::{bony_commutator_decomposition, commutator_bound_check, BonyTerms};

/// `e^{−1/t} / (e^{−1/t} + e^{−1/(1−t)})` on `[0, 1]`, clamped outside.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Radial low-pass profile `χ(r)`.
pub fn chi(r: f64) -> f64 {
    smoothstep(4.0 * (1.0 - r))
}

/// Radial annulus profile `φ(r) = χ(r/2) − χ(r)`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Multiplier of block `j` at wavenumber `q`.
pub fn block_multiplier(j: i32, q: f64) -> f64 {
    if j < 0 {
        chi(q)
    } else {
        phi(q / 2f64.powi(j))
    }
}

/// Partition of unity sampled on a lattice.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: Grid,
    j_max: i32,
    j_top: i32,
    multipliers: Vec<Vec<f64>>,
}

impl DyadicPartition {
    /// Build the partition; needs a Nyquist wavenumber of at least 8.
    pub fn new(grid: Grid) -> Result<Self> {
        let nyq = grid.nyquist();
        if nyq < 8.0 {
            return Err(Error::LatticeTooSmall(format!(
                "Nyquist wavenumber {nyq} < 8 leaves no usable dyadic block"
            )));
        }
        let j_max = (nyq * 3.0 / 8.0).log2().floor() as i32;
        // Blocks past j_max overlap the grid cut-off; they are kept (and
        // flagged) so the full family still sums to the identity.
        let q_top = grid.max_wavenumber();
        let mut j_top = j_max;
        while 1.5 * 2f64.powi(j_top) < q_top {
            j_top += 1;
        }
        let multipliers = (-1..=j_top)
            .map(|j| {
                (0..grid.len())
                    .map(|i| block_multiplier(j, grid.wavenumber(i)))
                    .collect()
            })
            .collect();
        Ok(Self {
            grid,
            j_max,
            j_top,
            multipliers,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Largest block whose support stays below the grid cut-off.
    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Largest block touching the lattice.
    pub fn j_top(&self) -> i32 {
        self.j_top
    }

    pub fn is_contaminated(&self, j: i32) -> bool {
        j > self.j_max
    }

    fn check(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.j_top {
            return Err(Error::BlockOutOfRange {
                j,
                j_max: self.j_top,
            });
        }
        Ok(())
    }

    /// Multiplier values of block `j` on the lattice.
    pub fn multiplier(&self, j: i32) -> Result<&[f64]> {
        self.check(j)?;
        Ok(&self.multipliers[(j + 1) as usize])
    }

    /// `max_ξ |Σ_{j=−1}^{J} ψ_j(ξ) − 1|` over lattice points with
    /// `|ξ| ≤ 3/4 · 2^{J+1}`, with `J = j_max`; and the same over the whole
    /// lattice with `J = j_top`.
    pub fn identity_residuals(&self) -> (f64, f64) {
        let band = 0.75 * 2f64.powi(self.j_max + 1);
        let mut clean = 0.0f64;
        let mut full = 0.0f64;
        for i in 0..self.grid.len() {
            let q = self.grid.wavenumber(i);
            let upto: f64 = (-1..=self.j_max)
                .map(|j| self.multipliers[(j + 1) as usize][i])
                .sum();
            let all: f64 = (-1..=self.j_top)
                .map(|j| self.multipliers[(j + 1) as usize][i])
                .sum();
            if q <= band {
                clean = clean.max((upto - 1.0).abs());
            }
            full = full.max((all - 1.0).abs());
        }
        (clean, full)
    }

    pub fn project_spectrum(&self, s: &FieldSpectrum, j: i32) -> Result<FieldSpectrum> {
        self.grid.ensure_same(s.grid())?;
        let m = self.multiplier(j)?;
        Ok(s.apply_multiplier(|i| m[i]))
    }

    /// Spectral multiplier of `S_j = Σ_{l=−1}^{j−1} Δ_l`.
    pub fn low_pass_spectrum(&self, s: &FieldSpectrum, j: i32) -> Result<FieldSpectrum> {
        self.grid.ensure_same(s.grid())?;
        let hi = (j - 1).min(self.j_top);
        let ms: Vec<&[f64]> = (-1..=hi)
            .map(|l| self.multipliers[(l + 1) as usize].as_slice())
            .collect();
        Ok(s.apply_multiplier(|i| ms.iter().map(|m| m[i]).sum()))
    }

    /// Two-column `r value` text of `χ` (`which = "chi"`) or `φ`.
    pub fn profile_table(which: &str, samples: usize) -> Result<String> {
        let f: fn(f64) -> f64 = match which {
            "chi" => chi,
            "phi" => phi,
            other => {
                return Err(Error::Config(format!(
                    "unknown partition profile '{other}'"
                )))
            }
        };
        let mut s = String::new();
        for i in 0..samples {
            let r = 3.0 * i as f64 / (samples - 1).max(1) as f64;
            s.push_str(&format!("{r:.6} {:.15e}\n", f(r)));
        }
        Ok(s)
    }
}

/// `Δ_j θ` for a physical field.
pub fn project_block(theta: &Field, j: i32, part: &DyadicPartition) -> Result<Field> {
    Ok(part.project_spectrum(&theta.to_spectrum(), j)?.to_field())
}

/// Block family `{Δ_j θ}` for `j = −1..=j_top`.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    j_max: i32,
    j_top: i32,
    blocks: Vec<Field>,
}

impl BlockDecomposition {
    pub fn new(theta: &Field, part: &DyadicPartition) -> Result<Self> {
        let s = theta.to_spectrum();
        let blocks = (-1..=part.j_top())
            .map(|j| Ok(part.project_spectrum(&s, j)?.to_field()))
            .collect::<Result<_>>()?;
        Ok(Self {
            j_max: part.j_max(),
            j_top: part.j_top(),
            blocks,
        })
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn j_top(&self) -> i32 {
        self.j_top
    }

    pub fn block(&self, j: i32) -> Result<&Field> {
        if j < -1 || j > self.j_top {
            return Err(Error::BlockOutOfRange {
                j,
                j_max: self.j_top,
            });
        }
        Ok(&self.blocks[(j + 1) as usize])
    }

    fn sum_range(&self, lo: i32, hi: i32) -> Field {
        let mut out = Field::zeros(*self.blocks[0].grid());
        for j in lo.max(-1)..=hi.min(self.j_top) {
            out.add_assign(&self.blocks[(j + 1) as usize])
                .expect("blocks share a grid");
        }
        out
    }

    /// `S_j θ = Σ_{l ≤ j−1} Δ_l θ`.
    pub fn low_pass(&self, j: i32) -> Field {
        self.sum_range(-1, j - 1)
    }

    /// `Δ̃_j θ = Δ_{j−1}θ + Δ_jθ + Δ_{j+1}θ`.
    pub fn widened(&self, j: i32) -> Field {
        self.sum_range(j - 1, j + 1)
    }

    /// `Σ_{j=−1}^{j_top} Δ_j θ`.
    pub fn reconstruct(&self) -> Field {
        self.sum_range(-1, self.j_top)
    }

    /// Sum of the uncontaminated blocks `−1..=j_max`.
    pub fn reconstruct_clean(&self) -> Field {
        self.sum_range(-1, self.j_max)
    }

    /// Per-block `L^p` norms.
    pub fn norms(&self, p: f64) -> Vec<(i32, f64)> {
        (-1..=self.j_top)
            .map(|j| (j, self.blocks[(j + 1) as usize].lp_norm(p)))
            .collect()
    }
}

/// One row of a Besov norm report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovBlock {
    pub j: i32,
    pub lp_norm: f64,
    pub weighted: f64,
    pub contaminated: bool,
}

/// `‖θ‖_{B^s_{p,r}}` with its per-block contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovNormReport {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub blocks: Vec<BesovBlock>,
    /// `ℓ^r` aggregate over the uncontaminated blocks `−1..=j_max`.
    pub total: f64,
    /// `ℓ^r` aggregate over every block touching the lattice.
    pub total_with_contaminated: f64,
}

impl BesovNormReport {
    pub const CSV_HEADER: &'static str = "j,lp_norm,weighted_norm,contaminated";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for b in &self.blocks {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{}\n",
                b.j, b.lp_norm, b.weighted, b.contaminated
            ));
        }
        out
    }

    /// Block with the largest weighted contribution.
    pub fn dominant_block(&self) -> i32 {
        self.blocks
            .iter()
            .max_by(|a, b| a.weighted.total_cmp(&b.weighted))
            .map(|b| b.j)
            .unwrap_or(-1)
    }
}

fn aggregate(values: impl Iterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        values.map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Besov norm from block `L^p` norms on the grid.
pub fn besov_norm(
    theta: &Field,
    s: f64,
    p: f64,
    r: f64,
    part: &DyadicPartition,
) -> Result<BesovNormReport> {
    if !(p >= 1.0) || !(r >= 1.0) {
        return Err(Error::Config(format!(
            "Besov indices need p, r >= 1 (got p={p}, r={r})"
        )));
    }
    let spec = theta.to_spectrum();
    let mut blocks = Vec::with_capacity((part.j_top() + 2) as usize);
    for j in -1..=part.j_top() {
        let b = part.project_spectrum(&spec, j)?.to_field();
        let n = lp_norm(b.values(), p);
        blocks.push(BesovBlock {
            j,
            lp_norm: n,
            weighted: 2f64.powf(j as f64 * s) * n,
            contaminated: part.is_contaminated(j),
        });
    }
    let total = aggregate(
        blocks
            .iter()
            .filter(|b| !b.contaminated)
            .map(|b| b.weighted),
        r,
    );
    let total_with_contaminated = aggregate(blocks.iter().map(|b| b.weighted), r);
    Ok(BesovNormReport {
        s,
        p,
        r,
        blocks,
        total,
        total_with_contaminated,
    })
}

/// `sup |θ(x + h e) − θ(x)| / |h|^δ` over grid points, coordinate
/// directions `e` and dyadic shifts `h = Δx · 2^m ≤ half the period`.
pub fn holder_seminorm(theta: &Field, delta: f64) -> f64 {
    let g = *theta.grid();
    let n = g.n();
    let v = theta.values();
    let mut best = 0.0f64;
    let mut step = 1usize;
    while step <= n / 2 {
        let h = step as f64 * g.spacing();
        let w = h.powf(delta);
        for axis in 0..g.dim() {
            for i in 0..g.len() {
                let mut a = g.axes(i);
                a[axis] = (a[axis] + step) % n;
                let diff = (v[g.flat(a)] - v[i]).abs();
                best = best.max(diff / w);
            }
        }
        step *= 2;
    }
    best
}

/// Bernstein ratios for block `j`:
/// `upper = ‖∇^k Δ_jθ‖_{L^b} / (2^{j(k + d/a − d/b)} ‖Δ_jθ‖_{L^a})` and,
/// when `a = b` and `j ≥ 0`, `lower = ‖∇^k Δ_jθ‖_{L^a} / (2^{jk} ‖Δ_jθ‖_{L^a})`.
/// `‖∇^k g‖` is the largest norm among pure derivatives `∂_i^k g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinRatios {
    pub upper: Option<f64>,
    pub lower: Option<f64>,
}

pub fn bernstein_check(
    theta: &Field,
    j: i32,
    k: u32,
    a: f64,
    b: f64,
    part: &DyadicPartition,
) -> Result<BernsteinRatios> {
    if j > part.j_max() || j < -1 {
        return Err(Error::BlockOutOfRange {
            j,
            j_max: part.j_max(),
        });
    }
    if !(a >= 1.0 && b >= a) {
        return Err(Error::Config(format!(
            "Bernstein check needs 1 <= a <= b (got a={a}, b={b})"
        )));
    }
    let g = *theta.grid();
    let block = part.project_spectrum(&theta.to_spectrum(), j)?;
    let base_a = lp_norm(block.to_field().values(), a);
    if base_a <= 1e-14 * theta.sup_norm().max(f64::MIN_POSITIVE) {
        return Ok(BernsteinRatios {
            upper: None,
            lower: None,
        });
    }
    let deriv_norm = |p: f64| -> f64 {
        (0..g.dim())
            .map(|axis| {
                let mut d = block.clone();
                for _ in 0..k {
                    d = d.derivative(axis);
                }
                lp_norm(d.to_field().values(), p)
            })
            .fold(0.0, f64::max)
    };
    let d = g.dim() as f64;
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    let scale = 2f64.powf(j as f64 * (k as f64 + d * inv(a) - d * inv(b)));
    let upper = deriv_norm(b) / (scale * base_a);
    let lower = if a == b && j >= 0 {
        Some(deriv_norm(a) / (2f64.powf(j as f64 * k as f64) * base_a))
    } else {
        None
    };
    Ok(BernsteinRatios {
        upper: Some(upper),
        lower,
    })
}
