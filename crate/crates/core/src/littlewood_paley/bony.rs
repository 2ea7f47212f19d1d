//! Paraproduct splitting of the commutator `[u·∇, Δ_j]θ`.
//!
//! All products are dealiased, so the identity
//! `[u·∇, Δ_j]θ = I1 + I2 + I3` holds to rounding on the grid.

use super::{holder_seminorm, DyadicPartition};
use crate::error::{Error, Result};
use crate::report::EstimateReport;
use crate::spectral::{lp_norm, Dealiaser, Field, FieldSpectrum, VectorField};

/// Terms of the splitting for one block `j`.
///
/// * `i1 = −Σ_{|k−j|≤4} [Δ_j(S_{k−1}u·∇Δ_kθ) − S_{k−1}u·∇Δ_jΔ_kθ]`
/// * `i2 = −Σ_{k≥j−4} [Δ_j(Δ_ku·∇S_{k−1}θ) − Δ_ku·∇Δ_jS_{k−1}θ]`
/// * `i3 = −Σ_{k≥j−2} [Δ_j(Δ_ku·∇Δ̃_kθ) − Δ_ku·∇Δ_jΔ̃_kθ]`
///
/// `i2_far` is the part of `i2` with `k ≥ j+5`; it vanishes when `u` has
/// no frequencies beyond `2^{j+4}`.
#[derive(Debug, Clone)]
pub struct BonyTerms {
    pub j: i32,
    /// `u·∇Δ_jθ − Δ_j(u·∇θ)`.
    pub commutator: Field,
    pub i1: Field,
    pub i2: Field,
    pub i2_far: Field,
    pub i3: Field,
    /// `commutator − (i1 + i2 + i3)`.
    pub residual: Field,
    /// `‖residual‖_∞` over the largest of `‖commutator‖_∞`,
    /// `‖Δ_j(u·∇θ)‖_∞` and `‖u·∇θ‖_∞`.
    pub relative_residual: f64,
}

struct Blocks {
    lo: i32,
    spectra: Vec<FieldSpectrum>,
    zero: FieldSpectrum,
}

impl Blocks {
    fn new(s: &FieldSpectrum, part: &DyadicPartition) -> Result<Self> {
        let spectra = (-1..=part.j_top())
            .map(|j| part.project_spectrum(s, j))
            .collect::<Result<_>>()?;
        Ok(Self {
            lo: -1,
            spectra,
            zero: FieldSpectrum::zeros(*s.grid()),
        })
    }

    fn get(&self, k: i32) -> &FieldSpectrum {
        let i = k - self.lo;
        if i < 0 || i as usize >= self.spectra.len() {
            &self.zero
        } else {
            &self.spectra[i as usize]
        }
    }

    fn sum(&self, lo: i32, hi: i32) -> FieldSpectrum {
        let mut out = self.zero.clone();
        for k in lo..=hi {
            if k >= self.lo && ((k - self.lo) as usize) < self.spectra.len() {
                out.add_assign(self.get(k)).expect("same grid");
            }
        }
        out
    }

    /// `S_{k−1} = Σ_{l ≤ k−2} Δ_l`.
    fn low(&self, k: i32) -> FieldSpectrum {
        self.sum(self.lo, k - 2)
    }

    fn widened(&self, k: i32) -> FieldSpectrum {
        self.sum(k - 1, k + 1)
    }
}

/// `−[Δ_j(a·∇b) − a·∇Δ_jb]`.
fn piece(
    dealias: &Dealiaser,
    part: &DyadicPartition,
    j: i32,
    a: &[FieldSpectrum],
    b: &FieldSpectrum,
) -> Result<FieldSpectrum> {
    let outer = part.project_spectrum(&dealias.advection(a, b)?, j)?;
    let inner = dealias.advection(a, &part.project_spectrum(b, j)?)?;
    inner.sub(&outer)
}

pub fn bony_commutator_decomposition(
    u: &VectorField,
    theta: &Field,
    j: i32,
    part: &DyadicPartition,
) -> Result<BonyTerms> {
    let grid = *part.grid();
    grid.ensure_same(theta.grid())?;
    grid.ensure_same(u.grid())?;
    if u.components().len() != grid.dim() {
        return Err(Error::InvalidGrid(format!(
            "drift has {} components on a {}-dimensional grid",
            u.components().len(),
            grid.dim()
        )));
    }
    if j < -1 || j > part.j_top() {
        return Err(Error::BlockOutOfRange {
            j,
            j_max: part.j_top(),
        });
    }
    let dealias = Dealiaser::new(grid);
    let theta_hat = theta.to_spectrum();
    let u_hat = u.spectra();
    let th = Blocks::new(&theta_hat, part)?;
    let ub: Vec<Blocks> = u_hat
        .iter()
        .map(|c| Blocks::new(c, part))
        .collect::<Result<_>>()?;
    let top = part.j_top();

    let full = dealias.advection(&u_hat, &theta_hat)?;
    let projected_full = part.project_spectrum(&full, j)?;
    let commutator = dealias
        .advection(&u_hat, &part.project_spectrum(&theta_hat, j)?)?
        .sub(&projected_full)?;

    let zero = FieldSpectrum::zeros(grid);
    let mut i1 = zero.clone();
    for k in (j - 4).max(-1)..=(j + 4).min(top) {
        let low_u: Vec<FieldSpectrum> = ub.iter().map(|b| b.low(k)).collect();
        i1.add_assign(&piece(&dealias, part, j, &low_u, th.get(k))?)?;
    }
    let mut i2 = zero.clone();
    let mut i2_far = zero.clone();
    let mut i3 = zero;
    for k in (j - 4).max(-1)..=top {
        let uk: Vec<FieldSpectrum> = ub.iter().map(|b| b.get(k).clone()).collect();
        let p2 = piece(&dealias, part, j, &uk, &th.low(k))?;
        if k >= j + 5 {
            i2_far.add_assign(&p2)?;
        }
        i2.add_assign(&p2)?;
        if k >= j - 2 {
            i3.add_assign(&piece(&dealias, part, j, &uk, &th.widened(k))?)?;
        }
    }

    let mut sum = i1.add(&i2)?;
    sum.add_assign(&i3)?;
    let residual = commutator.sub(&sum)?;
    let commutator = commutator.to_field();
    let residual = residual.to_field();
    let scale = commutator
        .sup_norm()
        .max(projected_full.to_field().sup_norm())
        .max(full.to_field().sup_norm())
        .max(f64::MIN_POSITIVE);
    Ok(BonyTerms {
        j,
        relative_residual: residual.sup_norm() / scale,
        commutator,
        i1: i1.to_field(),
        i2: i2.to_field(),
        i2_far: i2_far.to_field(),
        i3: i3.to_field(),
        residual,
    })
}

/// Fitted constants of the three commutator bounds at block `j`:
///
/// * `c_i1 = ‖I1‖_p / (2^{−jδ}‖u‖_{Ċ^δ} Σ_{|k−j|≤4} 2^k‖Δ_kθ‖_p)`
/// * `c_i2 = ‖I2‖_p / (2^{−jδ}‖u‖_{Ċ^δ} Σ_{k≤j} 2^k‖Δ_kθ‖_p)`
/// * `c_i3 = ‖I3‖_p / (‖u‖_{Ċ^δ} Σ_{k≥j−3} 2^{k(1−δ)}‖Δ_kθ‖_p)`
///
/// `‖u‖_{Ċ^δ}` is the largest grid Hölder seminorm among the components.
/// The report's residual is the relative residual of the splitting and it
/// passes when that residual is at most `1e-10` and all constants are finite.
pub fn commutator_bound_check(
    u: &VectorField,
    theta: &Field,
    j: i32,
    delta: f64,
    p: f64,
    part: &DyadicPartition,
) -> Result<EstimateReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!(
            "Hölder exponent must lie in (0, 1), got {delta}"
        )));
    }
    let terms = bony_commutator_decomposition(u, theta, j, part)?;
    let u_holder = u
        .components()
        .iter()
        .map(|c| holder_seminorm(c, delta))
        .fold(0.0, f64::max);
    let theta_hat = theta.to_spectrum();
    let block_norm = |k: i32| -> Result<f64> {
        if k < -1 || k > part.j_top() {
            return Ok(0.0);
        }
        Ok(lp_norm(
            part.project_spectrum(&theta_hat, k)?.to_field().values(),
            p,
        ))
    };
    let pow2 = |x: f64| 2f64.powf(x);
    let jd = j as f64;
    let mut s1 = 0.0;
    for k in (j - 4)..=(j + 4) {
        s1 += pow2(k as f64) * block_norm(k)?;
    }
    let mut s2 = 0.0;
    for k in -1..=j {
        s2 += pow2(k as f64) * block_norm(k)?;
    }
    let mut s3 = 0.0;
    for k in (j - 3).max(-1)..=part.j_top() {
        s3 += pow2(k as f64 * (1.0 - delta)) * block_norm(k)?;
    }
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let c1 = ratio(
        lp_norm(terms.i1.values(), p),
        pow2(-jd * delta) * u_holder * s1,
    );
    let c2 = ratio(
        lp_norm(terms.i2.values(), p),
        pow2(-jd * delta) * u_holder * s2,
    );
    let c3 = ratio(lp_norm(terms.i3.values(), p), u_holder * s3);
    let mut report = EstimateReport::new("commutator_bounds", "commutator")
        .constant("c_i1", c1)
        .constant("c_i2", c2)
        .constant("c_i3", c3)
        .constant("u_holder", u_holder)
        .constant("j", jd)
        .constant("delta", delta)
        .constant("p", p)
        .constant("i2_far_norm", lp_norm(terms.i2_far.values(), p));
    report.note("residual: relative sup-norm defect of the paraproduct splitting");
    let finite = c1.is_finite() && c2.is_finite() && c3.is_finite();
    let residual = if finite {
        terms.relative_residual
    } else {
        f64::INFINITY
    };
    Ok(report.judge(residual, 1e-10))
}
