//! One-dimensional quadrature rules and special functions used by the
//! kernel integrals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and mesh parameters for the radial kernel integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Relative tolerance used for refinement checks.
    pub tol: f64,
    /// Gauss–Legendre points per panel.
    pub points_per_panel: usize,
    /// Innermost radius of the geometric mesh near the origin.
    pub r_min: f64,
    /// Truncation radius in units of the period scale `L`.
    pub r_max_periods: f64,
    /// Upper bound on the width of the uniform outer panels.
    pub max_panel: f64,
    /// Number of refinement levels tried before giving up.
    pub max_refinements: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            points_per_panel: 10,
            r_min: 2f64.powi(-40),
            r_max_periods: 8.0,
            max_panel: 1.0,
            max_refinements: 3,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn cached_rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=64).map(gauss_legendre).collect());
    &rules[n.clamp(1, 64) - 1]
}

/// Fixed-order Gauss–Legendre rule on `[a, b]`.
pub fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = cached_rule(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(c + h * xi))
        .sum::<f64>()
        * h
}

/// Nodes and weights of a composite Gauss–Legendre rule over the panels
/// delimited by `breaks`.
pub fn composite_nodes(breaks: &[f64], n: usize) -> Vec<(f64, f64)> {
    let (x, w) = cached_rule(n);
    let mut out = Vec::with_capacity(breaks.len().saturating_sub(1) * n);
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        for (xi, wi) in x.iter().zip(w) {
            out.push((c + h * xi, wi * h));
        }
    }
    out
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let f1 = f(c - h * XGK[i]);
        let f2 = f(c + h * XGK[i]);
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration on `[a, b]`.
///
/// Returns the integral and an error estimate, or `NonConvergence` when the
/// interval budget is exhausted before the requested tolerance is met.
pub fn adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let mut segments = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    let mut previous = f64::NAN;
    for _ in 0..20_000 {
        let total: f64 = segments.iter().map(|s| s.2).sum();
        let err: f64 = segments.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("segments nonempty");
        let (lo, hi, _, _) = segments.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::NonConvergence {
                context: format!("adaptive quadrature on [{a}, {b}] hit machine resolution"),
                previous,
                last: total,
            });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
        previous = total;
    }
    let total: f64 = segments.iter().map(|s| s.2).sum();
    Err(Error::NonConvergence {
        context: format!("adaptive quadrature on [{a}, {b}] exceeded its interval budget"),
        previous,
        last: total,
    })
}

/// `∫_X^∞ e^{it} t^{-β} dt` for `X > 0`, `β > 0`.
pub fn oscillatory_tail(x: f64, beta: f64) -> Complex64 {
    assert!(
        x > 0.0 && beta > 0.0,
        "oscillatory tail needs X > 0 and β > 0"
    );
    const X_ASYMPTOTIC: f64 = 200.0;
    if x >= X_ASYMPTOTIC {
        return tail_asymptotic(x, beta);
    }
    // Integrate up to a point past X_ASYMPTOTIC with panels of a quarter period.
    let x1 = X_ASYMPTOTIC.max(x) + 2.0 * PI;
    let panels = ((x1 - x) / (0.5 * PI)).ceil() as usize;
    let h = (x1 - x) / panels as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for p in 0..panels {
        let a = x + p as f64 * h;
        let b = a + h;
        re += gl_integrate(|t| t.cos() * t.powf(-beta), a, b, 12);
        im += gl_integrate(|t| t.sin() * t.powf(-beta), a, b, 12);
    }
    Complex64::new(re, im) + tail_asymptotic(x1, beta)
}

fn tail_asymptotic(x: f64, beta: f64) -> Complex64 {
    // Repeated integration by parts:
    // F(β) = i e^{iX} X^{-β} − iβ F(β+1).
    let e = Complex64::from_polar(1.0, x);
    let i = Complex64::new(0.0, 1.0);
    let mut factor = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut b = beta;
    for _ in 0..12 {
        let term = factor * i * e * x.powf(-b);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
        factor *= -i * b;
        b += 1.0;
    }
    sum
}

/// Bessel function `J0`.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 25.0 {
        // The trapezoid rule is spectrally accurate for this periodic
        // integrand: J0(x) = (1/π) ∫_0^π cos(x sin θ) dθ.
        let m = x as usize + 32;
        let h = PI / m as f64;
        (0..m)
            .map(|i| (x * (i as f64 * h).sin()).cos())
            .sum::<f64>()
            / m as f64
    } else {
        let (p, q) = hankel_pq(x);
        let chi = x - 0.25 * PI;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// `1 − J0(x)` without cancellation for small arguments.
pub fn one_minus_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 2.0 {
        let y = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..30 {
            term *= y / (k * k) as f64;
            sum -= term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        1.0 - bessel_j0(x)
    }
}

/// Asymptotic amplitudes `P0, Q0` of the Hankel expansion of `J0`.
fn hankel_pq(x: f64) -> (f64, f64) {
    let z = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    // term_k = Π_{i=1..k} (2i−1)² / (i z), alternating between P and Q.
    for k in 1..30 {
        let a = (2 * k - 1) as f64;
        let next = term * a * a / (k as f64 * z);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        match k % 4 {
            1 => q -= term,
            2 => p -= term,
            3 => q += term,
            _ => p += term,
        }
        if term < 1e-17 {
            break;
        }
    }
    (p, q)
}

/// `∫_X^∞ J0(t) t^{-β} dt` for `X > 0`, `β > 0`.
pub fn bessel_tail(x: f64, beta: f64) -> f64 {
    const X_ASYMPTOTIC: f64 = 200.0;
    let mut total = 0.0;
    let start = if x < X_ASYMPTOTIC {
        let x1 = X_ASYMPTOTIC + 2.0 * PI;
        let panels = ((x1 - x) / (0.5 * PI)).ceil() as usize;
        let h = (x1 - x) / panels as f64;
        for p in 0..panels {
            let a = x + p as f64 * h;
            total += gl_integrate(|t| bessel_j0(t) * t.powf(-beta), a, a + h, 12);
        }
        x1
    } else {
        x
    };
    // J0(t) ≈ sqrt(2/π) Re[e^{i(t−π/4)} Σ_n a_n t^{-n-1/2}] with the Hankel
    // coefficients a_n of P0 + iQ0.
    let coeffs = hankel_complex_coeffs(8);
    let phase = Complex64::from_polar(1.0, -0.25 * PI);
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, a) in coeffs.iter().enumerate() {
        acc += a * oscillatory_tail(start, beta + n as f64 + 0.5);
    }
    total + (2.0 / PI).sqrt() * (phase * acc).re
}

/// Coefficients `a_n` with `P0(x) + i Q0(x) = Σ a_n x^{-n}`.
fn hankel_complex_coeffs(n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    let mut mag = 1.0;
    out.push(Complex64::new(1.0, 0.0));
    for k in 1..n {
        let a = (2 * k - 1) as f64;
        mag *= a * a / (k as f64 * 8.0);
        let c = match k % 4 {
            1 => Complex64::new(0.0, -mag),
            2 => Complex64::new(-mag, 0.0),
            3 => Complex64::new(0.0, mag),
            _ => Complex64::new(mag, 0.0),
        };
        out.push(c);
    }
    out
}
