//! Periodic grids, discrete Fourier transforms and dealiased products.
//!
//! Fields live on the torus `[0, 2πL)^d` sampled at `N` points per axis
//! (`d` is 1 or 2). Spectra hold normalized coefficients
//! `c_k = N^{-d} Σ_x f(x) e^{-i k·x}`, so `f(x) = Σ_k c_k e^{i k·x}` and the
//! physical wave vector of lattice index `m` is `m / L`.
//!
//! Flat storage is axis-0 fastest: `idx = i0 + N * i1`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized in-place d-dimensional FFT on an `n^dim` array.
fn fft_nd(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    let fft = plan(n, inverse);
    match dim {
        1 => fft.process(data),
        2 => {
            fft.process(data);
            transpose(data, n);
            fft.process(data);
            transpose(data, n);
        }
        _ => unreachable!("grid dimension validated at construction"),
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i + n * j, j + n * i);
        }
    }
}

/// Uniform periodic grid on `[0, 2πL)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    period_scale: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, period_scale: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(period_scale.is_finite() && period_scale > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "period scale must be positive, got {period_scale}"
            )));
        }
        Ok(Self {
            dim,
            n,
            period_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period_scale(&self) -> f64 {
        self.period_scale
    }

    /// Side length `2πL` of the periodic box.
    pub fn period(&self) -> f64 {
        2.0 * PI * self.period_scale
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period() / self.n as f64
    }

    /// Largest wavenumber along one axis, `(N/2)/L`.
    pub fn nyquist(&self) -> f64 {
        (self.n / 2) as f64 / self.period_scale
    }

    /// Same grid with `n` doubled.
    pub fn refined(&self) -> Self {
        Self {
            n: self.n * 2,
            ..*self
        }
    }

    /// Same wavenumber range sampled twice as finely: `n` and the period
    /// both doubled.
    pub fn densified(&self) -> Self {
        Self {
            n: self.n * 2,
            period_scale: self.period_scale * 2.0,
            ..*self
        }
    }

    /// Signed lattice index for a per-axis storage index; the Nyquist index
    /// `N/2` is reported as positive.
    pub fn signed_index(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Per-axis storage indices of a flat index.
    pub fn axes(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx % self.n, idx / self.n],
        }
    }

    pub fn flat(&self, axes: [usize; 2]) -> usize {
        match self.dim {
            1 => axes[0],
            _ => axes[0] + self.n * axes[1],
        }
    }

    /// Signed integer lattice vector of a flat index.
    pub fn lattice_vector(&self, idx: usize) -> [i64; 2] {
        let a = self.axes(idx);
        match self.dim {
            1 => [self.signed_index(a[0]), 0],
            _ => [self.signed_index(a[0]), self.signed_index(a[1])],
        }
    }

    /// Physical wave vector `m / L` of a flat index.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let m = self.lattice_vector(idx);
        [
            m[0] as f64 / self.period_scale,
            m[1] as f64 / self.period_scale,
        ]
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        (k[0] * k[0] + k[1] * k[1]).sqrt()
    }

    /// True when any component sits on the (ambiguous) Nyquist index.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let a = self.axes(idx);
        let half = self.n / 2;
        a[0] == half || (self.dim == 2 && a[1] == half)
    }

    /// Flat index of the lattice vector `-m`.
    pub fn negated(&self, idx: usize) -> usize {
        let a = self.axes(idx);
        let neg = |i: usize| (self.n - i) % self.n;
        self.flat([neg(a[0]), neg(a[1])])
    }

    /// Physical coordinates of a flat grid index.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let a = self.axes(idx);
        let h = self.spacing();
        match self.dim {
            1 => [a[0] as f64 * h, 0.0],
            _ => [a[0] as f64 * h, a[1] as f64 * h],
        }
    }

    /// Largest |k| present on the lattice.
    pub fn max_wavenumber(&self) -> f64 {
        self.nyquist() * (self.dim as f64).sqrt()
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::LatticeMismatch(format!(
                "grid (d={}, N={}, L={}) vs (d={}, N={}, L={})",
                self.dim, self.n, self.period_scale, other.dim, other.n, other.period_scale
            )));
        }
        Ok(())
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        self.check_same(other)
    }
}

/// Real samples of a scalar field on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LatticeMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_spectrum(&self) -> FieldSpectrum {
        let mut data: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft_nd(&mut data, self.grid.n, self.grid.dim, false);
        let scale = 1.0 / self.grid.len() as f64;
        for c in &mut data {
            *c *= scale;
        }
        FieldSpectrum {
            grid: self.grid,
            coeffs: data,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `L^p` norm with respect to the normalized measure on the torus;
    /// `p = ∞` gives the grid maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, p)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    pub fn add_assign(&mut self, other: &Field) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Sample of `self` on a coarser grid obtained by spectral truncation.
    pub fn restrict_to(&self, coarse: Grid) -> Result<Field> {
        Ok(self.to_spectrum().resample(coarse)?.to_field())
    }
}

pub(crate) fn lp_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let n = values.len() as f64;
    if p == 2.0 {
        return (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * (s / n).powf(1.0 / p)
}

/// Normalized Fourier coefficients of a real periodic field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl FieldSpectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LatticeMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Inverse transform; the imaginary residue (roundoff) is discarded.
    pub fn to_field(&self) -> Field {
        let mut data = self.coeffs.clone();
        fft_nd(&mut data, self.grid.n, self.grid.dim, true);
        Field {
            grid: self.grid,
            values: data.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Largest imaginary part produced by the inverse transform relative to
    /// the largest real part; zero for a conjugate-symmetric spectrum.
    pub fn reality_defect(&self) -> f64 {
        let mut data = self.coeffs.clone();
        fft_nd(&mut data, self.grid.n, self.grid.dim, true);
        let re = data.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
        let im = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        if re == 0.0 {
            im
        } else {
            im / re
        }
    }

    /// Multiply every coefficient by a real multiplier of the wave vector.
    pub fn apply_multiplier(&self, m: impl Fn(usize) -> f64) -> FieldSpectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(i))
            .collect();
        FieldSpectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// Spectral partial derivative along `axis` (Nyquist components dropped).
    pub fn derivative(&self, axis: usize) -> FieldSpectrum {
        let g = self.grid;
        let half = g.n / 2;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let a = g.axes(i);
                if a[axis] == half {
                    return Complex64::new(0.0, 0.0);
                }
                let k = g.wavevector(i)[axis];
                c * Complex64::new(0.0, k)
            })
            .collect();
        FieldSpectrum { grid: g, coeffs }
    }

    pub fn add(&self, other: &FieldSpectrum) -> Result<FieldSpectrum> {
        self.grid.check_same(&other.grid)?;
        Ok(FieldSpectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &FieldSpectrum) -> Result<FieldSpectrum> {
        self.grid.check_same(&other.grid)?;
        Ok(FieldSpectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &FieldSpectrum) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> FieldSpectrum {
        FieldSpectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Discrete `L²` norm (normalized measure) via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Copy onto another resolution of the same torus. Refining splits a
    /// source Nyquist coefficient evenly between `±N/2`; coarsening drops
    /// every mode at or beyond the target Nyquist index.
    pub fn resample(&self, target: Grid) -> Result<FieldSpectrum> {
        if target.dim != self.grid.dim || target.period_scale != self.grid.period_scale {
            return Err(Error::LatticeMismatch(
                "resampling requires the same torus and dimension".into(),
            ));
        }
        let src = self.grid;
        if src.n == target.n {
            return Ok(self.clone());
        }
        let mut out = FieldSpectrum::zeros(target);
        let src_half = (src.n / 2) as i64;
        let tgt_half = (target.n / 2) as i64;
        let wrap = |k: i64| k.rem_euclid(target.n as i64) as usize;
        let split = |k: i64| -> Vec<(i64, f64)> {
            if k == src_half {
                vec![(k, 0.5), (-k, 0.5)]
            } else {
                vec![(k, 1.0)]
            }
        };
        for i in 0..src.len() {
            let m = src.lattice_vector(i);
            let c = self.coeffs[i];
            if target.n < src.n {
                if m[0].abs() >= tgt_half || m[1].abs() >= tgt_half {
                    continue;
                }
                out.coeffs[target.flat([wrap(m[0]), wrap(m[1])])] += c;
                continue;
            }
            for (k0, w0) in split(m[0]) {
                if src.dim == 1 {
                    out.coeffs[wrap(k0)] += c * w0;
                    continue;
                }
                for (k1, w1) in split(m[1]) {
                    out.coeffs[target.flat([wrap(k0), wrap(k1)])] += c * (w0 * w1);
                }
            }
        }
        Ok(out)
    }
}

/// A `d`-component vector field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Field>,
}

impl VectorField {
    pub fn new(components: Vec<Field>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::LatticeMismatch(
                "vector field needs components".into(),
            ));
        };
        let g = *first.grid();
        if components.len() != g.dim() {
            return Err(Error::LatticeMismatch(format!(
                "{} components for a {}-dimensional grid",
                components.len(),
                g.dim()
            )));
        }
        for c in &components {
            g.check_same(c.grid())?;
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| Field::zeros(grid)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    /// Pointwise Euclidean maximum.
    pub fn sup_norm(&self) -> f64 {
        let n = self.grid().len();
        (0..n)
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values()[i].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn spectra(&self) -> Vec<FieldSpectrum> {
        self.components.iter().map(Field::to_spectrum).collect()
    }
}

/// Zero-padding dealiaser (3/2 rule) for quadratic products.
#[derive(Debug, Clone, Copy)]
pub struct Dealiaser {
    grid: Grid,
    m: usize,
}

impl Dealiaser {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            m: 3 * grid.n / 2,
        }
    }

    fn padded_len(&self) -> usize {
        self.m.pow(self.grid.dim as u32)
    }

    /// Physical samples on the padded grid of `a` and `b`, from one complex
    /// transform of `â + i b̂` (both fields are real).
    fn padded_pair_physical(&self, a: &FieldSpectrum, b: &FieldSpectrum) -> (Vec<f64>, Vec<f64>) {
        let g = self.grid;
        let m = self.m;
        let half = (g.n / 2) as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.padded_len()];
        let wrap = |k: i64| k.rem_euclid(m as i64) as usize;
        let i = Complex64::new(0.0, 1.0);
        // A Nyquist coefficient stands for the pair of modes ±N/2.
        let split = |kk: i64| -> ([(i64, f64); 2], usize) {
            if kk == half {
                ([(half, 0.5), (-half, 0.5)], 2)
            } else {
                ([(kk, 1.0), (0, 0.0)], 1)
            }
        };
        for (idx, (ca, cb)) in a.coeffs.iter().zip(&b.coeffs).enumerate() {
            let c = ca + i * cb;
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let k = g.lattice_vector(idx);
            let (s0, n0) = split(k[0]);
            if g.dim == 1 {
                for &(k0, w0) in &s0[..n0] {
                    buf[wrap(k0)] += c * w0;
                }
            } else {
                let (s1, n1) = split(k[1]);
                for &(k0, w0) in &s0[..n0] {
                    for &(k1, w1) in &s1[..n1] {
                        buf[wrap(k0) + m * wrap(k1)] += c * (w0 * w1);
                    }
                }
            }
        }
        fft_nd(&mut buf, m, g.dim, true);
        buf.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    fn spectrum_from_padded(&self, values: Vec<f64>) -> FieldSpectrum {
        let g = self.grid;
        let m = self.m;
        let mut buf: Vec<Complex64> = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut buf, m, g.dim, false);
        let scale = 1.0 / self.padded_len() as f64;
        let half = (g.n / 2) as i64;
        let wrap = |k: i64| k.rem_euclid(m as i64) as usize;
        let mut out = FieldSpectrum::zeros(g);
        for i in 0..g.len() {
            let k = g.lattice_vector(i);
            if k[0].abs() >= half || k[1].abs() >= half {
                continue;
            }
            let j = if g.dim == 1 {
                wrap(k[0])
            } else {
                wrap(k[0]) + m * wrap(k[1])
            };
            out.coeffs[i] = buf[j] * scale;
        }
        out
    }

    /// `P_N(Σ_i a_i b_i)` for pairs of spectra, exact for all retained modes.
    pub fn sum_of_products(
        &self,
        pairs: &[(&FieldSpectrum, &FieldSpectrum)],
    ) -> Result<FieldSpectrum> {
        let mut acc = vec![0.0; self.padded_len()];
        for (a, b) in pairs {
            self.grid.check_same(&a.grid)?;
            self.grid.check_same(&b.grid)?;
            let (pa, pb) = self.padded_pair_physical(a, b);
            for ((s, x), y) in acc.iter_mut().zip(&pa).zip(&pb) {
                *s += x * y;
            }
        }
        Ok(self.spectrum_from_padded(acc))
    }

    pub fn product(&self, a: &FieldSpectrum, b: &FieldSpectrum) -> Result<FieldSpectrum> {
        self.sum_of_products(&[(a, b)])
    }

    /// Dealiased advection term `u·∇θ` from spectra of `u` and `θ`.
    pub fn advection(&self, u: &[FieldSpectrum], theta: &FieldSpectrum) -> Result<FieldSpectrum> {
        if u.len() != self.grid.dim {
            return Err(Error::LatticeMismatch(format!(
                "drift has {} components on a {}-d grid",
                u.len(),
                self.grid.dim
            )));
        }
        let grads: Vec<FieldSpectrum> = (0..self.grid.dim).map(|a| theta.derivative(a)).collect();
        let pairs: Vec<(&FieldSpectrum, &FieldSpectrum)> = u.iter().zip(grads.iter()).collect();
        self.sum_of_products(&pairs)
    }

    /// Padded physical samples of the velocity components, for repeated use
    /// with [`Dealiaser::advection_padded`].
    pub fn pad_velocity(&self, u: &[FieldSpectrum]) -> Result<Vec<Vec<f64>>> {
        if u.len() != self.grid.dim {
            return Err(Error::LatticeMismatch(format!(
                "drift has {} components on a {}-d grid",
                u.len(),
                self.grid.dim
            )));
        }
        for c in u {
            self.grid.check_same(&c.grid)?;
        }
        Ok(if u.len() == 2 {
            let (a, b) = self.padded_pair_physical(&u[0], &u[1]);
            vec![a, b]
        } else {
            vec![
                self.padded_pair_physical(&u[0], &FieldSpectrum::zeros(self.grid))
                    .0,
            ]
        })
    }

    /// `P_N(c u·∇θ)` with `u` already padded.
    pub fn advection_padded(
        &self,
        u: &[Vec<f64>],
        c: f64,
        theta: &FieldSpectrum,
    ) -> Result<FieldSpectrum> {
        self.grid.check_same(&theta.grid)?;
        let (g0, g1) = if self.grid.dim == 2 {
            self.padded_pair_physical(&theta.derivative(0), &theta.derivative(1))
        } else {
            self.padded_pair_physical(&theta.derivative(0), &FieldSpectrum::zeros(self.grid))
        };
        let acc: Vec<f64> = if self.grid.dim == 2 {
            u[0].iter()
                .zip(&u[1])
                .zip(g0.iter().zip(&g1))
                .map(|((a, b), (x, y))| c * (a * x + b * y))
                .collect()
        } else {
            u[0].iter().zip(&g0).map(|(a, x)| c * a * x).collect()
        };
        Ok(self.spectrum_from_padded(acc))
    }
}
