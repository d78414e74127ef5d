use num_complex::Complex64;

use super::fft;
use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Real samples at the `n x n` physical nodes, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier coefficients `g_hat(k)` with `g(x) = sum_k g_hat(k) e^{i k.x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

pub(crate) fn check_finite(grid: Grid, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(idx) => {
            let (i1, i2) = grid.split(idx);
            Err(Error::NonFinite {
                i1,
                i2,
                value: values[idx],
            })
        }
    }
}

pub(crate) fn same_grid(a: Grid, b: Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch {
            left: a.n(),
            right: b.n(),
        })
    }
}

/// `(mean |v|^p)^{1/p}`, or `max |v|` for `p = inf`.
pub(crate) fn lp_of_slice(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    }
    let len = values.len() as f64;
    if p == 2.0 {
        return (values.iter().map(|v| v * v).sum::<f64>() / len).sqrt();
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum::<f64>() / len;
    }
    // Scale by the max first so large p does not overflow.
    let m = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * (s / len).powf(1.0 / p)
}

pub(crate) fn check_exponent(name: &'static str, p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::param(name, p, "must lie in [1, inf]"));
    }
    Ok(())
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.n(),
                right: (values.len() as f64).sqrt() as usize,
            });
        }
        check_finite(grid, &values)?;
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    /// Samples `f(x1, x2)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..n {
            let x1 = grid.coord(i1);
            for i2 in 0..n {
                values.push(f(x1, grid.coord(i2)));
            }
        }
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `L^p` norm under the normalized measure; `p = inf` gives the grid max.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent("p", p)?;
        Ok(lp_of_slice(&self.values, p))
    }

    pub fn max_abs(&self) -> f64 {
        lp_of_slice(&self.values, f64::INFINITY)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_grid(self.grid, other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn forward(&self) -> Result<SpectralField> {
        forward_transform(self)
    }
}

/// Pointwise Euclidean `L^p` norm of a vector field.
pub fn lp_norm_vec(components: &[&RealField], p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    let Some(first) = components.first() else {
        return Ok(0.0);
    };
    for c in components {
        same_grid(first.grid, c.grid)?;
    }
    let mags: Vec<f64> = (0..first.grid.len())
        .map(|j| {
            components
                .iter()
                .map(|c| c.values[j] * c.values[j])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(lp_of_slice(&mags, p))
}

pub fn forward_transform(f: &RealField) -> Result<SpectralField> {
    check_finite(f.grid, &f.values)?;
    let n = f.grid.n();
    let scale = 1.0 / f.grid.len() as f64;
    let mut coeffs = fft::forward_real(n, &f.values);
    for c in &mut coeffs {
        *c *= scale;
    }
    Ok(SpectralField {
        grid: f.grid,
        coeffs,
    })
}

/// Forward transform of two fields sharing a grid, in one complex FFT.
pub fn forward_pair(a: &RealField, b: &RealField) -> Result<(SpectralField, SpectralField)> {
    same_grid(a.grid, b.grid)?;
    check_finite(a.grid, &a.values)?;
    check_finite(b.grid, &b.values)?;
    let grid = a.grid;
    let scale = 1.0 / grid.len() as f64;
    let (mut fa, mut fb) = fft::forward_pair(grid.n(), &a.values, &b.values);
    for c in fa.iter_mut().chain(fb.iter_mut()) {
        *c *= scale;
    }
    Ok((
        SpectralField::from_raw(grid, fa),
        SpectralField::from_raw(grid, fb),
    ))
}

pub fn inverse_transform(g: &SpectralField) -> RealField {
    RealField::from_raw(g.grid, fft::inverse_real(g.grid.n(), &g.coeffs))
}

/// Inverse transform of two Hermitian spectra in one complex FFT.
pub fn inverse_pair(a: &SpectralField, b: &SpectralField) -> Result<(RealField, RealField)> {
    same_grid(a.grid, b.grid)?;
    let (ra, rb) = fft::inverse_pair(a.grid.n(), &a.coeffs, &b.coeffs);
    Ok((RealField::from_raw(a.grid, ra), RealField::from_raw(a.grid, rb)))
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(grid, vec![ZERO; grid.len()])
    }

    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.n(),
                right: (coeffs.len() as f64).sqrt() as usize,
            });
        }
        if let Some(idx) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            let (i1, i2) = grid.split(idx);
            return Err(Error::NonFinite {
                i1,
                i2,
                value: coeffs[idx].norm(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    /// The real field `amp * cos(k.x + phase)`.
    pub fn cosine_mode(grid: Grid, k1: i64, k2: i64, amp: f64, phase: f64) -> Self {
        let mut g = Self::zeros(grid);
        let c = Complex64::from_polar(0.5 * amp, phase);
        let idx = grid.mode_index(k1, k2);
        let cdx = grid.conjugate_index(idx);
        if idx == cdx {
            g.coeffs[idx] += Complex64::new(amp * phase.cos(), 0.0);
        } else {
            g.coeffs[idx] += c;
            g.coeffs[cdx] += c.conj();
        }
        g
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn mode(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[self.grid.mode_index(k1, k2)]
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn without_mean(&self) -> Self {
        let mut g = self.clone();
        g.coeffs[0] = ZERO;
        g
    }

    /// `sum_k |g_hat(k)|^2`, which equals the mean of `g^2` for real data.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `L^2` norm through Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.norm_sqr()))
            .sqrt()
    }

    /// Largest `|g_hat(-k) - conj(g_hat(k))|`.
    pub fn conjugate_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|idx| (self.coeffs[self.grid.conjugate_index(idx)] - self.coeffs[idx].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        self.conjugate_defect() <= tol * self.max_abs_coeff().max(f64::MIN_POSITIVE)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(self.grid, self.coeffs.iter().map(|z| z * c).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_grid(self.grid, other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_grid(self.grid, other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Multiplies each coefficient by `weight(idx)`.
    pub fn map_weights(&self, weight: impl Fn(usize) -> f64) -> Self {
        Self::from_raw(
            self.grid,
            self.coeffs.iter().enumerate().map(|(i, c)| c * weight(i)).collect(),
        )
    }

    /// Multiplies by a precomputed real per-mode weight table.
    pub fn mul_table(&self, table: &[f64]) -> Self {
        debug_assert_eq!(table.len(), self.coeffs.len());
        Self::from_raw(
            self.grid,
            self.coeffs.iter().zip(table).map(|(c, w)| c * w).collect(),
        )
    }

    pub fn inverse(&self) -> RealField {
        inverse_transform(self)
    }
}
