use num_complex::Complex64;

use super::fft;
use super::field::{forward_pair, inverse_pair, same_grid, RealField, SpectralField};
use super::grid::Grid;
use crate::error::Result;

/// Rounds to 43 significant bits (Veltkamp split), so that the product with
/// any wavenumber of magnitude below 2^10 is exact.
#[inline]
fn round43(x: f64) -> f64 {
    const SPLIT: f64 = 1025.0;
    let c = SPLIT * x;
    c - (c - x)
}

/// Velocity from vorticity, `u_hat = i (k2, -k1) / |k|^2 * omega_hat`.
///
/// This orientation gives `d1 u2 - d2 u1 = omega` and `u = grad^perp psi` with
/// `Delta psi = omega`. The potential `omega_hat / |k|^2` is rounded so the
/// symbolic divergence `i k . u_hat` cancels exactly in floating point.
pub fn biot_savart(omega_hat: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = omega_hat.grid();
    let n = grid.n();
    assert!(n <= 1024, "exact-divergence rounding assumes n <= 1024");
    let ks = grid.axis_wavenumbers();
    let odd = grid.odd_axis();
    let mut u1 = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut u2 = vec![Complex64::new(0.0, 0.0); grid.len()];
    let w = omega_hat.coeffs();
    for i1 in 0..n {
        for i2 in 0..n {
            let idx = i1 * n + i2;
            let m2 = ks[i1] * ks[i1] + ks[i2] * ks[i2];
            if m2 == 0 {
                continue;
            }
            let (k1, k2) = (odd[i1], odd[i2]);
            let inv = 1.0 / m2 as f64;
            let a = Complex64::new(round43(w[idx].re * inv), round43(w[idx].im * inv));
            // i * (k2 a) and i * (-k1 a), written out so each product rounds once.
            u1[idx] = Complex64::new(-(k2 * a.im), k2 * a.re);
            u2[idx] = Complex64::new(k1 * a.im, -(k1 * a.re));
        }
    }
    (
        SpectralField::from_raw(grid, u1),
        SpectralField::from_raw(grid, u2),
    )
}

/// Applies `f(k1, k2, a, b)` over the odd-symbol wavevectors of two spectra.
fn zip_modes(
    a: &SpectralField,
    b: &SpectralField,
    f: impl Fn(f64, f64, Complex64, Complex64) -> Complex64,
) -> SpectralField {
    let grid = a.grid();
    let n = grid.n();
    let odd = grid.odd_axis();
    let (ca, cb) = (a.coeffs(), b.coeffs());
    let mut out = Vec::with_capacity(grid.len());
    for i1 in 0..n {
        for i2 in 0..n {
            let idx = i1 * n + i2;
            out.push(f(odd[i1], odd[i2], ca[idx], cb[idx]));
        }
    }
    SpectralField::from_raw(grid, out)
}

/// `max_k |i k . u_hat(k)|`, evaluated with the odd-symbol wavenumbers.
pub fn divergence_defect(u1: &SpectralField, u2: &SpectralField) -> Result<f64> {
    same_grid(u1.grid(), u2.grid())?;
    let grid = u1.grid();
    let n = grid.n();
    let odd = grid.odd_axis();
    let (c1, c2) = (u1.coeffs(), u2.coeffs());
    let mut worst = 0.0_f64;
    for i1 in 0..n {
        let k1 = odd[i1];
        for i2 in 0..n {
            let k2 = odd[i2];
            let (a, b) = (c1[i1 * n + i2], c2[i1 * n + i2]);
            let d = Complex64::new(-(k1 * a.im), k1 * a.re) + Complex64::new(-(k2 * b.im), k2 * b.re);
            worst = worst.max(d.norm_sqr());
        }
    }
    Ok(worst.sqrt())
}

/// Symbolic curl `i k1 u2_hat - i k2 u1_hat`.
pub fn curl(u1: &SpectralField, u2: &SpectralField) -> Result<SpectralField> {
    same_grid(u1.grid(), u2.grid())?;
    Ok(zip_modes(u1, u2, |k1, k2, a, b| {
        Complex64::new(0.0, k1) * b - Complex64::new(0.0, k2) * a
    }))
}

/// Symbolic divergence `i k1 a_hat + i k2 b_hat`.
pub fn divergence(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    same_grid(a.grid(), b.grid())?;
    Ok(zip_modes(a, b, |k1, k2, a, b| {
        Complex64::new(0.0, k1) * a + Complex64::new(0.0, k2) * b
    }))
}

/// Spectral gradient `(i k1 f_hat, i k2 f_hat)`.
pub fn gradient(f: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = f.grid();
    let n = grid.n();
    let odd = grid.odd_axis();
    let c = f.coeffs();
    let mut d1 = Vec::with_capacity(grid.len());
    let mut d2 = Vec::with_capacity(grid.len());
    for i1 in 0..n {
        for i2 in 0..n {
            let v = c[i1 * n + i2];
            d1.push(Complex64::new(-odd[i1] * v.im, odd[i1] * v.re));
            d2.push(Complex64::new(-odd[i2] * v.im, odd[i2] * v.re));
        }
    }
    (
        SpectralField::from_raw(grid, d1),
        SpectralField::from_raw(grid, d2),
    )
}

/// Two-thirds rule: keep a mode iff `3 max(|k1|, |k2|) <= n`.
#[inline]
pub fn dealias_keeps(grid: &Grid, idx: usize) -> bool {
    let (k1, k2) = grid.wavevector(idx);
    3 * k1.abs().max(k2.abs()) <= grid.n() as i64
}

/// 0/1 weights of the two-thirds rule.
pub fn dealias_mask(grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| if dealias_keeps(grid, idx) { 1.0 } else { 0.0 })
        .collect()
}

pub fn dealias(g: &SpectralField) -> SpectralField {
    let grid = g.grid();
    g.map_weights(|idx| if dealias_keeps(&grid, idx) { 1.0 } else { 0.0 })
}

/// `u . grad f` for fields given by their spectra, optionally two-thirds dealiased.
pub fn advect_hat(
    u1: &SpectralField,
    u2: &SpectralField,
    f: &SpectralField,
    dealiased: bool,
) -> Result<SpectralField> {
    Ok(advect_many(u1, u2, &[f], dealiased)?.pop().expect("one output"))
}

/// `u . grad f_j` for several scalars sharing one velocity.
pub fn advect_many(
    u1: &SpectralField,
    u2: &SpectralField,
    fs: &[&SpectralField],
    dealiased: bool,
) -> Result<Vec<SpectralField>> {
    same_grid(u1.grid(), u2.grid())?;
    for f in fs {
        same_grid(u1.grid(), f.grid())?;
    }
    let grid = u1.grid();
    let filter = |g: &SpectralField| if dealiased { dealias(g) } else { g.clone() };
    let (v1, v2) = inverse_pair(&filter(u1), &filter(u2))?;
    let mut out = Vec::with_capacity(fs.len());
    for f in fs {
        let (d1, d2) = gradient(&filter(f));
        let (g1, g2) = inverse_pair(&d1, &d2)?;
        let prod: Vec<f64> = (0..grid.len())
            .map(|j| v1.values()[j] * g1.values()[j] + v2.values()[j] * g2.values()[j])
            .collect();
        let h = RealField::new(grid, prod)?.forward()?;
        out.push(filter(&h));
    }
    Ok(out)
}

/// Physical-space `u1 d1 f + u2 d2 f` with spectral derivatives.
pub fn advect(u1: &RealField, u2: &RealField, f: &RealField, dealiased: bool) -> Result<RealField> {
    same_grid(u1.grid(), u2.grid())?;
    same_grid(u1.grid(), f.grid())?;
    let (h1, h2) = forward_pair(u1, u2)?;
    Ok(advect_hat(&h1, &h2, &f.forward()?, dealiased)?.inverse())
}

/// Physical samples of a spectrum on a finer `m x m` grid. Modes on the
/// Nyquist lines of the coarse grid are dropped.
pub fn to_padded(g: &SpectralField, m: usize) -> Vec<f64> {
    let grid = g.grid();
    let n = grid.n();
    assert!(m >= n, "padded size must not shrink the grid");
    let half = (n / 2) as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    for (idx, c) in g.coeffs().iter().enumerate() {
        let (k1, k2) = grid.wavevector(idx);
        if k1 == half || k2 == half {
            continue;
        }
        let j1 = k1.rem_euclid(m as i64) as usize;
        let j2 = k2.rem_euclid(m as i64) as usize;
        buf[j1 * m + j2] = *c;
    }
    fft::inverse_2d(m, &mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Spectrum of padded physical samples, truncated to `grid` (Nyquist lines zeroed).
pub fn from_padded(values: &[f64], m: usize, grid: Grid) -> SpectralField {
    let spec = fft::forward_real(m, values);
    let scale = 1.0 / (m * m) as f64;
    let half = (grid.n() / 2) as i64;
    let coeffs = (0..grid.len())
        .map(|idx| {
            let (k1, k2) = grid.wavevector(idx);
            if k1 == half || k2 == half {
                return Complex64::new(0.0, 0.0);
            }
            let j1 = k1.rem_euclid(m as i64) as usize;
            let j2 = k2.rem_euclid(m as i64) as usize;
            spec[j1 * m + j2] * scale
        })
        .collect();
    SpectralField::from_raw(grid, coeffs)
}

/// Size of the three-halves padded grid.
pub fn three_halves(n: usize) -> usize {
    3 * n / 2
}

/// Product `a b` computed on the `3n/2` grid, exact for inputs without
/// Nyquist content.
pub fn padded_product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    same_grid(a.grid(), b.grid())?;
    let grid = a.grid();
    let m = three_halves(grid.n());
    let pa = to_padded(a, m);
    let pb = to_padded(b, m);
    let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    Ok(from_padded(&prod, m, grid))
}

/// Drops the Nyquist lines, the part of a spectrum the padded products ignore.
pub fn strip_nyquist(g: &SpectralField) -> SpectralField {
    let grid = g.grid();
    let half = (grid.n() / 2) as i64;
    g.map_weights(|idx| {
        let (k1, k2) = grid.wavevector(idx);
        if k1 == half || k2 == half {
            0.0
        } else {
            1.0
        }
    })
}
