use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

/// What a fractional power does with the `k = 0` coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroMode {
    Annihilate,
    Keep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Fourier multipliers `g_hat(k) -> sigma(k) g_hat(k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multiplier {
    /// `|k|^s`. The zero mode is always annihilated for `s != 0`; for `s = 0`
    /// the policy decides between identity and mean removal.
    FractionalPower { s: f64, zero_mode: ZeroMode },
    /// `i k1 / |k|^alpha`, i.e. `d1 |D|^{-alpha}`.
    ModifiedRiesz { alpha: f64 },
    /// `i k1 / |k|`.
    Riesz,
    /// `i k_j`.
    Derivative { axis: Axis },
}

impl Multiplier {
    /// `|D|^s` with the default zero-mode policy: kept for `s >= 0`, annihilated otherwise.
    pub fn power(s: f64) -> Self {
        let zero_mode = if s < 0.0 {
            ZeroMode::Annihilate
        } else {
            ZeroMode::Keep
        };
        Multiplier::FractionalPower { s, zero_mode }
    }

    pub fn riesz_alpha(alpha: f64) -> Self {
        Multiplier::ModifiedRiesz { alpha }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Multiplier::FractionalPower { s, zero_mode } => {
                if !s.is_finite() {
                    return Err(Error::InvalidMultiplier(format!("power s = {s} is not finite")));
                }
                if s < 0.0 && zero_mode == ZeroMode::Keep {
                    return Err(Error::InvalidMultiplier(format!(
                        "negative power s = {s} must annihilate the zero mode"
                    )));
                }
            }
            Multiplier::ModifiedRiesz { alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::InvalidMultiplier(format!("alpha = {alpha} is not finite")));
                }
            }
            Multiplier::Riesz | Multiplier::Derivative { .. } => {}
        }
        Ok(())
    }

    /// Symbol at the mode stored at `idx`. Odd symbols vanish on Nyquist lines.
    pub fn symbol(&self, grid: &Grid, idx: usize) -> Complex64 {
        let (i1, i2) = grid.split(idx);
        let m2 = grid.modulus_sq(idx);
        match *self {
            Multiplier::FractionalPower { s, zero_mode } => {
                if m2 == 0 {
                    let keep = s == 0.0 && zero_mode == ZeroMode::Keep;
                    Complex64::new(if keep { 1.0 } else { 0.0 }, 0.0)
                } else if s == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new((m2 as f64).sqrt().powf(s), 0.0)
                }
            }
            Multiplier::ModifiedRiesz { alpha } => {
                if m2 == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                let m = (m2 as f64).sqrt();
                Complex64::new(0.0, grid.odd_wavenumber(i1) / m.powf(alpha))
            }
            Multiplier::Riesz => {
                if m2 == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(0.0, grid.odd_wavenumber(i1) / (m2 as f64).sqrt())
            }
            Multiplier::Derivative { axis } => {
                let k = match axis {
                    Axis::X1 => grid.odd_wavenumber(i1),
                    Axis::X2 => grid.odd_wavenumber(i2),
                };
                Complex64::new(0.0, k)
            }
        }
    }

    pub fn table(&self, grid: &Grid) -> Result<Vec<Complex64>> {
        self.validate()?;
        Ok((0..grid.len()).map(|idx| self.symbol(grid, idx)).collect())
    }

    /// Applies the symbol to a conjugate-symmetric spectrum.
    pub fn apply(&self, g: &SpectralField) -> Result<SpectralField> {
        self.validate()?;
        let defect = g.conjugate_defect();
        if defect > 1e-12 * g.max_abs_coeff() {
            return Err(Error::NotHermitian { defect });
        }
        let grid = g.grid();
        let coeffs = g
            .coeffs()
            .iter()
            .enumerate()
            .map(|(idx, c)| self.symbol(&grid, idx) * c)
            .collect();
        let out = SpectralField::from_raw(grid, coeffs);
        debug_assert!(out.conjugate_defect() <= 1e-12 * out.max_abs_coeff().max(1e-300));
        Ok(out)
    }
}

/// Multiplies a spectrum by a precomputed complex symbol table.
pub fn apply_table(g: &SpectralField, table: &[Complex64]) -> SpectralField {
    debug_assert_eq!(table.len(), g.coeffs().len());
    SpectralField::from_raw(
        g.grid(),
        g.coeffs().iter().zip(table).map(|(c, s)| c * s).collect(),
    )
}
