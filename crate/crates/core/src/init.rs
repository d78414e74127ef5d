//! Initial data library: Taylor-Green vortices, single modes and seeded
//! band-limited random fields.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::{Grid, RealField, SpectralField};

/// Vorticity of the Taylor-Green cell with stream function `a cos x1 cos x2`.
pub fn taylor_green_vorticity(grid: Grid, a: f64) -> RealField {
    RealField::from_fn(grid, |x1, x2| -2.0 * a * x1.cos() * x2.cos()).expect("finite")
}

/// `(u1, u2) = grad^perp (a cos x1 cos x2)`.
pub fn taylor_green_velocity(grid: Grid, a: f64) -> (RealField, RealField) {
    let u1 = RealField::from_fn(grid, |x1, x2| a * x1.cos() * x2.sin()).expect("finite");
    let u2 = RealField::from_fn(grid, |x1, x2| -a * x1.sin() * x2.cos()).expect("finite");
    (u1, u2)
}

/// `amp cos(k1 x1 + k2 x2 + phase)`.
pub fn single_mode(grid: Grid, k1: i64, k2: i64, amp: f64, phase: f64) -> RealField {
    RealField::from_fn(grid, |x1, x2| {
        amp * (k1 as f64 * x1 + k2 as f64 * x2 + phase).cos()
    })
    .expect("finite")
}

/// Seeded mean-free field with spectrum `|k|^{-2}` on `0 < |k| <= kmax`,
/// normalized to `L^2` norm `l2`.
///
/// Draws are made in a fixed wavevector order that does not depend on the
/// grid, so the same `(kmax, seed)` gives the same function on every grid
/// that resolves it.
pub fn random_band_limited(grid: Grid, kmax: usize, l2: f64, seed: u64) -> Result<RealField> {
    Ok(random_band_limited_hat(grid, kmax, l2, seed)?.inverse())
}

pub fn random_band_limited_hat(
    grid: Grid,
    kmax: usize,
    l2: f64,
    seed: u64,
) -> Result<SpectralField> {
    if kmax == 0 {
        return Err(Error::Degenerate("band limit kmax must be positive".into()));
    }
    if !(l2.is_finite() && l2 >= 0.0) {
        return Err(Error::param("l2", l2, "must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let km = kmax as i64;
    let half = (grid.n() / 2) as i64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k1 in 0..=km {
        for k2 in -km..=km {
            let m2 = k1 * k1 + k2 * k2;
            if m2 == 0 || m2 > km * km || (k1 == 0 && k2 < 0) {
                continue;
            }
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if k1 >= half || k2.abs() >= half {
                continue;
            }
            let c = Complex64::new(re, im) / m2 as f64;
            let idx = grid.mode_index(k1, k2);
            coeffs[idx] = c;
            coeffs[grid.conjugate_index(idx)] = c.conj();
        }
    }
    let g = SpectralField::new(grid, coeffs)?;
    let norm = g.l2_norm();
    if norm == 0.0 {
        return Ok(g);
    }
    Ok(g.scale(l2 / norm))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    TaylorGreen,
    TaylorGreenPlusMode,
    Random,
    SingleMode,
    Zero,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::TaylorGreen,
        Preset::TaylorGreenPlusMode,
        Preset::Random,
        Preset::SingleMode,
        Preset::Zero,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::TaylorGreen => "taylor-green",
            Preset::TaylorGreenPlusMode => "taylor-green-plus-mode",
            Preset::Random => "random",
            Preset::SingleMode => "single-mode",
            Preset::Zero => "zero",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Knobs shared by the presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetParams {
    pub seed: u64,
    /// Band limit for random data; `None` means `n / 8`.
    pub kmax: Option<usize>,
    pub omega_amp: f64,
    pub theta_amp: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            seed: 0,
            kmax: None,
            omega_amp: 1.0,
            theta_amp: 1.0,
        }
    }
}

/// Vorticity and temperature at `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub omega: RealField,
    pub theta: RealField,
}

pub fn build(preset: Preset, grid: Grid, p: &PresetParams) -> Result<InitialData> {
    let kmax = p.kmax.unwrap_or(grid.n() / 8).max(1);
    let data = match preset {
        Preset::TaylorGreen => InitialData {
            omega: taylor_green_vorticity(grid, p.omega_amp),
            theta: RealField::zeros(grid),
        },
        Preset::TaylorGreenPlusMode => InitialData {
            omega: taylor_green_vorticity(grid, p.omega_amp),
            theta: single_mode(grid, 2, 1, p.theta_amp, 0.0),
        },
        Preset::Random => InitialData {
            omega: random_band_limited(grid, kmax, p.omega_amp, p.seed)?,
            theta: random_band_limited(grid, kmax, p.theta_amp, p.seed.wrapping_add(1 << 32))?,
        },
        Preset::SingleMode => InitialData {
            omega: single_mode(grid, 1, 1, p.omega_amp, 0.0),
            theta: single_mode(grid, 1, 0, p.theta_amp, 0.0),
        },
        Preset::Zero => InitialData {
            omega: RealField::zeros(grid),
            theta: RealField::zeros(grid),
        },
    };
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{biot_savart, inverse_pair};

    #[test]
    fn random_field_is_normalized_mean_free_and_real() {
        let g = Grid::new(64).unwrap();
        let h = random_band_limited_hat(g, 8, 0.7, 5).unwrap();
        assert!((h.l2_norm() - 0.7).abs() < 1e-14);
        assert_eq!(h.mean(), 0.0);
        assert!(h.is_conjugate_symmetric(0.0));
        for idx in 0..g.len() {
            if g.modulus_sq(idx) > 64 {
                assert_eq!(h.coeffs()[idx].norm(), 0.0);
            }
        }
    }

    #[test]
    fn random_field_is_grid_independent() {
        let a = random_band_limited_hat(Grid::new(64).unwrap(), 8, 1.0, 9).unwrap();
        let b = random_band_limited_hat(Grid::new(256).unwrap(), 8, 1.0, 9).unwrap();
        for k1 in -8..=8 {
            for k2 in -8..=8 {
                assert_eq!(a.mode(k1, k2), b.mode(k1, k2));
            }
        }
    }

    #[test]
    fn taylor_green_velocity_matches_biot_savart() {
        let g = Grid::new(32).unwrap();
        let w = taylor_green_vorticity(g, 1.3).forward().unwrap();
        let (h1, h2) = biot_savart(&w);
        let (u1, u2) = inverse_pair(&h1, &h2).unwrap();
        let (v1, v2) = taylor_green_velocity(g, 1.3);
        assert!(u1.sub(&v1).unwrap().max_abs() < 1e-12);
        assert!(u2.sub(&v2).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn presets_parse() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("vortex".parse::<Preset>().is_err());
    }
}
