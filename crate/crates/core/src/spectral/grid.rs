use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on the torus `[0, 2pi)^2` with `n` nodes per axis.
///
/// Node `(i1, i2)` sits at `x = (2pi i1 / n, 2pi i2 / n)` and is stored at
/// linear index `i1 * n + i2`. Fourier coefficients use the same layout, with
/// index `i` on an axis carrying the integer wavenumber `i` for `i <= n/2` and
/// `i - n` otherwise, so each axis spans `-n/2+1 ..= n/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub const PERIOD: f64 = 2.0 * PI;

    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid { n });
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes (and of Fourier modes).
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        Self::PERIOD / self.n as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        Self::PERIOD * i as f64 / self.n as f64
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n + i2
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.n, idx % self.n)
    }

    /// Signed integer wavenumber carried by axis index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(self.n, i)
    }

    /// Wavenumber used by odd symbols (`i k_j`). The Nyquist index is its own
    /// conjugate partner, so odd symbols annihilate it to keep real data real.
    #[inline]
    pub fn odd_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i) as f64
        }
    }

    /// `wavenumber(i)` for every axis index.
    pub fn axis_wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// `odd_wavenumber(i)` for every axis index.
    pub fn odd_axis(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.odd_wavenumber(i)).collect()
    }

    /// Axis index holding wavenumber `k` (taken modulo `n`).
    #[inline]
    pub fn axis_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    #[inline]
    pub fn mode_index(&self, k1: i64, k2: i64) -> usize {
        self.index(self.axis_index(k1), self.axis_index(k2))
    }

    /// Index of the mode `-k` for the mode stored at `idx`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (i1, i2) = self.split(idx);
        self.index((self.n - i1) % self.n, (self.n - i2) % self.n)
    }

    /// `|k|^2` as an exact integer.
    #[inline]
    pub fn modulus_sq(&self, idx: usize) -> i64 {
        let (i1, i2) = self.split(idx);
        let (k1, k2) = (self.wavenumber(i1), self.wavenumber(i2));
        k1 * k1 + k2 * k2
    }

    #[inline]
    pub fn modulus(&self, idx: usize) -> f64 {
        (self.modulus_sq(idx) as f64).sqrt()
    }

    /// `(k1, k2)` at linear index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        let (i1, i2) = self.split(idx);
        (self.wavenumber(i1), self.wavenumber(i2))
    }

    /// Largest lattice modulus, attained at the `(n/2, n/2)` corner.
    pub fn max_modulus(&self) -> f64 {
        std::f64::consts::SQRT_2 * (self.n / 2) as f64
    }

    /// Per-mode `|k|^s`, with the zero mode set to 0.
    pub fn modulus_powers(&self, s: f64) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let m2 = self.modulus_sq(idx);
                if m2 == 0 {
                    0.0
                } else {
                    (m2 as f64).sqrt().powf(s)
                }
            })
            .collect()
    }
}

#[inline]
pub(crate) fn wavenumber(n: usize, i: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(4).is_err());
        assert!(Grid::new(12).is_err());
        assert!(Grid::new(0).is_err());
        assert!(Grid::new(8).is_ok());
        assert!(Grid::new(1024).is_ok());
    }

    #[test]
    fn wavenumber_range() {
        let g = Grid::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.odd_wavenumber(4), 0.0);
        assert_eq!(g.axis_index(-3), 5);
    }

    #[test]
    fn modulus_is_exact_on_lattice() {
        let g = Grid::new(16).unwrap();
        let idx = g.mode_index(3, -4);
        assert_eq!(g.modulus(idx), 5.0);
        assert_eq!(g.conjugate_index(idx), g.mode_index(-3, 4));
    }
}
