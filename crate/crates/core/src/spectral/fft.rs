//! Square 2D complex FFTs with a process-wide plan cache.
//!
//! All transforms here are unnormalized; scaling lives in the callers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Plan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(n: usize) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn transpose(n: usize, data: &mut [Complex64]) {
    const TILE: usize = 16;
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + TILE).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

fn run(n: usize, data: &mut [Complex64], inverse: bool) {
    assert_eq!(data.len(), n * n, "buffer is not n x n");
    let p = plan(n);
    debug_assert_eq!(p.n, n);
    let fft = if inverse { &p.inverse } else { &p.forward };
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    transpose(n, data);
    fft.process_with_scratch(data, &mut scratch);
    transpose(n, data);
}

/// In-place unnormalized forward transform, `X(k) = sum_x x(x) e^{-i k.x}`.
pub fn forward_2d(n: usize, data: &mut [Complex64]) {
    run(n, data, false);
}

/// In-place unnormalized inverse transform, `x(x) = sum_k X(k) e^{i k.x}`.
pub fn inverse_2d(n: usize, data: &mut [Complex64]) {
    run(n, data, true);
}

/// Inverse transform of two Hermitian spectra at once.
///
/// Both inputs must be conjugate-symmetric; the outputs are their real
/// synthesis on the `n x n` grid.
pub fn inverse_pair(n: usize, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
    inverse_2d(n, &mut buf);
    buf.iter().map(|z| (z.re, z.im)).unzip()
}

/// Unnormalized inverse of a single Hermitian spectrum.
pub fn inverse_real(n: usize, a: &[Complex64]) -> Vec<f64> {
    let mut buf = a.to_vec();
    inverse_2d(n, &mut buf);
    buf.iter().map(|z| z.re).collect()
}

/// Unnormalized forward transform of two real arrays at once.
pub fn forward_pair(n: usize, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut buf: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| Complex64::new(x, y))
        .collect();
    forward_2d(n, &mut buf);
    let mut fa = vec![Complex64::new(0.0, 0.0); n * n];
    let mut fb = vec![Complex64::new(0.0, 0.0); n * n];
    for i1 in 0..n {
        let c1 = (n - i1) % n;
        for i2 in 0..n {
            let c2 = (n - i2) % n;
            let z = buf[i1 * n + i2];
            let zc = buf[c1 * n + c2].conj();
            fa[i1 * n + i2] = (z + zc) * 0.5;
            fb[i1 * n + i2] = Complex64::new(0.0, -0.5) * (z - zc);
        }
    }
    (fa, fb)
}

/// Unnormalized forward transform of a single real array.
pub fn forward_real(n: usize, a: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_2d(n, &mut buf);
    buf
}
