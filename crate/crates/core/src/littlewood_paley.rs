//! Dyadic partition of unity, Littlewood-Paley blocks, Besov norms, Bony's
//! paraproduct decomposition and Bernstein ratios on the periodic lattice.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    check_exponent, from_padded, inverse_pair, lp_of_slice, same_grid, three_halves, to_padded,
    Grid, Multiplier, RealField, SpectralField,
};

const FOUR_THIRDS: f64 = 4.0 / 3.0;

/// Lowest block index; `Delta_{-1} = chi(D)`.
pub const Q_MIN: i32 = -1;

#[derive(Debug)]
struct Block {
    q: i32,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug)]
struct BlockTable {
    blocks: Vec<Block>,
}

/// The radial pair `(chi, phi)` with `phi(t) = chi(t/2) - chi(t)`.
///
/// `chi` equals 1 on `[0, 1]`, 0 on `[4/3, inf)` and is glued smoothly in
/// between from `h(s) = exp(-steepness / s)`.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    steepness: f64,
    cache: Arc<Mutex<HashMap<usize, Arc<BlockTable>>>>,
}

impl Default for DyadicPartition {
    fn default() -> Self {
        Self::new(1.0).expect("unit steepness is valid")
    }
}

impl DyadicPartition {
    pub fn new(steepness: f64) -> Result<Self> {
        if !(steepness.is_finite() && steepness > 0.0) {
            return Err(Error::param("steepness", steepness, "must be positive"));
        }
        Ok(Self {
            steepness,
            cache: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    pub fn steepness(&self) -> f64 {
        self.steepness
    }

    fn h(&self, s: f64) -> f64 {
        if s > 0.0 {
            (-self.steepness / s).exp()
        } else {
            0.0
        }
    }

    pub fn chi(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= FOUR_THIRDS {
            0.0
        } else {
            let s = (FOUR_THIRDS - t) * 3.0;
            let a = self.h(s);
            a / (a + self.h(1.0 - s))
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.chi(0.5 * t) - self.chi(t)
    }

    /// Weight of block `q` at frequency modulus `r`.
    pub fn weight(&self, q: i32, r: f64) -> f64 {
        if q == Q_MIN {
            self.chi(r)
        } else {
            self.phi(r * (-(q as f64)).exp2())
        }
    }

    /// Last nonempty block: the largest `q` with `2^q` below the top modulus.
    pub fn qmax(grid: &Grid) -> i32 {
        grid.max_modulus().log2().ceil() as i32 - 1
    }

    fn table(&self, grid: &Grid) -> Arc<BlockTable> {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(grid.n())
            .or_insert_with(|| Arc::new(self.build_table(grid)))
            .clone()
    }

    fn build_table(&self, grid: &Grid) -> BlockTable {
        let qmax = Self::qmax(grid);
        let mut blocks: Vec<Block> = (Q_MIN..=qmax)
            .map(|q| Block {
                q,
                entries: Vec::new(),
            })
            .collect();
        let mut memo: HashMap<i64, Vec<(usize, f64)>> = HashMap::new();
        for idx in 0..grid.len() {
            let m2 = grid.modulus_sq(idx);
            let ws = memo.entry(m2).or_insert_with(|| {
                let r = (m2 as f64).sqrt();
                (0..blocks.len())
                    .filter_map(|b| {
                        let w = self.weight(b as i32 + Q_MIN, r);
                        (w != 0.0).then_some((b, w))
                    })
                    .collect()
            });
            for &(b, w) in ws.iter() {
                blocks[b].entries.push((idx, w));
            }
        }
        BlockTable { blocks }
    }

    /// Block indices `-1..=qmax` available on the grid.
    pub fn block_range(grid: &Grid) -> std::ops::RangeInclusive<i32> {
        Q_MIN..=Self::qmax(grid)
    }

    /// `Delta_q f`; blocks above `qmax` are empty.
    pub fn block(&self, f: &SpectralField, q: i32) -> Result<SpectralField> {
        if q < Q_MIN {
            return Err(Error::param("q", q as f64, "block index must be >= -1"));
        }
        let grid = f.grid();
        let table = self.table(&grid);
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        if let Some(b) = table.blocks.get((q - Q_MIN) as usize) {
            for &(idx, w) in &b.entries {
                out[idx] = f.coeffs()[idx] * w;
            }
        }
        SpectralField::new(grid, out)
    }

    /// `S_q f = sum_{-1 <= j <= q-1} Delta_j f`.
    pub fn low_pass(&self, f: &SpectralField, q: i32) -> Result<SpectralField> {
        if q < 0 {
            return Err(Error::param("q", q as f64, "low-pass index must be >= 0"));
        }
        let grid = f.grid();
        if q > Self::qmax(&grid) + 1 {
            return Ok(f.clone());
        }
        let table = self.table(&grid);
        let mut w = vec![0.0; grid.len()];
        for b in table.blocks.iter().filter(|b| b.q < q) {
            for &(idx, x) in &b.entries {
                w[idx] += x;
            }
        }
        Ok(f.mul_table(&w))
    }

    /// All blocks `Delta_{-1} f, ..., Delta_{qmax} f`.
    pub fn blocks(&self, f: &SpectralField) -> Vec<(i32, SpectralField)> {
        let grid = f.grid();
        Self::block_range(&grid)
            .map(|q| (q, self.block(f, q).expect("q in range")))
            .collect()
    }

    /// `max_k |chi(|k|) + sum_q phi(2^-q |k|) - 1|` over the lattice.
    pub fn partition_defect(&self, grid: &Grid) -> f64 {
        let table = self.table(grid);
        let mut sum = vec![0.0; grid.len()];
        for b in &table.blocks {
            for &(idx, w) in &b.entries {
                sum[idx] += w;
            }
        }
        sum.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Unweighted `||Delta_q f||_{L^p}` for every block of the grid.
    pub fn block_norms(&self, f: &SpectralField, p: f64) -> Result<Vec<(i32, f64)>> {
        self.block_norms_vec(&[f], p)
    }

    /// Block norms of a vector field, with the pointwise Euclidean norm.
    pub fn block_norms_vec(&self, comps: &[&SpectralField], p: f64) -> Result<Vec<(i32, f64)>> {
        check_exponent("p", p)?;
        let Some(first) = comps.first() else {
            return Ok(Vec::new());
        };
        for c in comps {
            same_grid(first.grid(), c.grid())?;
        }
        let grid = first.grid();
        let table = self.table(&grid);
        let mut out = Vec::with_capacity(table.blocks.len());
        for b in &table.blocks {
            if b.entries.is_empty() {
                out.push((b.q, 0.0));
                continue;
            }
            if p == 2.0 {
                let e: f64 = comps
                    .iter()
                    .map(|c| {
                        b.entries
                            .iter()
                            .map(|&(idx, w)| (c.coeffs()[idx] * w).norm_sqr())
                            .sum::<f64>()
                    })
                    .sum();
                out.push((b.q, e.sqrt()));
                continue;
            }
            let phys: Vec<RealField> = physical_blocks(&grid, b, comps)?;
            let mags: Vec<f64> = (0..grid.len())
                .map(|j| phys.iter().map(|f| f.values()[j].powi(2)).sum::<f64>().sqrt())
                .collect();
            out.push((b.q, lp_of_slice(&mags, p)));
        }
        Ok(out)
    }

    pub fn besov_norm(&self, f: &RealField, spec: &BesovSpec) -> Result<f64> {
        self.besov_norm_hat(&f.forward()?, spec)
    }

    pub fn besov_norm_hat(&self, f: &SpectralField, spec: &BesovSpec) -> Result<f64> {
        Ok(self.besov_report(&[f], spec)?.norm)
    }

    /// Besov norm of a vector field (pointwise Euclidean norm inside `L^p`).
    pub fn besov_norm_vec(&self, comps: &[&SpectralField], spec: &BesovSpec) -> Result<f64> {
        Ok(self.besov_report(comps, spec)?.norm)
    }

    pub fn besov_report(&self, comps: &[&SpectralField], spec: &BesovSpec) -> Result<BesovReport> {
        spec.validate()?;
        let mut mean_dropped = false;
        let owned: Vec<SpectralField>;
        let comps: Vec<&SpectralField> = if spec.homogeneous {
            mean_dropped = comps.iter().any(|c| c.coeffs()[0].norm() != 0.0);
            owned = comps.iter().map(|c| c.without_mean()).collect();
            owned.iter().collect()
        } else {
            comps.to_vec()
        };
        let blocks = self.block_norms_vec(&comps, spec.p)?;
        let weighted: Vec<f64> = blocks
            .iter()
            .map(|&(q, v)| if v == 0.0 { 0.0 } else { (spec.s * q as f64).exp2() * v })
            .collect();
        Ok(BesovReport {
            norm: lr_norm(&weighted, spec.r),
            blocks,
            mean_dropped,
        })
    }

    /// Both space-time norms of a trajectory, with the embedding between them checked.
    pub fn space_time_norms(
        &self,
        traj: &[(f64, &SpectralField)],
        spec: &BesovSpec,
        rho: f64,
    ) -> Result<SpaceTimeReport> {
        spec.validate()?;
        check_exponent("rho", rho)?;
        check_times(traj.iter().map(|s| s.0))?;
        let times: Vec<f64> = traj.iter().map(|s| s.0).collect();
        // weighted[t][q]
        let mut weighted = Vec::with_capacity(traj.len());
        for (_, f) in traj {
            let f = if spec.homogeneous {
                f.without_mean()
            } else {
                (*f).clone()
            };
            let blocks = self.block_norms(&f, spec.p)?;
            weighted.push(
                blocks
                    .iter()
                    .map(|&(q, v)| if v == 0.0 { 0.0 } else { (spec.s * q as f64).exp2() * v })
                    .collect::<Vec<f64>>(),
            );
        }
        let nb = weighted[0].len();
        let plain_series: Vec<f64> = weighted.iter().map(|w| lr_norm(w, spec.r)).collect();
        let plain = time_norm(&times, &plain_series, rho);
        let per_block: Vec<f64> = (0..nb)
            .map(|b| {
                let series: Vec<f64> = weighted.iter().map(|w| w[b]).collect();
                time_norm(&times, &series, rho)
            })
            .collect();
        let tilde = lr_norm(&per_block, spec.r);
        let report = SpaceTimeReport { tilde, plain };
        report.check_embedding(spec.r, rho)?;
        Ok(report)
    }

    pub fn space_time_norm(
        &self,
        traj: &[(f64, &SpectralField)],
        spec: &SpaceTimeSpec,
    ) -> Result<f64> {
        let r = self.space_time_norms(traj, &spec.base, spec.rho)?;
        Ok(if spec.tilde { r.tilde } else { r.plain })
    }

    /// Bony's decomposition `(T_f g, T_g f, R(f, g))`, products on the 3/2 grid.
    pub fn bony_decompose(
        &self,
        f: &SpectralField,
        g: &SpectralField,
    ) -> Result<(SpectralField, SpectralField, SpectralField)> {
        same_grid(f.grid(), g.grid())?;
        let grid = f.grid();
        let m = three_halves(grid.n());
        let fb: Vec<Vec<f64>> = self
            .blocks(f)
            .iter()
            .map(|(_, b)| to_padded(b, m))
            .collect();
        let gb: Vec<Vec<f64>> = self
            .blocks(g)
            .iter()
            .map(|(_, b)| to_padded(b, m))
            .collect();
        let len = m * m;
        let nb = fb.len();
        let mut tfg = vec![0.0; len];
        let mut tgf = vec![0.0; len];
        let mut rem = vec![0.0; len];
        // s_f holds S_{q-1} f = sum_{j <= q-2} Delta_j f for the current q.
        let mut s_f = vec![0.0; len];
        let mut s_g = vec![0.0; len];
        for b in 0..nb {
            if b >= 2 {
                for x in 0..len {
                    s_f[x] += fb[b - 2][x];
                    s_g[x] += gb[b - 2][x];
                }
            }
            for x in 0..len {
                tfg[x] += s_f[x] * gb[b][x];
                tgf[x] += s_g[x] * fb[b][x];
                let mut near = gb[b][x];
                if b > 0 {
                    near += gb[b - 1][x];
                }
                if b + 1 < nb {
                    near += gb[b + 1][x];
                }
                rem[x] += fb[b][x] * near;
            }
        }
        Ok((
            from_padded(&tfg, m, grid),
            from_padded(&tgf, m, grid),
            from_padded(&rem, m, grid),
        ))
    }

    /// `|| |D|^k Delta_q f ||_{L^b} / (2^{q (k + 2 (1/a - 1/b))} || Delta_q f ||_{L^a})`.
    pub fn bernstein_ratio(&self, f: &SpectralField, q: i32, k: f64, a: f64, b: f64) -> Result<f64> {
        check_exponent("a", a)?;
        check_exponent("b", b)?;
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::param("k", k, "derivative order must be >= 0"));
        }
        let blk = self.block(f, q)?;
        let den = blk.inverse().lp_norm(a)?;
        if den == 0.0 {
            return Err(Error::EmptyBlock { q });
        }
        let num = Multiplier::power(k).apply(&blk)?.inverse().lp_norm(b)?;
        let scale = (q as f64 * (k + 2.0 * (1.0 / a - 1.0 / b))).exp2();
        Ok(num / (scale * den))
    }
}

fn physical_blocks(grid: &Grid, b: &Block, comps: &[&SpectralField]) -> Result<Vec<RealField>> {
    let spectra: Vec<SpectralField> = comps
        .iter()
        .map(|c| {
            let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
            for &(idx, w) in &b.entries {
                out[idx] = c.coeffs()[idx] * w;
            }
            SpectralField::new(*grid, out)
        })
        .collect::<Result<_>>()?;
    let mut phys = Vec::with_capacity(spectra.len());
    let mut it = spectra.chunks(2);
    for pair in &mut it {
        match pair {
            [x, y] => {
                let (a, b) = inverse_pair(x, y)?;
                phys.push(a);
                phys.push(b);
            }
            [x] => phys.push(x.inverse()),
            _ => unreachable!(),
        }
    }
    Ok(phys)
}

/// `(sum a_q^r)^{1/r}`, or the max for `r = inf`.
pub fn lr_norm(a: &[f64], r: f64) -> f64 {
    let m = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if r.is_infinite() || m == 0.0 {
        return m;
    }
    let s: f64 = a.iter().map(|v| (v.abs() / m).powf(r)).sum();
    m * s.powf(1.0 / r)
}

/// `L^rho` norm in time by the trapezoid rule on `g^rho`; the max for `rho = inf`.
pub fn time_norm(times: &[f64], g: &[f64], rho: f64) -> f64 {
    debug_assert_eq!(times.len(), g.len());
    let m = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if rho.is_infinite() || m == 0.0 {
        return m;
    }
    let mut acc = 0.0;
    for i in 1..times.len() {
        let a = (g[i - 1].abs() / m).powf(rho);
        let b = (g[i].abs() / m).powf(rho);
        acc += 0.5 * (times[i] - times[i - 1]) * (a + b);
    }
    m * acc.powf(1.0 / rho)
}

/// Trapezoid integral of `g` over the sample times.
pub fn trapezoid(times: &[f64], g: &[f64]) -> f64 {
    (1..times.len())
        .map(|i| 0.5 * (times[i] - times[i - 1]) * (g[i - 1] + g[i]))
        .sum()
}

fn check_times(times: impl Iterator<Item = f64>) -> Result<()> {
    let ts: Vec<f64> = times.collect();
    if ts.len() < 2 {
        return Err(Error::Trajectory(format!(
            "need at least 2 time samples, got {}",
            ts.len()
        )));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Trajectory("sample times must be strictly increasing".into()));
    }
    Ok(())
}

/// `(s, p, r)` and homogeneity of a Besov norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovSpec {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub homogeneous: bool,
}

impl BesovSpec {
    pub fn new(s: f64, p: f64, r: f64) -> Self {
        Self {
            s,
            p,
            r,
            homogeneous: false,
        }
    }

    pub fn homogeneous(s: f64, p: f64, r: f64) -> Self {
        Self {
            s,
            p,
            r,
            homogeneous: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(Error::param("s", self.s, "regularity must be finite"));
        }
        check_exponent("p", self.p)?;
        check_exponent("r", self.r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BesovReport {
    pub norm: f64,
    /// `(q, ||Delta_q f||_{L^p})` before the `2^{qs}` weight.
    pub blocks: Vec<(i32, f64)>,
    /// Set when a homogeneous norm discarded a nonzero mean.
    pub mean_dropped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimeSpec {
    pub base: BesovSpec,
    pub rho: f64,
    pub tilde: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimeReport {
    /// `|| 2^{qs} ||Delta_q f||_{L^rho_T L^p} ||_{l^r}`
    pub tilde: f64,
    /// `|| ||f||_{B^s_{p,r}} ||_{L^rho_T}`
    pub plain: f64,
}

impl SpaceTimeReport {
    fn check_embedding(&self, r: f64, rho: f64) -> Result<()> {
        const TOL: f64 = 1e-12;
        let slack = TOL * self.tilde.max(self.plain);
        if r >= rho && self.tilde > self.plain + slack {
            return Err(Error::EmbeddingViolated(format!(
                "r = {r} >= rho = {rho} but tilde {} > plain {}",
                self.tilde, self.plain
            )));
        }
        if rho >= r && self.plain > self.tilde + slack {
            return Err(Error::EmbeddingViolated(format!(
                "rho = {rho} >= r = {r} but plain {} > tilde {}",
                self.plain, self.tilde
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init;
    use crate::spectral::padded_product;
    use proptest::prelude::*;

    fn lp() -> DyadicPartition {
        DyadicPartition::default()
    }

    #[test]
    fn profile_values() {
        let p = lp();
        assert_eq!(p.chi(1.0), 1.0);
        assert_eq!(p.chi(4.0 / 3.0), 0.0);
        assert_eq!(p.phi(2.0), 1.0);
        for t in [0.0, 0.5, 0.75, 1.0, 8.0 / 3.0, 3.0, 10.0] {
            assert_eq!(p.phi(t), 0.0, "phi({t})");
        }
        let mut prev = 1.0;
        for i in 0..=300 {
            let c = p.chi(1.0 + i as f64 / 900.0);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn sum_at_five_point_three() {
        let p = lp();
        let r = 5.3;
        let s: f64 = p.chi(r) + (0..=3).map(|q| p.phi(r / (1 << q) as f64)).sum::<f64>();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_telescoping() {
        let p = lp();
        for big_q in 1..=6 {
            let lo = (-(big_q as f64)).exp2() * 8.0 / 3.0;
            let hi = (big_q as f64).exp2() * 0.75;
            for i in 0..=200 {
                let r = lo + (hi - lo) * i as f64 / 200.0;
                let s: f64 = (-big_q..=big_q).map(|q| p.phi(r * (-(q as f64)).exp2())).sum();
                assert!((s - 1.0).abs() < 1e-12, "Q={big_q} r={r}");
            }
        }
    }

    #[test]
    fn partition_of_unity_on_lattices() {
        for n in [8, 64, 256, 1024] {
            let g = Grid::new(n).unwrap();
            assert!(lp().partition_defect(&g) < 1e-12);
        }
    }

    #[test]
    fn mode_four_sits_in_block_one() {
        let g = Grid::new(32).unwrap();
        let p = lp();
        let f = SpectralField::cosine_mode(g, 4, 0, 1.0, 0.0);
        let weights: Vec<f64> = (0..=3).map(|q| p.weight(q, 4.0)).collect();
        assert_eq!(weights, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.block(&f, 1).unwrap(), f);
        assert_eq!(p.block(&f, 2).unwrap().max_abs_coeff(), 0.0);
        assert_eq!(p.low_pass(&f, 1).unwrap().max_abs_coeff(), 0.0);
        let one = SpectralField::cosine_mode(g, 1, 0, 1.0, 0.0);
        assert_eq!(p.block(&one, -1).unwrap(), one);
        assert!(p.block(&one, -2).is_err());
    }

    #[test]
    fn low_pass_limits() {
        let g = Grid::new(32).unwrap();
        let p = lp();
        let f = init::random_band_limited_hat(g, 15, 1.0, 3).unwrap();
        assert_eq!(p.low_pass(&f, 0).unwrap(), p.block(&f, -1).unwrap());
        let q = DyadicPartition::qmax(&g) + 2;
        assert_eq!(p.low_pass(&f, q).unwrap(), f);
    }

    #[test]
    fn qmax_is_last_nonempty_block() {
        let p = lp();
        for n in [8, 32, 128, 256] {
            let g = Grid::new(n).unwrap();
            let q = DyadicPartition::qmax(&g);
            let support = |q: i32| (0..g.len()).any(|i| p.weight(q, g.modulus(i)) != 0.0);
            assert!(support(q), "n={n}");
            assert!(!support(q + 1), "n={n}");
        }
    }

    #[test]
    fn reconstruction_and_disjointness() {
        let g = Grid::new(64).unwrap();
        let p = lp();
        let f = init::random_band_limited_hat(g, 31, 1.0, 8).unwrap();
        let mut sum = SpectralField::zeros(g);
        for (_, b) in p.blocks(&f) {
            sum = sum.add(&b).unwrap();
        }
        assert!(sum.sub(&f).unwrap().l2_norm() < 1e-12 * f.l2_norm());
        for j in DyadicPartition::block_range(&g) {
            for q in DyadicPartition::block_range(&g) {
                if (j - q).abs() >= 2 {
                    let c = p.block(&p.block(&f, q).unwrap(), j).unwrap();
                    assert!(c.l2_norm() < 1e-13 * f.l2_norm());
                }
            }
        }
    }

    #[test]
    fn single_mode_besov_values() {
        let g = Grid::new(64).unwrap();
        let p = lp();
        let f = SpectralField::cosine_mode(g, 4, 0, 2.5, 0.0);
        let s0 = p.besov_norm_hat(&f, &BesovSpec::new(0.0, f64::INFINITY, 1.0)).unwrap();
        assert!((s0 - 2.5).abs() < 1e-12);
        let s1 = p.besov_norm_hat(&f, &BesovSpec::new(1.0, f64::INFINITY, 1.0)).unwrap();
        assert!((s1 - 2.0 * s0).abs() < 1e-12);
        let z = SpectralField::zeros(g);
        for (s, pp, r) in [(0.5, 1.0, 1.0), (-0.3, 4.0, f64::INFINITY)] {
            assert_eq!(p.besov_norm_hat(&z, &BesovSpec::new(s, pp, r)).unwrap(), 0.0);
        }
        assert!(p.besov_norm_hat(&f, &BesovSpec::new(0.0, 0.5, 1.0)).is_err());
        assert!(p.besov_norm_hat(&f, &BesovSpec::new(0.0, 2.0, 0.0)).is_err());
    }

    #[test]
    fn homogeneous_norm_drops_mean() {
        let g = Grid::new(32).unwrap();
        let p = lp();
        let f = RealField::from_fn(g, |x1, _| 3.0 + x1.cos()).unwrap().forward().unwrap();
        let rep = p.besov_report(&[&f], &BesovSpec::homogeneous(0.0, 2.0, 2.0)).unwrap();
        assert!(rep.mean_dropped);
        assert!((rep.norm - 0.5_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn b022_is_comparable_to_l2() {
        let g = Grid::new(64).unwrap();
        let p = lp();
        for seed in 0..10 {
            let f = init::random_band_limited_hat(g, 31, 1.0, seed).unwrap();
            let b = p.besov_norm_hat(&f, &BesovSpec::new(0.0, 2.0, 2.0)).unwrap();
            let ratio = b / f.l2_norm();
            assert!((0.5..=1.0 + 1e-12).contains(&ratio), "ratio {ratio}");
        }
        // one block only: squared sums agree
        let f = SpectralField::cosine_mode(g, 5, 2, 1.0, 0.0);
        let b = p.besov_norm_hat(&f, &BesovSpec::new(0.0, 2.0, 2.0)).unwrap();
        assert!((b - f.l2_norm()).abs() < 1e-14);
    }

    #[test]
    fn space_time_constant_in_time() {
        let g = Grid::new(32).unwrap();
        let p = lp();
        let f = init::random_band_limited_hat(g, 10, 1.0, 1).unwrap();
        let traj: Vec<(f64, &SpectralField)> = (0..=8).map(|i| (0.25 * i as f64, &f)).collect();
        let spec = BesovSpec::new(0.3, 4.0, 2.0);
        let b = p.besov_norm_hat(&f, &spec).unwrap();
        for rho in [1.0, 2.0, 3.0, f64::INFINITY] {
            let r = p.space_time_norms(&traj, &spec, rho).unwrap();
            let want = if rho.is_infinite() { b } else { 2.0_f64.powf(1.0 / rho) * b };
            assert!((r.plain - want).abs() < 1e-12 * want);
            assert!((r.tilde - want).abs() < 1e-12 * want);
        }
        assert!(p.space_time_norms(&traj[..1], &spec, 1.0).is_err());
    }

    #[test]
    fn space_time_disjoint_supports_are_strict() {
        // oracle: with a(t) = block-0 weight, b(t) = block-2 weight
        let g = Grid::new(32).unwrap();
        let p = lp();
        let lo = SpectralField::cosine_mode(g, 1, 0, 1.0, 0.0);
        let hi = SpectralField::cosine_mode(g, 6, 0, 1.0, 0.0);
        let z = SpectralField::zeros(g);
        let traj = vec![(0.0, &lo), (1.0, &z), (2.0, &hi), (3.0, &z)];
        let spec = BesovSpec::new(0.0, 2.0, 1.0);
        let a = 0.5_f64.sqrt();
        // rho = 2 >= r = 1: plain <= tilde.
        let r = p.space_time_norms(&traj, &spec, 2.0).unwrap();
        // trapezoid weights: the low block is seen on [0, 1], the high one on [1, 3]
        let plain = (1.5 * a * a).sqrt();
        let tilde = (0.5 * a * a).sqrt() + (a * a).sqrt();
        assert!((r.plain - plain).abs() < 1e-14);
        assert!((r.tilde - tilde).abs() < 1e-14);
        assert!(r.plain < r.tilde);
        // rho = 1 <= r = inf: tilde <= plain.
        let spec = BesovSpec::new(0.0, 2.0, f64::INFINITY);
        let r = p.space_time_norms(&traj, &spec, 1.0).unwrap();
        assert!(r.tilde < r.plain);
    }

    #[test]
    fn bony_with_constant_and_single_mode() {
        let g = Grid::new(32).unwrap();
        let p = lp();
        let f = init::random_band_limited_hat(g, 12, 1.0, 2).unwrap();
        let c = RealField::constant(g, 2.0).forward().unwrap();
        let (tfg, tgf, r) = p.bony_decompose(&f, &c).unwrap();
        assert_eq!(tfg.max_abs_coeff(), 0.0);
        let total = tfg.add(&tgf).unwrap().add(&r).unwrap();
        let prod = padded_product(&f, &c).unwrap();
        assert!(total.sub(&prod).unwrap().l2_norm() < 1e-12);

        // f = g = cos(6 x1): both factors live in block 2, so only R is nonzero
        let m = SpectralField::cosine_mode(g, 6, 0, 1.0, 0.0);
        let (a, b, r) = p.bony_decompose(&m, &m).unwrap();
        assert!(a.max_abs_coeff() < 1e-16 && b.max_abs_coeff() < 1e-16);
        assert!((r.mode(0, 0).re - 0.5).abs() < 1e-14);
        assert!((r.mode(12, 0).re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn bernstein_examples() {
        let g = Grid::new(64).unwrap();
        let p = lp();
        let f = init::random_band_limited_hat(g, 31, 1.0, 4).unwrap();
        for q in 0..4 {
            let r = p.bernstein_ratio(&f, q, 0.0, 3.0, 3.0).unwrap();
            assert!((r - 1.0).abs() < 1e-14);
        }
        // |k| = 5 straddles blocks 1 and 2; within either block the ratio is |k| / 2^q.
        let m = SpectralField::cosine_mode(g, 3, 4, 1.0, 0.0);
        let r = p.bernstein_ratio(&m, 2, 1.0, 2.0, 2.0).unwrap();
        assert!((r - 1.25).abs() < 1e-12, "{r}");
        let r = p.bernstein_ratio(&m, 1, 1.0, 2.0, 2.0).unwrap();
        assert!((r - 2.5).abs() < 1e-12, "{r}");
        assert!(matches!(
            p.bernstein_ratio(&m, 4, 1.0, 2.0, 2.0),
            Err(Error::EmptyBlock { q: 4 })
        ));
        // |k| = 2^q is the inner edge of block q, where phi vanishes.
        let e = SpectralField::cosine_mode(g, 4, 0, 1.0, 0.0);
        assert!(matches!(
            p.bernstein_ratio(&e, 2, 1.0, 2.0, 2.0),
            Err(Error::EmptyBlock { q: 2 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn besov_monotone_in_r(seed in 0u64..1000, s in -1.0f64..1.5,
                               p in prop::sample::select(vec![1.0, 2.0, 4.0, f64::INFINITY])) {
            let g = Grid::new(32).unwrap();
            let part = lp();
            let f = init::random_band_limited_hat(g, 15, 1.0, seed).unwrap();
            let n1 = part.besov_norm_hat(&f, &BesovSpec::new(s, p, 1.0)).unwrap();
            let n2 = part.besov_norm_hat(&f, &BesovSpec::new(s, p, 2.0)).unwrap();
            let ni = part.besov_norm_hat(&f, &BesovSpec::new(s, p, f64::INFINITY)).unwrap();
            prop_assert!(n1 >= n2 * (1.0 - 1e-14));
            prop_assert!(n2 >= ni * (1.0 - 1e-14));
        }

        #[test]
        fn bony_sums_to_product(seed in 0u64..1000) {
            let g = Grid::new(32).unwrap();
            let part = lp();
            let f = init::random_band_limited_hat(g, 15, 1.0, seed).unwrap();
            let h = init::random_band_limited_hat(g, 15, 1.0, seed + 7).unwrap();
            let (a, b, r) = part.bony_decompose(&f, &h).unwrap();
            let total = a.add(&b).unwrap().add(&r).unwrap();
            let prod = padded_product(&f, &h).unwrap();
            prop_assert!(total.sub(&prod).unwrap().inverse().max_abs() < 1e-10);
        }
    }
}
