//! Commutators of the modified Riesz transform and of the dyadic blocks with
//! transport, and bounded-ratio checks of the estimates they satisfy.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::littlewood_paley::{BesovSpec, DyadicPartition};
use crate::spectral::{
    apply_table, dealias_mask, divergence_defect, from_padded, gradient,
    inverse_pair, lp_norm_vec, padded_product, same_grid, to_padded, Grid, Multiplier, RealField,
    SpectralField,
};
use crate::transport_diffusion::{advect_filtered, DIVERGENCE_TOL};

/// How products of fields are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductRule {
    /// Alias-free on the `3n/2` grid.
    Padded,
    /// Two-thirds filtered inputs and output, as in the time steppers.
    TwoThirds,
}

fn product(a: &SpectralField, b: &SpectralField, rule: ProductRule) -> Result<SpectralField> {
    match rule {
        ProductRule::Padded => padded_product(a, b),
        ProductRule::TwoThirds => {
            same_grid(a.grid(), b.grid())?;
            let mask = dealias_mask(&a.grid());
            let (pa, pb) = inverse_pair(&a.mul_table(&mask), &b.mul_table(&mask))?;
            Ok(pa.mul(&pb)?.forward()?.mul_table(&mask))
        }
    }
}

fn advect(
    u1: &SpectralField,
    u2: &SpectralField,
    f: &SpectralField,
    rule: ProductRule,
) -> Result<SpectralField> {
    match rule {
        ProductRule::Padded => {
            let (d1, d2) = gradient(f);
            padded_product(u1, &d1)?.add(&padded_product(u2, &d2)?)
        }
        ProductRule::TwoThirds => {
            let mask = dealias_mask(&f.grid());
            let v = inverse_pair(&u1.mul_table(&mask), &u2.mul_table(&mask))?;
            Ok(advect_filtered(&v, &[f], &mask)?.pop().expect("one output"))
        }
    }
}

fn riesz_table(grid: &Grid, alpha: f64) -> Result<Vec<Complex64>> {
    Multiplier::riesz_alpha(alpha).table(grid)
}

/// `[R_alpha, u_j] theta = R_alpha(u_j theta) - u_j R_alpha theta` for both components.
pub fn commutator_mult_hat(
    u1: &SpectralField,
    u2: &SpectralField,
    theta: &SpectralField,
    alpha: f64,
    rule: ProductRule,
) -> Result<(SpectralField, SpectralField)> {
    same_grid(u1.grid(), u2.grid())?;
    same_grid(u1.grid(), theta.grid())?;
    let r = riesz_table(&theta.grid(), alpha)?;
    let rt = apply_table(theta, &r);
    let comp = |u: &SpectralField| -> Result<SpectralField> {
        apply_table(&product(u, theta, rule)?, &r).sub(&product(u, &rt, rule)?)
    };
    Ok((comp(u1)?, comp(u2)?))
}

pub fn commutator_mult(
    u: (&RealField, &RealField),
    theta: &RealField,
    alpha: f64,
) -> Result<(RealField, RealField)> {
    let (u1, u2) = (u.0.forward()?, u.1.forward()?);
    let (c1, c2) = commutator_mult_hat(&u1, &u2, &theta.forward()?, alpha, ProductRule::Padded)?;
    inverse_pair(&c1, &c2)
}

fn check_solenoidal(u1: &SpectralField, u2: &SpectralField) -> Result<()> {
    let size = (u1.energy() + u2.energy()).sqrt();
    let defect = divergence_defect(u1, u2)?;
    if defect > DIVERGENCE_TOL * size {
        return Err(Error::NotDivergenceFree {
            defect,
            bound: DIVERGENCE_TOL * size,
        });
    }
    Ok(())
}

/// `[R_alpha, u.grad] theta = R_alpha(u.grad theta) - u.grad(R_alpha theta)`.
pub fn commutator_advect_hat(
    u1: &SpectralField,
    u2: &SpectralField,
    theta: &SpectralField,
    alpha: f64,
    rule: ProductRule,
) -> Result<SpectralField> {
    same_grid(u1.grid(), u2.grid())?;
    same_grid(u1.grid(), theta.grid())?;
    check_solenoidal(u1, u2)?;
    Ok(advect_commutator_parts(u1, u2, theta, alpha, rule)?.0)
}

/// The commutator and the rounding scale of its two terms.
fn advect_commutator_parts(
    u1: &SpectralField,
    u2: &SpectralField,
    theta: &SpectralField,
    alpha: f64,
    rule: ProductRule,
) -> Result<(SpectralField, f64)> {
    let r = riesz_table(&theta.grid(), alpha)?;
    let rt = apply_table(theta, &r);
    let a = apply_table(&advect(u1, u2, theta, rule)?, &r);
    let b = advect(u1, u2, &rt, rule)?;
    let noise = NOISE * (a.max_abs_coeff() + b.max_abs_coeff()) * theta.grid().len() as f64;
    Ok((a.sub(&b)?, noise))
}

/// Relative size below which a commutator is indistinguishable from rounding.
const NOISE: f64 = 1e-13;

pub fn commutator_advect(u: (&RealField, &RealField), theta: &RealField, alpha: f64) -> Result<RealField> {
    let (u1, u2) = (u.0.forward()?, u.1.forward()?);
    Ok(commutator_advect_hat(&u1, &u2, &theta.forward()?, alpha, ProductRule::Padded)?.inverse())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportMeta {
    pub alpha: Option<f64>,
    pub s: Option<f64>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub n: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorReport {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs_terms: Vec<(&'static str, f64)>,
    pub ratio: f64,
    pub meta: ReportMeta,
}

impl CommutatorReport {
    fn new(
        name: &'static str,
        lhs: f64,
        rhs_terms: Vec<(&'static str, f64)>,
        meta: ReportMeta,
    ) -> Result<Self> {
        Self::with_floor(name, lhs, 0.0, rhs_terms, meta)
    }

    /// As `new`, but a vanishing right-hand side tolerates `lhs <= floor`.
    fn with_floor(
        name: &'static str,
        lhs: f64,
        floor: f64,
        rhs_terms: Vec<(&'static str, f64)>,
        meta: ReportMeta,
    ) -> Result<Self> {
        let rhs: f64 = rhs_terms.iter().map(|t| t.1).sum();
        let ratio = if rhs == 0.0 {
            if lhs <= floor {
                0.0
            } else {
                return Err(Error::Degenerate(format!(
                    "{name}: right-hand side vanishes while the left-hand side is {lhs:e}"
                )));
            }
        } else {
            lhs / rhs
        };
        Ok(Self {
            name,
            lhs,
            rhs_terms,
            ratio,
            meta,
        })
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_terms.iter().map(|t| t.1).sum()
    }
}

fn open_range(name: &'static str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(Error::param(name, v, "outside its admissible open interval"))
    }
}

fn check_p(p: f64, allow_inf: bool) -> Result<()> {
    if p >= 2.0 && (allow_inf || p.is_finite()) {
        Ok(())
    } else {
        Err(Error::param("p", p, "outside its admissible range"))
    }
}

/// `||[R_alpha, u] theta||_{H^s}` against
/// `||Gamma||_2 ||theta||_{B^{s-alpha}_{inf,2}} + ||theta||_inf ||theta||_{H^{s+1-2alpha}} + ||u||_2 ||theta||_2`
/// with `u` from Biot-Savart and `Gamma = omega - R_alpha theta`.
pub fn verify_est1(
    omega: &RealField,
    theta: &RealField,
    alpha: f64,
    s: f64,
    part: &DyadicPartition,
) -> Result<CommutatorReport> {
    open_range("s", s, 0.0, alpha)?;
    let grid = omega.grid();
    same_grid(grid, theta.grid())?;
    let (w, th) = (omega.forward()?, theta.forward()?);
    let w = w.without_mean();
    let (u1, u2) = crate::spectral::biot_savart(&w);
    let (c1, c2) = commutator_mult_hat(&u1, &u2, &th, alpha, ProductRule::Padded)?;
    let lhs = part.besov_norm_vec(&[&c1, &c2], &BesovSpec::new(s, 2.0, 2.0))?;
    let gamma = w.sub(&apply_table(&th, &riesz_table(&grid, alpha)?))?;
    let terms = vec![
        (
            "gamma_L2*theta_B(s-alpha,inf,2)",
            gamma.l2_norm() * part.besov_norm_hat(&th, &BesovSpec::new(s - alpha, f64::INFINITY, 2.0))?,
        ),
        (
            "theta_Linf*theta_H(s+1-2alpha)",
            theta.max_abs() * part.besov_norm_hat(&th, &BesovSpec::new(s + 1.0 - 2.0 * alpha, 2.0, 2.0))?,
        ),
        (
            "u_L2*theta_L2",
            (u1.energy() + u2.energy()).sqrt() * th.l2_norm(),
        ),
    ];
    CommutatorReport::new(
        "est1",
        lhs,
        terms,
        ReportMeta {
            alpha: Some(alpha),
            s: Some(s),
            p: Some(2.0),
            r: Some(2.0),
            n: grid.n(),
            seed: None,
        },
    )
}

/// `||grad u||_{L^p}` with the pointwise Frobenius norm.
pub fn grad_lp(u1: &SpectralField, u2: &SpectralField, p: f64) -> Result<f64> {
    let (a11, a12) = gradient(u1);
    let (a21, a22) = gradient(u2);
    let (g11, g12) = inverse_pair(&a11, &a12)?;
    let (g21, g22) = inverse_pair(&a21, &a22)?;
    lp_norm_vec(&[&g11, &g12, &g21, &g22], p)
}

/// `||[R_alpha, u.grad] theta||_{B^s_{p,r}}` against
/// `||grad u||_{L^p} (||theta||_{B^{s+1-alpha}_{inf,r}} + ||theta||_{L^p})`.
#[allow(clippy::too_many_arguments)]
pub fn verify_est2(
    u: (&RealField, &RealField),
    theta: &RealField,
    alpha: f64,
    s: f64,
    p: f64,
    r: f64,
    part: &DyadicPartition,
) -> Result<CommutatorReport> {
    open_range("s", s, -1.0, alpha)?;
    check_p(p, false)?;
    if r.is_nan() || r < 1.0 {
        return Err(Error::param("r", r, "must lie in [1, inf]"));
    }
    let grid = theta.grid();
    let (u1, u2) = (u.0.forward()?, u.1.forward()?);
    let th = theta.forward()?;
    check_solenoidal(&u1, &u2)?;
    let (c, noise) = advect_commutator_parts(&u1, &u2, &th, alpha, ProductRule::Padded)?;
    let lhs = part.besov_norm_hat(&c, &BesovSpec::new(s, p, r))?;
    let g = grad_lp(&u1, &u2, p)?;
    let terms = vec![
        (
            "gradu_Lp*theta_B(s+1-alpha,inf,r)",
            g * part.besov_norm_hat(&th, &BesovSpec::new(s + 1.0 - alpha, f64::INFINITY, r))?,
        ),
        ("gradu_Lp*theta_Lp", g * theta.lp_norm(p)?),
    ];
    CommutatorReport::with_floor(
        "est2",
        lhs,
        noise,
        terms,
        ReportMeta {
            alpha: Some(alpha),
            s: Some(s),
            p: Some(p),
            r: Some(r),
            n: grid.n(),
            seed: None,
        },
    )
}

/// `sup_q 2^{q(alpha-1)} ||[Delta_q, u.grad] f||_{L^p}` against
/// `(||grad u||_{B^{alpha-1}_{p,inf}} + ||u||_{L^2}) ||f||_{B^0_{inf,inf}}`.
pub fn verify_block_commutator(
    u: (&RealField, &RealField),
    f: &RealField,
    alpha: f64,
    p: f64,
    part: &DyadicPartition,
) -> Result<CommutatorReport> {
    open_range("alpha", alpha, 0.0, 1.0)?;
    check_p(p, true)?;
    let grid = f.grid();
    let (u1, u2) = (u.0.forward()?, u.1.forward()?);
    let fh = f.forward()?;
    let transport = advect(&u1, &u2, &fh, ProductRule::Padded)?;
    let mut lhs = 0.0_f64;
    for q in DyadicPartition::block_range(&grid) {
        let c = part
            .block(&transport, q)?
            .sub(&advect(&u1, &u2, &part.block(&fh, q)?, ProductRule::Padded)?)?;
        let v = c.inverse().lp_norm(p)?;
        lhs = lhs.max((q as f64 * (alpha - 1.0)).exp2() * v);
    }
    let (a11, a12) = gradient(&u1);
    let (a21, a22) = gradient(&u2);
    let grad_b = part.besov_norm_vec(&[&a11, &a12, &a21, &a22], &BesovSpec::new(alpha - 1.0, p, f64::INFINITY))?;
    let u_l2 = (u1.energy() + u2.energy()).sqrt();
    let f_b = part.besov_norm_hat(&fh, &BesovSpec::new(0.0, f64::INFINITY, f64::INFINITY))?;
    let terms = vec![
        ("gradu_B(alpha-1,p,inf)*f_B(0,inf,inf)", grad_b * f_b),
        ("u_L2*f_B(0,inf,inf)", u_l2 * f_b),
    ];
    CommutatorReport::new(
        "block",
        lhs,
        terms,
        ReportMeta {
            alpha: Some(alpha),
            s: None,
            p: Some(p),
            r: None,
            n: grid.n(),
            seed: None,
        },
    )
}

/// Periodic distance to the origin, `|(min(x1, 2pi - x1), min(x2, 2pi - x2))|`.
pub fn periodic_weight(grid: Grid) -> RealField {
    let per = |x: f64| x.min(Grid::PERIOD - x);
    RealField::from_fn(grid, |x1, x2| per(x1).hypot(per(x2))).expect("finite")
}

/// Fejer kernel of order `k`, normalized to unit integral over the torus.
pub fn fejer_kernel(grid: Grid, k: i64) -> SpectralField {
    let w = |j: i64| (1.0 - j.abs() as f64 / (k + 1) as f64).max(0.0);
    let norm = 1.0 / (Grid::PERIOD * Grid::PERIOD);
    let half = (grid.n() / 2) as i64;
    let coeffs = (0..grid.len())
        .map(|idx| {
            let (k1, k2) = grid.wavevector(idx);
            if k1 == half || k2 == half {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(w(k1) * w(k2) * norm, 0.0)
        })
        .collect();
    SpectralField::new(grid, coeffs).expect("real even symbol")
}

/// `h * g` with Lebesgue measure on the torus.
fn convolve(h: &SpectralField, g: &SpectralField) -> SpectralField {
    let area = Grid::PERIOD * Grid::PERIOD;
    SpectralField::new(
        g.grid(),
        h.coeffs()
            .iter()
            .zip(g.coeffs())
            .map(|(a, b)| a * b * area)
            .collect(),
    )
    .expect("product of hermitian spectra")
}

/// `||w h||_{L^m}` with Lebesgue measure, `w` the periodic distance.
fn weighted_kernel_norm(h: &RealField, m: f64) -> Result<f64> {
    let wh = h.mul(&periodic_weight(h.grid()))?;
    let area = Grid::PERIOD * Grid::PERIOD;
    let mean_norm = wh.lp_norm(m)?;
    Ok(if m.is_infinite() {
        mean_norm
    } else {
        mean_norm * area.powf(1.0 / m)
    })
}

/// Both kernel-commutator bounds for `h*(fg) - f (h*g)` in `L^p`:
/// `||x h||_{L^{m'}} ||grad f||_{L^p} ||g||_{L^m}` and `||x h||_{L^1} ||grad f||_{L^inf} ||g||_{L^p}`.
/// The kernel norm uses Lebesgue measure, the others the mean.
pub fn verify_kernel_commutator(
    h: &RealField,
    f: &RealField,
    g: &RealField,
    m: f64,
    p: f64,
) -> Result<(CommutatorReport, CommutatorReport)> {
    if !(p >= 1.0) || !(m >= p) {
        return Err(Error::param("m", m, "need 1 <= p <= m"));
    }
    let grid = f.grid();
    same_grid(grid, h.grid())?;
    same_grid(grid, g.grid())?;
    let (hh, fh) = (h.forward()?, f.forward()?);
    let gh = g.forward()?;
    let a = convolve(&hh, &padded_product(&fh, &gh)?);
    let b = padded_product(&fh, &convolve(&hh, &gh))?;
    let noise = NOISE * (a.max_abs_coeff() + b.max_abs_coeff()) * grid.len() as f64;
    let lhs = a.sub(&b)?.inverse().lp_norm(p)?;
    let m_conj = if m == 1.0 {
        f64::INFINITY
    } else if m.is_infinite() {
        1.0
    } else {
        m / (m - 1.0)
    };
    let (d1, d2) = gradient(&fh);
    let (g1, g2) = inverse_pair(&d1, &d2)?;
    let meta = ReportMeta {
        p: Some(p),
        r: Some(m),
        n: grid.n(),
        ..Default::default()
    };
    let v1 = CommutatorReport::with_floor(
        "kernel_m",
        lhs,
        noise,
        vec![(
            "xh_Lm'*gradf_Lp*g_Lm",
            weighted_kernel_norm(h, m_conj)? * lp_norm_vec(&[&g1, &g2], p)? * g.lp_norm(m)?,
        )],
        meta.clone(),
    )?;
    let v2 = CommutatorReport::with_floor(
        "kernel_1",
        lhs,
        noise,
        vec![(
            "xh_L1*gradf_Linf*g_Lp",
            weighted_kernel_norm(h, 1.0)? * lp_norm_vec(&[&g1, &g2], f64::INFINITY)? * g.lp_norm(p)?,
        )],
        meta,
    )?;
    Ok((v1, v2))
}

/// `|| |f|^{gamma-2} f ||_{Hdot^s}` against
/// `||f||^{gamma-2}_{L^{2gamma/(2-alpha)}} ||f||_{Hdot^{s + (1 - 2/gamma)(2-alpha)}}`.
pub fn verify_power_interpolation(
    f: &RealField,
    gamma_exp: f64,
    s: f64,
    alpha: f64,
    part: &DyadicPartition,
) -> Result<CommutatorReport> {
    if !(gamma_exp >= 2.0 && gamma_exp.is_finite()) {
        return Err(Error::param("gamma", gamma_exp, "must lie in [2, inf)"));
    }
    open_range("s", s, 0.0, 1.0)?;
    let alpha_lo = if gamma_exp == 2.0 {
        f64::NEG_INFINITY
    } else {
        (gamma_exp - 4.0) / (gamma_exp - 2.0)
    };
    open_range("alpha", alpha, alpha_lo, 2.0)?;
    let grid = f.grid();
    let fh = f.forward()?;
    let m = 2 * grid.n();
    let pf = to_padded(&fh, m);
    let pw: Vec<f64> = pf.iter().map(|v| v.abs().powf(gamma_exp - 2.0) * v).collect();
    let power = from_padded(&pw, m, grid);
    let lhs = part.besov_norm_hat(&power, &BesovSpec::homogeneous(s, 2.0, 2.0))?;
    let shift = (1.0 - 2.0 / gamma_exp) * (2.0 - alpha);
    let lq = f.lp_norm(2.0 * gamma_exp / (2.0 - alpha))?;
    let rhs = lq.powf(gamma_exp - 2.0) * part.besov_norm_hat(&fh, &BesovSpec::homogeneous(s + shift, 2.0, 2.0))?;
    CommutatorReport::new(
        "power",
        lhs,
        vec![("f_Lq^(gamma-2)*f_H(s+shift)", rhs)],
        ReportMeta {
            alpha: Some(alpha),
            s: Some(s),
            p: Some(gamma_exp),
            r: None,
            n: grid.n(),
            seed: None,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init;
    use crate::spectral::biot_savart;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(32).unwrap()
    }

    fn random_velocity(g: Grid, seed: u64) -> (RealField, RealField) {
        let w = init::random_band_limited_hat(g, 5, 1.0, seed).unwrap();
        let (u1, u2) = biot_savart(&w);
        (u1.inverse(), u2.inverse())
    }

    #[test]
    fn constant_velocity_commutes() {
        let g = grid();
        let c1 = RealField::constant(g, 0.7);
        let c2 = RealField::constant(g, -1.3);
        let th = init::random_band_limited(g, 6, 1.0, 2).unwrap();
        let (a, b) = commutator_mult((&c1, &c2), &th, 0.9).unwrap();
        assert!(a.max_abs() < 1e-12 && b.max_abs() < 1e-12);
        assert!(commutator_advect((&c1, &c2), &th, 0.9).unwrap().max_abs() < 1e-12);
        let part = DyadicPartition::default();
        let r = verify_est2((&c1, &c2), &th, 0.9, -0.1, 4.0, 1.0, &part).unwrap();
        assert_eq!(r.rhs(), 0.0);
        assert!(r.lhs < 1e-12);
    }

    #[test]
    fn zero_theta_gives_zero() {
        let g = grid();
        let (u1, u2) = random_velocity(g, 1);
        let z = RealField::zeros(g);
        let (a, b) = commutator_mult((&u1, &u2), &z, 0.9).unwrap();
        assert_eq!(a.max_abs() + b.max_abs(), 0.0);
        let part = DyadicPartition::default();
        let w = init::random_band_limited(g, 5, 1.0, 1).unwrap();
        let r = verify_est1(&w, &z, 0.9, 0.45, &part).unwrap();
        assert_eq!((r.lhs, r.ratio), (0.0, 0.0));
        let r = verify_power_interpolation(&z, 4.0, 0.5, 0.9, &part).unwrap();
        assert_eq!(r.ratio, 0.0);
    }

    fn sigma(k: (i64, i64), alpha: f64) -> Complex64 {
        let m2 = (k.0 * k.0 + k.1 * k.1) as f64;
        if m2 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, k.0 as f64 / m2.sqrt().powf(alpha))
    }

    #[test]
    fn two_mode_closed_form() {
        let g = grid();
        let alpha = 0.7;
        let (ku, kt) = ((2_i64, -1_i64), (3_i64, 4_i64));
        let u1 = init::single_mode(g, ku.0, ku.1, 1.0, 0.0);
        let th = init::single_mode(g, kt.0, kt.1, 1.0, 0.0);
        let (c, _) = commutator_mult((&u1, &RealField::zeros(g)), &th, alpha).unwrap();
        let want = RealField::from_fn(g, |x1, x2| {
            let mut acc = Complex64::new(0.0, 0.0);
            for su in [-1, 1] {
                for st in [-1, 1] {
                    let kth = (st * kt.0, st * kt.1);
                    let k = (su * ku.0 + kth.0, su * ku.1 + kth.1);
                    let phase = Complex64::from_polar(1.0, k.0 as f64 * x1 + k.1 as f64 * x2);
                    acc += 0.25 * (sigma(k, alpha) - sigma(kth, alpha)) * phase;
                }
            }
            acc.re
        })
        .unwrap();
        assert!(c.sub(&want).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn shear_pair_vanishes() {
        let g = grid();
        let u1 = RealField::from_fn(g, |_, x2| x2.sin() + 0.3 * (2.0 * x2).cos()).unwrap();
        let th = RealField::from_fn(g, |_, x2| (3.0 * x2).cos()).unwrap();
        let c = commutator_advect((&u1, &RealField::zeros(g)), &th, 0.9).unwrap();
        assert!(c.max_abs() < 1e-13);
    }

    #[test]
    fn advect_commutator_is_divergence_of_mult() {
        let g = grid();
        let (u1, u2) = random_velocity(g, 4);
        let th = init::random_band_limited(g, 6, 1.0, 5).unwrap();
        let (a, b) = commutator_mult((&u1, &u2), &th, 0.9).unwrap();
        let (ah, bh) = crate::spectral::forward_pair(&a, &b).unwrap();
        let div = crate::spectral::divergence(&ah, &bh).unwrap().inverse();
        let c = commutator_advect((&u1, &u2), &th, 0.9).unwrap();
        assert!(c.sub(&div).unwrap().max_abs() < 1e-10 * c.max_abs().max(1.0));
        let bad = RealField::from_fn(g, |x1, _| x1.sin()).unwrap();
        assert!(commutator_advect((&bad, &RealField::zeros(g)), &th, 0.9).is_err());
    }

    #[test]
    fn two_thirds_rule_agrees_on_resolved_data() {
        let g = grid();
        let w = init::random_band_limited_hat(g, 4, 1.0, 8).unwrap();
        let (u1, u2) = biot_savart(&w);
        let th = init::random_band_limited_hat(g, 4, 1.0, 9).unwrap();
        let a = commutator_advect_hat(&u1, &u2, &th, 0.9, ProductRule::Padded).unwrap();
        let b = commutator_advect_hat(&u1, &u2, &th, 0.9, ProductRule::TwoThirds).unwrap();
        assert!(a.sub(&b).unwrap().max_abs_coeff() < 1e-13);
    }

    #[test]
    fn parameter_ranges() {
        let g = grid();
        let part = DyadicPartition::default();
        let (u1, u2) = random_velocity(g, 1);
        let th = init::random_band_limited(g, 5, 1.0, 2).unwrap();
        assert!(verify_est1(&u1, &th, 0.9, 0.0, &part).is_err());
        assert!(verify_est1(&u1, &th, 0.9, 0.9, &part).is_err());
        assert!(verify_est2((&u1, &u2), &th, 0.9, -1.0, 4.0, 1.0, &part).is_err());
        assert!(verify_est2((&u1, &u2), &th, 0.9, 0.0, 1.5, 1.0, &part).is_err());
        assert!(verify_est2((&u1, &u2), &th, 0.9, 0.0, f64::INFINITY, 1.0, &part).is_err());
        assert!(verify_block_commutator((&u1, &u2), &th, 1.0, 2.0, &part).is_err());
        assert!(verify_power_interpolation(&th, 1.5, 0.5, 0.9, &part).is_err());
        assert!(verify_power_interpolation(&th, 6.0, 0.5, 0.4, &part).is_err());
        assert!(verify_kernel_commutator(&th, &th, &th, 2.0, 4.0).is_err());
    }

    #[test]
    fn power_gamma_two_is_identity() {
        let g = grid();
        let part = DyadicPartition::default();
        let f = init::random_band_limited(g, 5, 1.0, 3).unwrap();
        let r = verify_power_interpolation(&f, 2.0, 0.5, 0.9, &part).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12, "{}", r.ratio);
    }

    #[test]
    fn kernel_commutator_bounds() {
        let g = grid();
        let h = fejer_kernel(g, 6).inverse();
        assert!((h.mean() * Grid::PERIOD * Grid::PERIOD - 1.0).abs() < 1e-12);
        let f = init::random_band_limited(g, 4, 1.0, 1).unwrap();
        let gg = init::random_band_limited(g, 4, 1.0, 2).unwrap();
        let (v1, v2) = verify_kernel_commutator(&h, &f, &gg, 4.0, 2.0).unwrap();
        assert!(v1.ratio > 0.0 && v1.ratio.is_finite());
        // the torus path argument gives the second bound with constant one
        assert!(v2.ratio <= 1.0 + 1e-6, "{}", v2.ratio);
        let c = RealField::constant(g, 2.0);
        let (v1, _) = verify_kernel_commutator(&h, &c, &gg, 4.0, 2.0).unwrap();
        assert!(v1.lhs < 1e-13);
        let (v1, v2) = verify_kernel_commutator(&h, &f, &RealField::zeros(g), 4.0, 2.0).unwrap();
        assert_eq!((v1.lhs, v2.lhs), (0.0, 0.0));
    }

    #[test]
    fn ratios_are_scale_invariant() {
        let g = grid();
        let part = DyadicPartition::default();
        let w = init::random_band_limited(g, 5, 1.0, 6).unwrap();
        let th = init::random_band_limited(g, 5, 1.0, 7).unwrap();
        let (u1, u2) = random_velocity(g, 6);
        let base1 = verify_est1(&w, &th, 0.9, 0.45, &part).unwrap().ratio;
        let base2 = verify_est2((&u1, &u2), &th, 0.9, -0.1, 4.0, 1.0, &part).unwrap().ratio;
        let base3 = verify_block_commutator((&u1, &u2), &th, 0.9, 4.0, &part).unwrap().ratio;
        for lam in [1e-2, 10.0, 1e2] {
            let (w, th) = (w.scale(lam), th.scale(lam));
            let (u1, u2) = (u1.scale(lam), u2.scale(lam));
            let r1 = verify_est1(&w, &th, 0.9, 0.45, &part).unwrap().ratio;
            let r2 = verify_est2((&u1, &u2), &th, 0.9, -0.1, 4.0, 1.0, &part).unwrap().ratio;
            let r3 = verify_block_commutator((&u1, &u2), &th, 0.9, 4.0, &part).unwrap().ratio;
            assert!((r1 / base1 - 1.0).abs() < 1e-10);
            assert!((r2 / base2 - 1.0).abs() < 1e-10);
            assert!((r3 / base3 - 1.0).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn mult_is_bilinear(seed in 0u64..1000, lam in -5.0f64..5.0, mu in -5.0f64..5.0) {
            let g = Grid::new(16).unwrap();
            let (u1, u2) = random_velocity(g, seed);
            let th = init::random_band_limited(g, 3, 1.0, seed + 1).unwrap();
            let (a, b) = commutator_mult((&u1, &u2), &th, 0.8).unwrap();
            let (la, lb) = commutator_mult((&u1.scale(lam), &u2.scale(lam)), &th.scale(mu), 0.8).unwrap();
            let scale = a.max_abs().max(b.max_abs()).max(1e-300);
            prop_assert!(la.sub(&a.scale(lam * mu)).unwrap().max_abs() <= 1e-12 * scale * (lam * mu).abs().max(1.0));
            prop_assert!(lb.sub(&b.scale(lam * mu)).unwrap().max_abs() <= 1e-12 * scale * (lam * mu).abs().max(1.0));
        }
    }
}
