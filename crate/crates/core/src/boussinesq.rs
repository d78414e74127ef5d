//! Coupled vorticity-temperature system
//!
//! ```text
//! d_t omega + u . grad omega + |D|^alpha omega = d_1 theta
//! d_t theta + u . grad theta + |D|^beta  theta = 0,    u = grad^perp Delta^{-1} omega
//! ```
//!
//! with energy ledgers, the `Gamma = omega - R_alpha theta` series and a
//! twin-run probe of continuous dependence.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::commutators::{commutator_advect_hat, ProductRule};
use crate::error::{Error, Result};
use crate::init::InitialData;
use crate::littlewood_paley::{BesovSpec, DyadicPartition};
use crate::spectral::{
    biot_savart, dealias_mask, divergence_defect, inverse_pair, lp_norm_vec, same_grid, Grid,
    Multiplier, RealField, SpectralField,
};
use crate::transport_diffusion::{
    advect_filtered, dissipation_symbol, exp_table, step_count, weighted_energy,
    weighted_energy_rate, CFL_LIMIT,
};

/// Any monitored quantity above this aborts the run.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoussinesqParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BoussinesqParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha", self.alpha, "must lie in ]0, 1]"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::param("beta", self.beta, "must lie in ]0, 1]"));
        }
        Ok(())
    }

    pub fn riesz(&self) -> Multiplier {
        Multiplier::riesz_alpha(self.alpha)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub omega_hat: SpectralField,
    pub theta_hat: SpectralField,
    pub u1_hat: SpectralField,
    pub u2_hat: SpectralField,
}

impl SimState {
    /// The vorticity mean is discarded.
    pub fn new(t: f64, omega_hat: SpectralField, theta_hat: SpectralField) -> Result<Self> {
        same_grid(omega_hat.grid(), theta_hat.grid())?;
        let omega_hat = omega_hat.without_mean();
        let (u1_hat, u2_hat) = biot_savart(&omega_hat);
        Ok(Self {
            t,
            omega_hat,
            theta_hat,
            u1_hat,
            u2_hat,
        })
    }

    pub fn from_initial(data: &InitialData) -> Result<Self> {
        Self::new(0.0, data.omega.forward()?, data.theta.forward()?)
    }

    pub fn grid(&self) -> Grid {
        self.omega_hat.grid()
    }

    pub fn u_l2(&self) -> f64 {
        (self.u1_hat.energy() + self.u2_hat.energy()).sqrt()
    }

    pub fn velocity(&self) -> (RealField, RealField) {
        inverse_pair(&self.u1_hat, &self.u2_hat).expect("components share a grid")
    }

    pub fn gamma_hat(&self, params: &BoussinesqParams) -> SpectralField {
        let r = params.riesz().table(&self.grid()).expect("alpha validated");
        let rt = crate::spectral::apply_table(&self.theta_hat, &r);
        self.omega_hat.sub(&rt).expect("same grid")
    }
}

/// `Gamma = omega - R_alpha theta`.
pub fn gamma(state: &SimState, params: &BoussinesqParams) -> RealField {
    state.gamma_hat(params).inverse()
}

/// Integrating-factor RK4 for the coupled system at a fixed `dt`.
pub struct Stepper {
    params: BoussinesqParams,
    grid: Grid,
    dt: f64,
    mask: Vec<f64>,
    d1: Vec<Complex64>,
    sym_a: Vec<f64>,
    sym_b: Vec<f64>,
    ea: (Vec<f64>, Vec<f64>),
    eb: (Vec<f64>, Vec<f64>),
    /// Bits of the largest divergence defect seen; nonnegative floats order like their bits.
    max_divergence: AtomicU64,
}

type Pair = (SpectralField, SpectralField);

impl Stepper {
    pub fn new(params: BoussinesqParams, grid: Grid, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", dt, "must be positive"));
        }
        let sym_a = dissipation_symbol(&grid, params.alpha);
        let sym_b = dissipation_symbol(&grid, params.beta);
        Ok(Self {
            params,
            grid,
            dt,
            mask: dealias_mask(&grid),
            d1: Multiplier::Derivative {
                axis: crate::spectral::Axis::X1,
            }
            .table(&grid)?,
            ea: (exp_table(&sym_a, dt), exp_table(&sym_a, 0.5 * dt)),
            eb: (exp_table(&sym_b, dt), exp_table(&sym_b, 0.5 * dt)),
            sym_a,
            sym_b,
            max_divergence: AtomicU64::new(0),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &BoussinesqParams {
        &self.params
    }

    /// Largest `max_k |i k . u_hat|` met by any stage so far.
    pub fn max_divergence(&self) -> f64 {
        f64::from_bits(self.max_divergence.load(Ordering::Relaxed))
    }

    /// Nonlinear and coupling terms `(-u.grad omega + d_1 theta, -u.grad theta)`.
    fn rhs(&self, omega: &SpectralField, theta: &SpectralField, t: f64) -> Result<Pair> {
        let (u1, u2) = biot_savart(omega);
        let div = divergence_defect(&u1, &u2)?;
        self.max_divergence.fetch_max(div.to_bits(), Ordering::Relaxed);
        let forcing = crate::spectral::apply_table(theta, &self.d1);
        let zero = Complex64::new(0.0, 0.0);
        if u1.coeffs().iter().chain(u2.coeffs()).all(|c| *c == zero) {
            return Ok((forcing, SpectralField::zeros(self.grid)));
        }
        let v = inverse_pair(&u1.mul_table(&self.mask), &u2.mul_table(&self.mask))?;
        let mut adv = advect_filtered(&v, &[omega, theta], &self.mask).map_err(|e| blow_up(e, t))?;
        let at = adv.pop().expect("two outputs");
        let aw = adv.pop().expect("two outputs");
        Ok((forcing.sub(&aw)?, at.scale(-1.0)))
    }

    fn courant(&self, state: &SimState) -> f64 {
        let (u1, u2) = state.velocity();
        let speed = lp_norm_vec(&[&u1, &u2], f64::INFINITY).expect("valid exponent");
        speed * self.dt * self.grid.n() as f64 / Grid::PERIOD
    }

    /// One step, given the right-hand side `a` at the current state.
    fn advance(&self, state: &SimState, a: &Pair) -> Result<SimState> {
        let (dt, t) = (self.dt, state.t);
        let courant = self.courant(state);
        if courant > CFL_LIMIT {
            return Err(Error::Cfl {
                courant,
                limit: CFL_LIMIT,
            });
        }
        let (w, th) = (&state.omega_hat, &state.theta_hat);
        let (ea, eah) = (&self.ea.0, &self.ea.1);
        let (eb, ebh) = (&self.eb.0, &self.eb.1);
        let b = self.rhs(
            &w.add(&a.0.scale(0.5 * dt))?.mul_table(eah),
            &th.add(&a.1.scale(0.5 * dt))?.mul_table(ebh),
            t + 0.5 * dt,
        )?;
        let c = self.rhs(
            &w.mul_table(eah).add(&b.0.scale(0.5 * dt))?,
            &th.mul_table(ebh).add(&b.1.scale(0.5 * dt))?,
            t + 0.5 * dt,
        )?;
        let d = self.rhs(
            &w.mul_table(ea).add(&c.0.mul_table(eah).scale(dt))?,
            &th.mul_table(eb).add(&c.1.mul_table(ebh).scale(dt))?,
            t + dt,
        )?;
        let combine = |y: &SpectralField,
                       e: &[f64],
                       eh: &[f64],
                       a: &SpectralField,
                       b: &SpectralField,
                       c: &SpectralField,
                       d: &SpectralField|
         -> Result<SpectralField> {
            let incr = a.mul_table(e).add(&b.add(c)?.mul_table(eh).scale(2.0))?.add(d)?;
            y.mul_table(e).add(&incr.scale(dt / 6.0))
        };
        let omega = combine(w, ea, eah, &a.0, &b.0, &c.0, &d.0)?;
        let theta = combine(th, eb, ebh, &a.1, &b.1, &c.1, &d.1)?;
        let next = SimState::new(t + dt, omega, theta)?;
        guard(&next)?;
        Ok(next)
    }

    pub fn step(&self, state: &SimState) -> Result<SimState> {
        let a = self.rhs(&state.omega_hat, &state.theta_hat, state.t)?;
        self.advance(state, &a)
    }
}

fn blow_up(e: Error, t: f64) -> Error {
    match e {
        Error::NonFinite { value, .. } => Error::BlowUp {
            t,
            quantity: "advection product",
            value,
        },
        e => e,
    }
}

fn guard(s: &SimState) -> Result<()> {
    for (quantity, f) in [("omega_hat", &s.omega_hat), ("theta_hat", &s.theta_hat)] {
        let v = f.max_abs_coeff();
        if !(v <= OVERFLOW_GUARD) {
            return Err(Error::BlowUp {
                t: s.t,
                quantity,
                value: v,
            });
        }
    }
    Ok(())
}

/// One step from a fresh stepper.
pub fn step(state: &SimState, params: &BoussinesqParams, dt: f64) -> Result<SimState> {
    Stepper::new(*params, state.grid(), dt)?.step(state)
}

#[derive(Clone, Debug)]
pub struct DiagnosticsConfig {
    /// Exponents for `||theta||_{L^p}` and `||omega||_{L^p}`.
    pub p_list: Vec<f64>,
    /// Exponents for `||Gamma||_{L^r}`.
    pub r_tilde: Vec<f64>,
    /// Exponents `r` for `int ||Gamma||_{B^{2/r}_{r,1}}`.
    pub besov_r: Vec<f64>,
    /// Besov series (`theta`, `u`, `Gamma`); the costliest diagnostics.
    pub besov: bool,
    pub gamma: bool,
    /// Keep every sampled state in the output.
    pub keep_states: bool,
    pub partition: DyadicPartition,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            p_list: vec![2.0, 4.0, f64::INFINITY],
            r_tilde: vec![4.0],
            besov_r: vec![4.0],
            besov: true,
            gamma: true,
            keep_states: false,
            partition: DyadicPartition::default(),
        }
    }
}

impl DiagnosticsConfig {
    /// Only the energy ledger.
    pub fn energy_only() -> Self {
        Self {
            besov: false,
            gamma: false,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub theta_l2: f64,
    /// `int_0^t ||theta||^2_{Hdot^{beta/2}}`.
    pub theta_dissipation: f64,
    pub u_l2: f64,
    /// `int_0^t ||u||^2_{Hdot^{alpha/2}}`.
    pub u_dissipation: f64,
    pub theta_lp: Vec<(f64, f64)>,
    pub theta_mean: f64,
    pub omega_mean: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyLedger {
    pub samples: Vec<EnergySample>,
    /// Largest Biot-Savart divergence defect over all stages of all steps.
    pub max_divergence: f64,
}

impl EnergyLedger {
    /// Relative defect of `||theta||^2 + 2 int ||theta||^2_{H^{beta/2}} = ||theta0||^2`.
    pub fn theta_identity_defects(&self) -> Vec<f64> {
        let e0 = self.samples[0].theta_l2.powi(2);
        self.samples
            .iter()
            .map(|s| {
                let lhs = s.theta_l2 * s.theta_l2 + 2.0 * s.theta_dissipation;
                if e0 == 0.0 {
                    lhs
                } else {
                    (lhs - e0) / e0
                }
            })
            .collect()
    }

    /// Smallest `||u0|| + t ||theta0|| - ||u(t)||`.
    pub fn u_inequality_margin(&self) -> f64 {
        let s0 = &self.samples[0];
        self.samples
            .iter()
            .map(|s| s0.u_l2 + s.t * s0.theta_l2 - s.u_l2)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `||theta(t)||_p / ||theta0||_p - 1` for each configured `p`.
    pub fn max_principle_excess(&self) -> Vec<(f64, f64)> {
        let s0 = &self.samples[0];
        s0.theta_lp
            .iter()
            .enumerate()
            .map(|(j, &(p, n0))| {
                let worst = self
                    .samples
                    .iter()
                    .map(|s| {
                        let v = s.theta_lp[j].1;
                        if n0 == 0.0 {
                            v
                        } else {
                            v / n0 - 1.0
                        }
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                (p, worst)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaSample {
    pub t: f64,
    pub gamma_l2: f64,
    pub gamma_lr: Vec<(f64, f64)>,
    /// `int_0^t ||Gamma||^2_{Hdot^{alpha/2}}`.
    pub gamma_h_int: f64,
    /// `(r, int_0^t ||Gamma||_{B^{2/r}_{r,1}})`.
    pub gamma_besov_int: Vec<(f64, f64)>,
    pub omega_lp: Vec<(f64, f64)>,
    /// `||theta||_{B^{1-alpha}_{inf,1}}`.
    pub theta_b: f64,
    /// `int_0^t ||u||_{B^1_{inf,1}}`.
    pub u_b_int: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GammaSeries {
    pub samples: Vec<GammaSample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub states: Vec<SimState>,
    pub final_state: SimState,
    pub energy: EnergyLedger,
    pub gamma: GammaSeries,
    pub steps: usize,
}

struct Sampler<'a> {
    params: BoussinesqParams,
    cfg: &'a DiagnosticsConfig,
    riesz: Vec<Complex64>,
    sym_gamma: Vec<f64>,
    last_besov: Option<(f64, Vec<f64>, f64)>,
    besov_int: Vec<f64>,
    u_b_int: f64,
}

impl Sampler<'_> {
    fn gamma_hat(&self, s: &SimState) -> SpectralField {
        s.omega_hat
            .sub(&crate::spectral::apply_table(&s.theta_hat, &self.riesz))
            .expect("same grid")
    }

    fn gamma_energy(&self, s: &SimState) -> f64 {
        weighted_energy(&self.gamma_hat(s), &self.sym_gamma)
    }

    fn sample(&mut self, s: &SimState, gamma_h_int: f64) -> Result<GammaSample> {
        let part = &self.cfg.partition;
        let g = self.gamma_hat(s);
        let gphys = g.inverse();
        let wphys = s.omega_hat.inverse();
        let mut gamma_lr = Vec::new();
        for &r in &self.cfg.r_tilde {
            gamma_lr.push((r, gphys.lp_norm(r)?));
        }
        let mut omega_lp = Vec::new();
        for &p in &self.cfg.p_list {
            omega_lp.push((p, wphys.lp_norm(p)?));
        }
        let (mut theta_b, mut u_b_int) = (0.0, 0.0);
        let mut gamma_besov_int = Vec::new();
        if self.cfg.besov {
            theta_b = part.besov_norm_hat(
                &s.theta_hat,
                &BesovSpec::new(1.0 - self.params.alpha, f64::INFINITY, 1.0),
            )?;
            let ub = part.besov_norm_vec(
                &[&s.u1_hat, &s.u2_hat],
                &BesovSpec::new(1.0, f64::INFINITY, 1.0),
            )?;
            let mut gb = Vec::new();
            for &r in &self.cfg.besov_r {
                gb.push(part.besov_norm_hat(&g, &BesovSpec::new(2.0 / r, r, 1.0))?);
            }
            if let Some((t0, gb0, ub0)) = &self.last_besov {
                let h = s.t - t0;
                self.u_b_int += 0.5 * h * (ub0 + ub);
                for (acc, (a, b)) in self.besov_int.iter_mut().zip(gb0.iter().zip(&gb)) {
                    *acc += 0.5 * h * (a + b);
                }
            }
            self.last_besov = Some((s.t, gb, ub));
            u_b_int = self.u_b_int;
            gamma_besov_int = self.cfg.besov_r.iter().copied().zip(self.besov_int.clone()).collect();
        }
        let gs = GammaSample {
            t: s.t,
            gamma_l2: g.l2_norm(),
            gamma_lr,
            gamma_h_int,
            gamma_besov_int,
            omega_lp,
            theta_b,
            u_b_int,
        };
        check_gamma_sample(&gs)?;
        Ok(gs)
    }
}

fn check_gamma_sample(g: &GammaSample) -> Result<()> {
    let mut vals = vec![
        ("gamma_l2", g.gamma_l2),
        ("gamma_h_int", g.gamma_h_int),
        ("theta_b", g.theta_b),
        ("u_b_int", g.u_b_int),
    ];
    vals.extend(g.gamma_lr.iter().map(|v| ("gamma_lr", v.1)));
    vals.extend(g.gamma_besov_int.iter().map(|v| ("gamma_besov_int", v.1)));
    vals.extend(g.omega_lp.iter().map(|v| ("omega_lp", v.1)));
    for (quantity, value) in vals {
        if !(value <= OVERFLOW_GUARD) {
            return Err(Error::BlowUp {
                t: g.t,
                quantity,
                value,
            });
        }
    }
    Ok(())
}

fn energy_sample(s: &SimState, theta_diss: f64, u_diss: f64, p_list: &[f64]) -> Result<EnergySample> {
    let th = s.theta_hat.inverse();
    let mut theta_lp = Vec::with_capacity(p_list.len());
    for &p in p_list {
        theta_lp.push((p, th.lp_norm(p)?));
    }
    Ok(EnergySample {
        t: s.t,
        theta_l2: s.theta_hat.l2_norm(),
        theta_dissipation: theta_diss,
        u_l2: s.u_l2(),
        u_dissipation: u_diss,
        theta_lp,
        theta_mean: s.theta_hat.mean(),
        omega_mean: s.omega_hat.mean(),
    })
}

/// Fourth-order running integral of `sum_k w_k |g_hat(k)|^2` from values and rates.
struct Accumulator {
    value: f64,
    last: (f64, f64),
}

impl Accumulator {
    fn new(v: f64, dv: f64) -> Self {
        Self {
            value: 0.0,
            last: (v, dv),
        }
    }

    fn push(&mut self, h: f64, v: f64, dv: f64) {
        let (v0, dv0) = self.last;
        self.value += 0.5 * h * (v0 + v) + h * h / 12.0 * (dv0 - dv);
        self.last = (v, dv);
    }
}

pub fn run(
    params: &BoussinesqParams,
    init: &SimState,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    cfg: &DiagnosticsConfig,
) -> Result<RunOutput> {
    run_observed(params, init, t_final, dt, sample_every, cfg, &mut |_| Ok(()))
}

/// As [`run`], handing every sampled state to `observer` as it is produced.
pub fn run_observed(
    params: &BoussinesqParams,
    init: &SimState,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    cfg: &DiagnosticsConfig,
    observer: &mut dyn FnMut(&SimState) -> Result<()>,
) -> Result<RunOutput> {
    if sample_every == 0 {
        return Err(Error::param("sample_every", 0.0, "must be positive"));
    }
    let steps = step_count(dt, t_final)?;
    let grid = init.grid();
    let stepper = Stepper::new(*params, grid, dt)?;
    guard(init)?;
    // d/dt sum w |omega|^2 with w = |k|^{alpha-2} gives the u dissipation.
    let u_weight: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let m2 = grid.modulus_sq(idx);
            if m2 == 0 {
                0.0
            } else {
                (m2 as f64).powf(0.5 * params.alpha - 1.0)
            }
        })
        .collect();
    let rates = |s: &SimState, a: &Pair| -> Result<(f64, f64, f64, f64)> {
        let dw = a.0.sub(&s.omega_hat.mul_table(&stepper.sym_a))?;
        let dth = a.1.sub(&s.theta_hat.mul_table(&stepper.sym_b))?;
        Ok((
            weighted_energy(&s.theta_hat, &stepper.sym_b),
            weighted_energy_rate(&s.theta_hat, &dth, &stepper.sym_b),
            weighted_energy(&s.omega_hat, &u_weight),
            weighted_energy_rate(&s.omega_hat, &dw, &u_weight),
        ))
    };
    let mut sampler = Sampler {
        params: *params,
        cfg,
        riesz: params.riesz().table(&grid)?,
        sym_gamma: stepper.sym_a.clone(),
        last_besov: None,
        besov_int: vec![0.0; cfg.besov_r.len()],
        u_b_int: 0.0,
    };

    let mut state = init.clone();
    let mut a = stepper.rhs(&state.omega_hat, &state.theta_hat, state.t)?;
    let (tv, tdv, uv, udv) = rates(&state, &a)?;
    let mut theta_acc = Accumulator::new(tv, tdv);
    let mut u_acc = Accumulator::new(uv, udv);
    let mut gamma_last = if cfg.gamma { sampler.gamma_energy(&state) } else { 0.0 };
    let mut gamma_int = 0.0;

    let mut energy = EnergyLedger::default();
    let mut gamma_series = GammaSeries::default();
    let mut states = Vec::new();
    energy.samples.push(energy_sample(&state, 0.0, 0.0, &cfg.p_list)?);
    if cfg.gamma {
        gamma_series.samples.push(sampler.sample(&state, 0.0)?);
    }
    observer(&state)?;
    if cfg.keep_states {
        states.push(state.clone());
    }
    for i in 0..steps {
        let mut next = stepper.advance(&state, &a)?;
        // Pin the clock to the grid so sample times are exact multiples of dt.
        next.t = (i + 1) as f64 * dt;
        let a_next = stepper.rhs(&next.omega_hat, &next.theta_hat, next.t)?;
        let (tv, tdv, uv, udv) = rates(&next, &a_next)?;
        theta_acc.push(dt, tv, tdv);
        u_acc.push(dt, uv, udv);
        if cfg.gamma {
            let gw = sampler.gamma_energy(&next);
            gamma_int += 0.5 * dt * (gamma_last + gw);
            gamma_last = gw;
        }
        state = next;
        a = a_next;
        if (i + 1) % sample_every == 0 || i + 1 == steps {
            energy
                .samples
                .push(energy_sample(&state, theta_acc.value, u_acc.value, &cfg.p_list)?);
            if cfg.gamma {
                gamma_series.samples.push(sampler.sample(&state, gamma_int)?);
            }
            observer(&state)?;
            if cfg.keep_states {
                states.push(state.clone());
            }
            log::debug!("t = {:.4}", state.t);
        }
    }
    energy.max_divergence = stepper.max_divergence();
    Ok(RunOutput {
        states,
        final_state: state,
        energy,
        gamma: gamma_series,
        steps,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCheck {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

/// The run-level invariants: theta identity, u inequality, maximum principle,
/// mean preservation and exact incompressibility.
pub fn check_invariants(ledger: &EnergyLedger) -> Vec<InvariantCheck> {
    let mut out = Vec::new();
    let worst_identity = ledger
        .theta_identity_defects()
        .into_iter()
        .fold(0.0_f64, |m, d| m.max(d.abs()));
    out.push(InvariantCheck {
        name: "theta_energy_identity".into(),
        value: worst_identity,
        tol: 1e-5,
        pass: worst_identity < 1e-5,
    });
    let margin = ledger.u_inequality_margin();
    out.push(InvariantCheck {
        name: "u_energy_inequality".into(),
        value: margin,
        tol: 1e-5,
        pass: margin >= -1e-5,
    });
    for (p, excess) in ledger.max_principle_excess() {
        out.push(InvariantCheck {
            name: format!("theta_max_principle_L{}", p_label(p)),
            value: excess,
            tol: 1e-6,
            pass: excess <= 1e-6,
        });
    }
    let s0 = &ledger.samples[0];
    let drift = ledger
        .samples
        .iter()
        .map(|s| (s.theta_mean - s0.theta_mean).abs().max(s.omega_mean.abs()))
        .fold(0.0_f64, f64::max);
    out.push(InvariantCheck {
        name: "mean_preservation".into(),
        value: drift,
        tol: 0.0,
        pass: drift == 0.0,
    });
    out.push(InvariantCheck {
        name: "biot_savart_divergence".into(),
        value: ledger.max_divergence,
        tol: 0.0,
        pass: ledger.max_divergence == 0.0,
    });
    out
}

/// `2`, `4`, `inf`.
pub fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub residual: f64,
    /// `||res||_{L^2}` relative to the largest term.
    pub relative: f64,
    pub terms: Vec<(&'static str, f64)>,
}

/// Defect of the `Gamma` equation
/// `d_t Gamma + u.grad Gamma + |D|^alpha Gamma = [R_alpha, u.grad] theta + |D|^beta R_alpha theta`
/// at the sample with time `t`, with a central difference in time.
pub fn gamma_residual(states: &[SimState], params: &BoussinesqParams, t: f64) -> Result<ResidualReport> {
    let i = states
        .iter()
        .position(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| Error::Trajectory(format!("no sample at t = {t}")))?;
    if i == 0 || i + 1 >= states.len() {
        return Err(Error::Trajectory(format!(
            "t = {t} is at the trajectory boundary; central difference unavailable"
        )));
    }
    let s = &states[i];
    let grid = s.grid();
    let riesz = params.riesz().table(&grid)?;
    let g = |s: &SimState| s.gamma_hat(params);
    let h = states[i + 1].t - states[i - 1].t;
    let dt_gamma = g(&states[i + 1]).sub(&g(&states[i - 1]))?.scale(1.0 / h);
    let gam = g(s);
    let mask = dealias_mask(&grid);
    let v = inverse_pair(&s.u1_hat.mul_table(&mask), &s.u2_hat.mul_table(&mask))?;
    let adv = advect_filtered(&v, &[&gam], &mask)?.pop().expect("one output");
    let diss = gam.mul_table(&dissipation_symbol(&grid, params.alpha));
    let comm = commutator_advect_hat(&s.u1_hat, &s.u2_hat, &s.theta_hat, params.alpha, ProductRule::TwoThirds)?;
    let rt = crate::spectral::apply_table(&s.theta_hat, &riesz);
    let src = rt.mul_table(&dissipation_symbol(&grid, params.beta));
    let res = dt_gamma.add(&adv)?.add(&diss)?.sub(&comm)?.sub(&src)?;
    let terms = vec![
        ("d_t Gamma", dt_gamma.l2_norm()),
        ("u.grad Gamma", adv.l2_norm()),
        ("|D|^alpha Gamma", diss.l2_norm()),
        ("[R_alpha, u.grad] theta", comm.l2_norm()),
        ("|D|^beta R_alpha theta", src.l2_norm()),
    ];
    let biggest = terms.iter().map(|t| t.1).fold(0.0, f64::max);
    let residual = res.l2_norm();
    Ok(ResidualReport {
        residual,
        relative: if biggest == 0.0 { 0.0 } else { residual / biggest },
        terms,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwinSample {
    pub t: f64,
    /// `||delta u(t)||_{B^0_{2,inf}}`.
    pub du: f64,
    /// `||delta theta(t)||_{B^{-alpha}_{2,inf}}`.
    pub dtheta: f64,
    /// Running sup of `du` plus running sup of `dtheta`.
    pub y: f64,
}

/// Runs `init` and `init + scale * perturbation` side by side.
#[allow(clippy::too_many_arguments)]
pub fn twin_run(
    params: &BoussinesqParams,
    init: &SimState,
    perturbation: &SimState,
    scale: f64,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    part: &DyadicPartition,
) -> Result<Vec<TwinSample>> {
    if sample_every == 0 {
        return Err(Error::param("sample_every", 0.0, "must be positive"));
    }
    let steps = step_count(dt, t_final)?;
    let grid = init.grid();
    same_grid(grid, perturbation.grid())?;
    let other = SimState::new(
        0.0,
        init.omega_hat.add(&perturbation.omega_hat.scale(scale))?,
        init.theta_hat.add(&perturbation.theta_hat.scale(scale))?,
    )?;
    let stepper = Stepper::new(*params, grid, dt)?;
    let u_spec = BesovSpec::new(0.0, 2.0, f64::INFINITY);
    let th_spec = BesovSpec::new(-params.alpha, 2.0, f64::INFINITY);
    let mut sup = (0.0_f64, 0.0_f64);
    let mut out = Vec::new();
    let mut record = |a: &SimState, b: &SimState, t: f64| -> Result<()> {
        let du1 = a.u1_hat.sub(&b.u1_hat)?;
        let du2 = a.u2_hat.sub(&b.u2_hat)?;
        let du = part.besov_norm_vec(&[&du1, &du2], &u_spec)?;
        let dth = part.besov_norm_hat(&a.theta_hat.sub(&b.theta_hat)?, &th_spec)?;
        sup = (sup.0.max(du), sup.1.max(dth));
        out.push(TwinSample {
            t,
            du,
            dtheta: dth,
            y: sup.0 + sup.1,
        });
        Ok(())
    };
    let (mut a, mut b) = (init.clone(), other);
    a.t = 0.0;
    record(&a, &b, 0.0)?;
    for i in 0..steps {
        let (na, nb) = rayon::join(|| stepper.step(&a), || stepper.step(&b));
        a = na?;
        b = nb?;
        if (i + 1) % sample_every == 0 || i + 1 == steps {
            record(&a, &b, (i + 1) as f64 * dt)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{self, Preset, PresetParams};

    fn params() -> BoussinesqParams {
        BoussinesqParams::new(0.95, 0.08).unwrap()
    }

    fn state(omega: RealField, theta: RealField) -> SimState {
        SimState::new(0.0, omega.forward().unwrap(), theta.forward().unwrap()).unwrap()
    }

    #[test]
    fn shear_mode_decays_without_self_advection() {
        let g = Grid::new(16).unwrap();
        let p = BoussinesqParams::new(0.7, 0.5).unwrap();
        let s0 = state(init::single_mode(g, 1, 0, 1.0, 0.0), RealField::zeros(g));
        let out = run(&p, &s0, 1.0, 1e-2, 100, &DiagnosticsConfig::energy_only()).unwrap();
        let want = init::single_mode(g, 1, 0, (-1.0_f64).exp(), 0.0);
        let err = out.final_state.omega_hat.inverse().sub(&want).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");
        // only pair-transform leakage from the omega product
        assert!(out.final_state.theta_hat.max_abs_coeff() < 1e-30);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::new(16).unwrap();
        let s0 = state(RealField::zeros(g), RealField::zeros(g));
        let out = run(&params(), &s0, 0.1, 1e-2, 1, &DiagnosticsConfig::default()).unwrap();
        assert_eq!(out.final_state.omega_hat.max_abs_coeff(), 0.0);
        assert_eq!(out.final_state.theta_hat.max_abs_coeff(), 0.0);
        assert!(out.gamma.samples.iter().all(|s| s.gamma_l2 == 0.0));
    }

    #[test]
    fn theta_forcing_injects_vorticity() {
        // omega0 = 0, theta0 = cos x1, alpha = beta = 1: u . grad vanishes, so
        // theta = e^{-t} cos x1 and omega = -t e^{-t} sin x1.
        let g = Grid::new(16).unwrap();
        let p = BoussinesqParams::new(1.0, 1.0).unwrap();
        let s0 = state(RealField::zeros(g), init::single_mode(g, 1, 0, 1.0, 0.0));
        let out = run(&p, &s0, 0.5, 1e-3, 500, &DiagnosticsConfig::energy_only()).unwrap();
        let t: f64 = 0.5;
        let want = RealField::from_fn(g, |x1, _| -t * (-t).exp() * x1.sin()).unwrap();
        let err = out.final_state.omega_hat.inverse().sub(&want).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn t_zero_gives_single_sample() {
        let g = Grid::new(16).unwrap();
        let d = init::build(Preset::TaylorGreenPlusMode, g, &PresetParams::default()).unwrap();
        let s0 = SimState::from_initial(&d).unwrap();
        let out = run(&params(), &s0, 0.0, 1e-3, 1, &DiagnosticsConfig::default()).unwrap();
        assert_eq!(out.energy.samples.len(), 1);
        assert_eq!(out.energy.samples[0].theta_l2, s0.theta_hat.l2_norm());
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn invariants_hold_on_random_run() {
        let g = Grid::new(32).unwrap();
        let d = init::build(Preset::Random, g, &PresetParams { seed: 3, ..Default::default() }).unwrap();
        let s0 = SimState::from_initial(&d).unwrap();
        let out = run(&params(), &s0, 0.5, 2e-3, 25, &DiagnosticsConfig::default()).unwrap();
        for c in check_invariants(&out.energy) {
            assert!(c.pass, "{c:?}");
        }
        assert_eq!(out.gamma.samples.len(), out.energy.samples.len());
        let int: Vec<f64> = out.energy.samples.iter().map(|s| s.theta_dissipation).collect();
        assert!(int.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn gamma_examples() {
        let g = Grid::new(16).unwrap();
        let p = BoussinesqParams::new(0.5, 0.5).unwrap();
        let s = state(RealField::zeros(g), init::single_mode(g, 1, 0, 1.0, 0.0));
        let want = RealField::from_fn(g, |x1, _| x1.sin()).unwrap();
        assert!(gamma(&s, &p).sub(&want).unwrap().max_abs() < 1e-14);
        let w = init::taylor_green_vorticity(g, 1.0);
        let s = state(w.clone(), RealField::from_fn(g, |_, x2| x2.cos()).unwrap());
        assert!(gamma(&s, &p).sub(&w).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn residual_small_and_boundary_rejected() {
        let g = Grid::new(32).unwrap();
        let p = params();
        let d = init::build(
            Preset::Random,
            g,
            &PresetParams { seed: 1, kmax: Some(3), omega_amp: 0.1, theta_amp: 0.1 },
        )
        .unwrap();
        let s0 = SimState::from_initial(&d).unwrap();
        let cfg = DiagnosticsConfig { keep_states: true, ..DiagnosticsConfig::energy_only() };
        let out = run(&p, &s0, 0.01, 1e-3, 1, &cfg).unwrap();
        let r = gamma_residual(&out.states, &p, 0.005).unwrap();
        assert!(r.relative < 1e-5, "{r:?}");
        assert!(gamma_residual(&out.states, &p, 0.0).is_err());
        assert!(gamma_residual(&out.states, &p, 0.01).is_err());
        let zero = SimState::new(0.0, SpectralField::zeros(g), SpectralField::zeros(g)).unwrap();
        let zs: Vec<SimState> = (0..3).map(|i| SimState { t: i as f64, ..zero.clone() }).collect();
        assert_eq!(gamma_residual(&zs, &p, 1.0).unwrap().relative, 0.0);
    }

    #[test]
    fn twin_run_basics() {
        let g = Grid::new(16).unwrap();
        let p = params();
        let part = DyadicPartition::default();
        let d = init::build(Preset::TaylorGreenPlusMode, g, &PresetParams::default()).unwrap();
        let s0 = SimState::from_initial(&d).unwrap();
        let zero = SimState::new(0.0, SpectralField::zeros(g), SpectralField::zeros(g)).unwrap();
        let ys = twin_run(&p, &s0, &zero, 1.0, 0.1, 1e-2, 2, &part).unwrap();
        assert!(ys.iter().all(|y| y.y == 0.0));
        // theta-only single mode in block 2: Y(0) = 2^{-2 alpha} scale / sqrt 2
        let pert = SimState::new(
            0.0,
            SpectralField::zeros(g),
            SpectralField::cosine_mode(g, 6, 0, 1.0, 0.0),
        )
        .unwrap();
        let ys = twin_run(&p, &s0, &pert, 1e-3, 0.1, 1e-2, 2, &part).unwrap();
        let want = (-2.0 * p.alpha).exp2() * 1e-3 / 2.0_f64.sqrt();
        assert!((ys[0].y - want).abs() < 1e-12 * want);
        assert!(ys.windows(2).all(|w| w[1].y >= w[0].y));
    }

    #[test]
    fn rejects_blow_up_and_cfl() {
        let g = Grid::new(16).unwrap();
        let s0 = state(init::taylor_green_vorticity(g, 1e13), RealField::zeros(g));
        assert!(matches!(
            run(&params(), &s0, 0.1, 1e-2, 1, &DiagnosticsConfig::energy_only()),
            Err(Error::BlowUp { .. })
        ));
        let s0 = state(init::taylor_green_vorticity(g, 100.0), RealField::zeros(g));
        assert!(matches!(
            run(&params(), &s0, 0.1, 1e-2, 1, &DiagnosticsConfig::energy_only()),
            Err(Error::Cfl { .. })
        ));
    }
}
