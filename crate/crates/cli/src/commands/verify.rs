use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use bousspec::boussinesq::{
    check_invariants, run, twin_run, BoussinesqParams, DiagnosticsConfig, SimState,
};
use bousspec::calibration::{
    commutator_fixture, fit_regularization, frozen, kernel_fixture, power_fixture,
    refinement_spread, smoothing_fixtures, CommutatorFamily, FixtureResult, TdEnsemble, HEADROOM,
    default_regularization_spec,
};
use bousspec::init::{build, random_band_limited, random_band_limited_hat, single_mode, Preset, PresetParams};
use bousspec::littlewood_paley::{BesovSpec, DyadicPartition};
use bousspec::spectral::{Grid, RealField, SpectralField};
use bousspec::transport_diffusion::{
    l2_identity_defects, mean_drift, solve_td, verify_max_principle, FnForcing, SteadyVelocity,
    TdOptions, TdProblem, ZeroForcing,
};
use serde_json::json;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Lp,
    Td,
    Commutator,
    Energy,
    Twin,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lp" => Ok(Suite::Lp),
            "td" => Ok(Suite::Td),
            "commutator" => Ok(Suite::Commutator),
            "energy" => Ok(Suite::Energy),
            "twin" => Ok(Suite::Twin),
            _ => Err(format!("unknown suite `{s}` (lp, td, commutator, energy, twin)")),
        }
    }
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Lp => "lp",
            Suite::Td => "td",
            Suite::Commutator => "commutator",
            Suite::Energy => "energy",
            Suite::Twin => "twin",
        }
    }
}

/// Suite parameters; `None` picks the suite's default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyArgs {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub n: Option<usize>,
    pub seeds: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

impl Check {
    fn ratio_of(lhs: f64, rhs: f64) -> f64 {
        if rhs != 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Passes when `lhs <= rhs`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            ratio: Self::ratio_of(lhs, rhs),
            pass: lhs <= rhs,
        }
    }

    /// Passes when `lhs < rhs`.
    pub fn lt(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            pass: lhs < rhs,
            ..Self::le(name, lhs, rhs)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "pass": self.pass,
        })
    }
}

fn grid(n: usize) -> CliResult<Grid> {
    Ok(Grid::new(n)?)
}

pub fn lp_suite(n: usize) -> CliResult<Vec<Check>> {
    let part = DyadicPartition::default();
    let g = grid(n)?;
    let mut out = vec![Check::le("partition_of_unity", part.partition_defect(&g), 1e-12)];
    let (mut recon, mut cross) = (0.0_f64, 0.0_f64);
    let (mut mono12, mut mono2i, mut l2band) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut bony = 0.0_f64;
    for seed in 0..5 {
        let f = random_band_limited_hat(g, n / 3, 1.0, seed)?;
        let blocks = part.blocks(&f);
        let mut sum = SpectralField::zeros(g);
        for (_, b) in &blocks {
            sum = sum.add(b)?;
        }
        recon = recon.max(sum.sub(&f)?.l2_norm() / f.l2_norm());
        for (j, bj) in &blocks {
            for (q, _) in &blocks {
                if (j - q).abs() >= 2 {
                    cross = cross.max(part.block(bj, *q)?.l2_norm() / f.l2_norm());
                }
            }
        }
        let b = |r: f64| part.besov_norm_hat(&f, &BesovSpec::new(0.3, 4.0, r));
        let (b1, b2, bi) = (b(1.0)?, b(2.0)?, b(f64::INFINITY)?);
        mono12 = mono12.max(b2 / b1);
        mono2i = mono2i.max(bi / b2);
        let h = part.besov_norm_hat(&f, &BesovSpec::new(0.0, 2.0, 2.0))?;
        l2band = l2band.max((h / f.l2_norm()).max(f.l2_norm() / h));
        let gf = random_band_limited_hat(g, n / 3, 1.0, seed + 100)?;
        let (t1, t2, r) = part.bony_decompose(&f, &gf)?;
        let prod = bousspec::spectral::padded_product(&f, &gf)?;
        bony = bony.max(t1.add(&t2)?.add(&r)?.sub(&prod)?.l2_norm() / prod.l2_norm());
    }
    out.push(Check::le("block_reconstruction", recon, 1e-12));
    out.push(Check::le("block_disjointness", cross, 1e-13));
    out.push(Check::le("besov_monotone_r1_r2", mono12, 1.0));
    out.push(Check::le("besov_monotone_r2_rinf", mono2i, 1.0));
    out.push(Check::le("b0_22_vs_l2_band", l2band, 2.0));
    out.push(Check::le("bony_identity", bony, 1e-10));
    // Bernstein: k = 1/2, L^2 -> L^inf, blocks 3..6 of a few point masses.
    let f = point_masses(g, &[(0.3, 1.1, 1.0), (2.0, 4.4, -0.7), (5.1, 0.6, 0.4)])?;
    let qmax = (((n / 2) as f64).log2().floor() as i32 - 1).min(6);
    let ratios: Vec<f64> = (3..=qmax)
        .map(|q| part.bernstein_ratio(&f, q, 0.5, 2.0, f64::INFINITY))
        .collect::<bousspec::Result<_>>()?;
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(Check::le("bernstein_band", hi / lo, 4.0));
    Ok(out)
}

/// `sum w_j delta(x - x_j)` with the Nyquist modes dropped.
fn point_masses(g: Grid, masses: &[(f64, f64, f64)]) -> CliResult<SpectralField> {
    let half = (g.n() / 2) as i64;
    let coeffs = (0..g.len())
        .map(|idx| {
            let (k1, k2) = g.wavevector(idx);
            if k1.abs() == half || k2.abs() == half {
                return num_complex::Complex64::new(0.0, 0.0);
            }
            masses
                .iter()
                .map(|&(x1, x2, w)| num_complex::Complex64::from_polar(w, -(k1 as f64 * x1 + k2 as f64 * x2)))
                .sum()
        })
        .collect();
    Ok(SpectralField::new(g, coeffs)?)
}

pub fn single_mode_error(beta: f64, dt: f64) -> CliResult<f64> {
    let g = grid(16)?;
    let prob = TdProblem {
        beta,
        velocity: Arc::new(SteadyVelocity::zero(g)),
        forcing: Arc::new(ZeroForcing),
        theta0: single_mode(g, 3, 0, 1.0, 0.0),
    };
    let traj = solve_td(&prob, &TdOptions { dt, t_final: 1.0, sample_every: usize::MAX })?;
    let want = single_mode(g, 3, 0, (-(3.0_f64.powf(beta))).exp(), 0.0);
    let got = traj.samples.last().expect("final sample").theta_hat.inverse();
    Ok(got.sub(&want)?.lp_norm(2.0)? / want.lp_norm(2.0)?)
}

/// Error at `t = 1` of a single mode forced by `cos(3t)`, against Duhamel's formula.
pub fn duhamel_error(beta: f64, dt: f64) -> CliResult<f64> {
    let g = grid(16)?;
    let w = 3.0;
    let lam = 2.0_f64.powf(beta);
    let mode = Arc::new(SpectralField::cosine_mode(g, 2, 0, 1.0, 0.0));
    let prob = TdProblem {
        beta,
        velocity: Arc::new(SteadyVelocity::zero(g)),
        forcing: Arc::new(FnForcing(move |t: f64| Ok(mode.scale((w * t).cos())))),
        theta0: RealField::zeros(g),
    };
    let traj = solve_td(&prob, &TdOptions { dt, t_final: 1.0, sample_every: usize::MAX })?;
    let amp = (lam * w.cos() + w * w.sin() - lam * (-lam).exp()) / (lam * lam + w * w);
    let got = traj.samples.last().expect("final sample").theta_hat.mode(2, 0).re * 2.0;
    Ok((got - amp).abs())
}

pub fn td_suite(beta: f64, n: usize) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    let e1 = single_mode_error(beta, 1e-3)?;
    out.push(Check::le("single_mode_decay_dt1e-3", e1, 1e-8));
    out.push(Check::le("single_mode_decay_dt5e-4", single_mode_error(beta, 5e-4)?, 1e-8));
    let (d1, d2) = (duhamel_error(beta, 0.1)?, duhamel_error(beta, 0.05)?);
    out.push(Check::le("duhamel_order_halving", d2, d1 / 8.0));
    let g = grid(n)?;
    let part = DyadicPartition::default();
    for seed in 0..3 {
        let prob = TdProblem {
            beta,
            velocity: Arc::new(SteadyVelocity::taylor_green(g, 1.0)),
            forcing: Arc::new(ZeroForcing),
            theta0: random_band_limited(g, 8, 1.0, seed)?,
        };
        let traj = solve_td(&prob, &TdOptions { dt: 0.01, t_final: 1.0, sample_every: 5 })?;
        let mp = verify_max_principle(&traj, &[2.0, 4.0, f64::INFINITY])?;
        for e in &mp.entries {
            out.push(Check::le(
                format!("max_principle_L{}_seed{seed}", bousspec::boussinesq::p_label(e.p)),
                -e.worst_margin,
                0.0,
            ));
        }
        let worst = l2_identity_defects(&traj).into_iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        out.push(Check::le(format!("l2_identity_seed{seed}"), worst, 1e-6));
        out.push(Check::le(format!("mean_conservation_seed{seed}"), mean_drift(&traj), 1e-12));
    }
    let ens = TdEnsemble {
        beta,
        ..TdEnsemble::default()
    };
    let reference = beta == TdEnsemble::default().beta;
    for r in smoothing_fixtures(&ens, 64, &[2.0, 4.0], &[1.0, 2.0, f64::INFINITY], &part)? {
        out.push(Check::le(
            format!("{}_holdout", r.name),
            r.holdout_max(),
            HEADROOM * r.calibration_max(),
        ));
        if reference {
            if let Some(f) = frozen(&r.name) {
                out.push(Check::le(format!("{}_frozen", r.name), r.overall_max(), HEADROOM * f));
            }
        }
    }
    if reference {
        let fit = fit_regularization(&ens, 64, &default_regularization_spec(), &part)?;
        out.push(Check::le("regularization_holdout", fit.fixture.holdout_max(), HEADROOM));
        if let Some(c) = frozen("regularization_c") {
            out.push(Check::le("regularization_c_frozen", fit.c, HEADROOM * c));
        }
    }
    Ok(out)
}

fn fixture_checks(out: &mut Vec<Check>, r: &FixtureResult, frozen_ok: bool) {
    out.push(Check::le(
        format!("{}_holdout", r.name),
        r.holdout_max(),
        HEADROOM * r.calibration_max(),
    ));
    if frozen_ok {
        if let Some(f) = frozen(&r.name) {
            out.push(Check::le(format!("{}_frozen", r.name), r.overall_max(), HEADROOM * f));
        }
    }
}

pub fn commutator_suite(alpha: f64, n: usize) -> CliResult<Vec<Check>> {
    let part = DyadicPartition::default();
    let reference = alpha == 0.9;
    let mut out = Vec::new();
    for fam in CommutatorFamily::defaults(alpha) {
        let r = commutator_fixture(fam, alpha, n, &part)?;
        fixture_checks(&mut out, &r, reference);
        if n != 64 {
            let coarse = commutator_fixture(fam, alpha, 64, &part)?;
            out.push(Check::lt(
                format!("{}_refinement_64_{n}", r.name),
                refinement_spread(&[coarse, r]),
                2.0,
            ));
        }
    }
    for r in kernel_fixture(n, 4.0, 2.0)? {
        fixture_checks(&mut out, &r, true);
    }
    let r = power_fixture(n, 4.0, 0.5, 0.9, &part)?;
    fixture_checks(&mut out, &r, true);
    Ok(out)
}

fn random_state(n: usize, seed: u64) -> CliResult<SimState> {
    let p = PresetParams {
        seed,
        kmax: Some(8),
        ..Default::default()
    };
    Ok(SimState::from_initial(&build(Preset::Random, grid(n)?, &p)?)?)
}

pub fn energy_suite(params: BoussinesqParams, n: usize, seeds: u64) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        let run = run(&params, &random_state(n, seed)?, 1.0, 5e-3, 10, &DiagnosticsConfig::energy_only())?;
        for c in check_invariants(&run.energy) {
            let lhs = if c.name == "u_energy_inequality" { -c.value } else { c.value };
            out.push(Check::le(format!("{}_seed{seed}", c.name), lhs, c.tol));
        }
    }
    Ok(out)
}

pub fn twin_suite(params: BoussinesqParams, n: usize, seeds: u64) -> CliResult<Vec<Check>> {
    let part = DyadicPartition::default();
    let mut out = Vec::new();
    for seed in 0..seeds {
        let s0 = random_state(n, seed)?;
        let pert = random_state(n, seed + 1000)?;
        let y = |scale: f64| -> CliResult<f64> {
            let series = twin_run(&params, &s0, &pert, scale, 0.5, 1e-2, 10, &part)?;
            Ok(series.last().expect("samples").y)
        };
        let ys = [y(1e-8)?, y(1e-6)?, y(1e-4)?];
        out.push(Check::lt(format!("order_1e-8_1e-6_seed{seed}"), ys[0], ys[1]));
        out.push(Check::lt(format!("order_1e-6_1e-4_seed{seed}"), ys[1], ys[2]));
        out.push(Check::le(format!("zero_perturbation_seed{seed}"), y(0.0)?, 0.0));
    }
    Ok(out)
}

pub fn run_suite(suite: Suite, args: &VerifyArgs) -> CliResult<(serde_json::Value, Vec<Check>)> {
    let coupled = || -> CliResult<BoussinesqParams> {
        Ok(BoussinesqParams::new(args.alpha.unwrap_or(0.95), args.beta.unwrap_or(0.08))?)
    };
    let seeds = args.seeds.unwrap_or(3);
    let (params, checks) = match suite {
        Suite::Lp => {
            let n = args.n.unwrap_or(128);
            (json!({ "n": n }), lp_suite(n)?)
        }
        Suite::Td => {
            let beta = args.beta.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&beta) {
                return Err(CliError::config(format!("--beta must lie in [0, 1], got {beta}")));
            }
            let n = args.n.unwrap_or(64);
            (json!({ "beta": beta, "n": n }), td_suite(beta, n)?)
        }
        Suite::Commutator => {
            let alpha = args.alpha.unwrap_or(0.9);
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(CliError::config(format!("--alpha must lie in ]0, 1[, got {alpha}")));
            }
            let n = args.n.unwrap_or(128);
            (json!({ "alpha": alpha, "n": n }), commutator_suite(alpha, n)?)
        }
        Suite::Energy => {
            let p = coupled()?;
            let n = args.n.unwrap_or(64);
            (
                json!({ "alpha": p.alpha, "beta": p.beta, "n": n, "seeds": seeds }),
                energy_suite(p, n, seeds)?,
            )
        }
        Suite::Twin => {
            let p = coupled()?;
            let n = args.n.unwrap_or(32);
            (
                json!({ "alpha": p.alpha, "beta": p.beta, "n": n, "seeds": seeds }),
                twin_suite(p, n, seeds)?,
            )
        }
    };
    Ok((params, checks))
}

pub fn verify(suite: Suite, args: &VerifyArgs, out_dir: &Path) -> CliResult<()> {
    let (params, checks) = run_suite(suite, args)?;
    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!(
            "[{}] {:<40} lhs={:.6e} rhs={:.6e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.lhs,
            c.rhs
        );
    }
    let report = json!({
        "suite": suite.name(),
        "params": params,
        "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        "pass": pass,
    });
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("verify_{}.json", suite.name()));
    std::fs::write(&path, serde_json::to_string_pretty(&report).expect("json"))?;
    if pass {
        Ok(())
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Err(CliError::Failed(format!("{} check(s) failed: {}", failed.len(), failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_semantics() {
        assert!(Check::le("a", 1.0, 1.0).pass);
        assert!(!Check::lt("a", 1.0, 1.0).pass);
        assert_eq!(Check::le("a", 0.0, 0.0).ratio, 0.0);
        assert!(Check::le("a", 1.0, 0.0).ratio.is_infinite());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Lp, Suite::Td, Suite::Commutator, Suite::Energy, Suite::Twin] {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }
}
