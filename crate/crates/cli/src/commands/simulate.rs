use std::fmt::Write as _;
use std::path::Path;

use bousspec::boussinesq::{
    check_invariants, gamma, p_label, run_observed, DiagnosticsConfig, RunOutput, SimState,
};
use bousspec::commutators::{verify_est1, verify_est2};
use bousspec::init::build;
use bousspec::littlewood_paley::{time_norm, trapezoid, DyadicPartition};
use bousspec::region::pi_contains;
use bousspec::spectral::Grid;
use serde_json::json;

use crate::config::{Diagnostics, RunConfig, SnapshotPolicy};
use crate::error::{CliError, CliResult};
use crate::snapshot::Snapshot;

/// Column names of `series.csv`; a function of the diagnostics toggles only.
pub fn series_columns(d: &Diagnostics) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "theta_L2", "theta_Linf", "u_L2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if d.gamma {
        cols.push("gamma_L2".into());
        cols.push("gamma_Hhalfalpha_int".into());
        for &p in &d.p_list {
            cols.push(format!("omega_L{}", p_label(p)));
        }
        for &r in &d.r_tilde {
            cols.push(format!("gamma_L{}", p_label(r)));
        }
    }
    if d.besov {
        cols.push("theta_B1malpha_inf1".into());
        cols.push("u_B1_inf1_int".into());
        for &r in &d.besov_r {
            cols.push(format!("gamma_B2over{}_{}1_int", p_label(r), p_label(r)));
        }
    }
    if d.commutator {
        cols.push("est1_ratio".into());
        cols.push("est2_ratio".into());
    }
    cols
}

fn core_config(d: &Diagnostics) -> DiagnosticsConfig {
    let mut p_list = d.p_list.clone();
    for p in [2.0, f64::INFINITY] {
        if !p_list.contains(&p) {
            p_list.push(p);
        }
    }
    DiagnosticsConfig {
        p_list,
        r_tilde: d.r_tilde.clone(),
        besov_r: d.besov_r.clone(),
        besov: d.besov,
        gamma: d.gamma || d.besov,
        keep_states: false,
        partition: DyadicPartition::default(),
    }
}

/// Number of sampled states, counting `t = 0`.
pub fn sample_count(steps: usize, every: usize) -> usize {
    1 + steps / every + usize::from(!steps.is_multiple_of(every))
}

pub fn snapshot_of(state: &SimState, cfg: &RunConfig) -> CliResult<Snapshot> {
    let mut s = Snapshot::new(state.grid().n());
    let (u1, u2) = state.velocity();
    s.push("omega", state.omega_hat.inverse().into_values())?;
    s.push("theta", state.theta_hat.inverse().into_values())?;
    s.push("u1", u1.into_values())?;
    s.push("u2", u2.into_values())?;
    s.push("gamma", gamma(state, &cfg.params).into_values())?;
    Ok(s)
}

#[derive(Default)]
struct Extras {
    times: Vec<f64>,
    commutator: Vec<(f64, f64)>,
    /// Per smoothing `p`: block norms of `theta` at each sample.
    theta_blocks: Vec<Vec<Vec<(i32, f64)>>>,
    omega_lp: Vec<Vec<f64>>,
}

fn smoothing_summary(cfg: &RunConfig, ex: &Extras, theta0: &SimState) -> CliResult<serde_json::Value> {
    let d = &cfg.diagnostics;
    let beta = cfg.params.beta;
    let th0 = theta0.theta_hat.inverse();
    let mut out = Vec::new();
    for (ip, &p) in d.smoothing_p.iter().enumerate() {
        let blocks = &ex.theta_blocks[ip];
        let omega_int = trapezoid(&ex.times, &ex.omega_lp[ip]);
        let rhs = th0.lp_norm(p)? + th0.max_abs() * omega_int;
        let qs: Vec<i32> = blocks[0].iter().map(|b| b.0).filter(|&q| q >= 0).collect();
        for &rho in &d.smoothing_rho {
            let w = if rho.is_infinite() { 0.0 } else { beta / rho };
            let lhs = qs
                .iter()
                .map(|&q| {
                    let g: Vec<f64> = blocks
                        .iter()
                        .map(|s| s.iter().find(|b| b.0 == q).map_or(0.0, |b| b.1))
                        .collect();
                    (q as f64 * w).exp2() * time_norm(&ex.times, &g, rho)
                })
                .fold(0.0, f64::max);
            out.push(json!({
                "p": p_label(p),
                "rho": p_label(rho),
                "lhs": lhs,
                "rhs": rhs,
                "ratio": if rhs > 0.0 { lhs / rhs } else { 0.0 },
            }));
        }
    }
    Ok(serde_json::Value::Array(out))
}

fn write_series(path: &Path, cols: &[String], cfg: &RunConfig, out: &RunOutput, ex: &Extras) -> CliResult<()> {
    let d = &cfg.diagnostics;
    let mut text = cols.join(",");
    text.push('\n');
    let find = |v: &[(f64, f64)], p: f64| v.iter().find(|x| x.0 == p).map(|x| x.1).unwrap_or(f64::NAN);
    for (i, e) in out.energy.samples.iter().enumerate() {
        let mut row = vec![e.t, e.theta_l2, find(&e.theta_lp, f64::INFINITY), e.u_l2];
        if d.gamma || d.besov {
            let g = &out.gamma.samples[i];
            if d.gamma {
                row.push(g.gamma_l2);
                row.push(g.gamma_h_int);
                row.extend(d.p_list.iter().map(|&p| find(&g.omega_lp, p)));
                row.extend(d.r_tilde.iter().map(|&r| find(&g.gamma_lr, r)));
            }
            if d.besov {
                row.push(g.theta_b);
                row.push(g.u_b_int);
                row.extend(d.besov_r.iter().map(|&r| find(&g.gamma_besov_int, r)));
            }
        }
        if d.commutator {
            row.push(ex.commutator[i].0);
            row.push(ex.commutator[i].1);
        }
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(text, "{}", line.join(",")).expect("string write");
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> CliResult<()> {
    let (alpha, beta) = (cfg.params.alpha, cfg.params.beta);
    let verdict = pi_contains(alpha, beta);
    if !verdict.inside {
        eprintln!("warning: (alpha, beta) = ({alpha}, {beta}) is outside Pi; running anyway");
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let grid = Grid::new(cfg.n)?;
    let init = SimState::from_initial(&build(cfg.init, grid, &cfg.preset_params())?)?;
    let dcfg = core_config(&cfg.diagnostics);
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let n_samples = sample_count(steps, cfg.sample_every);
    let snap_dir = cfg.out_dir.join("snapshots");
    if cfg.snapshots != SnapshotPolicy::None {
        std::fs::create_dir_all(&snap_dir)?;
    }
    let part = DyadicPartition::default();
    let d = &cfg.diagnostics;
    let mut ex = Extras {
        theta_blocks: vec![Vec::new(); d.smoothing_p.len()],
        omega_lp: vec![Vec::new(); d.smoothing_p.len()],
        ..Default::default()
    };
    let mut index = 0usize;
    let mut observer = |s: &SimState| -> bousspec::Result<()> {
        ex.times.push(s.t);
        if d.commutator {
            let (omega, theta) = (s.omega_hat.inverse(), s.theta_hat.inverse());
            let (u1, u2) = s.velocity();
            let e1 = verify_est1(&omega, &theta, alpha, alpha / 2.0, &part)?.ratio;
            let e2 = verify_est2((&u1, &u2), &theta, alpha, alpha - 1.0, 4.0, 1.0, &part)?.ratio;
            ex.commutator.push((e1, e2));
        }
        if d.smoothing {
            let omega = s.omega_hat.inverse();
            for (ip, &p) in d.smoothing_p.iter().enumerate() {
                ex.theta_blocks[ip].push(part.block_norms(&s.theta_hat, p)?);
                ex.omega_lp[ip].push(omega.lp_norm(p)?);
            }
        }
        let keep = match cfg.snapshots {
            SnapshotPolicy::None => false,
            SnapshotPolicy::All => true,
            SnapshotPolicy::Ends => index == 0 || index + 1 == n_samples,
        };
        if keep {
            let snap = snapshot_of(s, cfg).map_err(|e| bousspec::Error::Trajectory(e.to_string()))?;
            snap.write(&snap_dir.join(format!("snap_{index:05}.bqsf")))
                .map_err(|e| bousspec::Error::Trajectory(e.to_string()))?;
        }
        index += 1;
        Ok(())
    };
    let result = run_observed(
        &cfg.params,
        &init,
        cfg.t_final,
        cfg.dt,
        cfg.sample_every,
        &dcfg,
        &mut observer,
    );
    let region = json!({
        "inside": verdict.inside,
        "binding": verdict.binding,
        "beta_max": verdict.beta_max,
    });
    let report_path = cfg.out_dir.join("report.json");
    let out = match result {
        Ok(out) => out,
        Err(e) => {
            let err = CliError::from(e);
            let status = if matches!(err, CliError::BlowUp(_)) { "blow_up" } else { "error" };
            let report = json!({
                "config": cfg.to_json(),
                "region": region,
                "status": status,
                "error": err.to_string(),
                "pass": false,
            });
            std::fs::write(&report_path, serde_json::to_string_pretty(&report).expect("json"))?;
            return Err(err);
        }
    };
    let cols = series_columns(d);
    write_series(&cfg.out_dir.join("series.csv"), &cols, cfg, &out, &ex)?;

    let checks = check_invariants(&out.energy);
    let failures: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let last = out.energy.samples.last().expect("initial sample");
    let first = &out.energy.samples[0];
    let lp = |v: &[(f64, f64)]| -> serde_json::Value {
        v.iter().map(|(p, x)| (p_label(*p), json!(x))).collect::<serde_json::Map<_, _>>().into()
    };
    let mut report = json!({
        "config": cfg.to_json(),
        "region": region,
        "status": if failures.is_empty() { "ok" } else { "invariant_failure" },
        "steps": out.steps,
        "samples": out.energy.samples.len(),
        "columns": cols,
        "initial": {
            "theta_L2": first.theta_l2,
            "u_L2": first.u_l2,
            "theta_Lp": lp(&first.theta_lp),
        },
        "final": {
            "t": last.t,
            "theta_L2": last.theta_l2,
            "u_L2": last.u_l2,
            "theta_Lp": lp(&last.theta_lp),
            "theta_dissipation_int": last.theta_dissipation,
            "u_dissipation_int": last.u_dissipation,
            "theta_mean": last.theta_mean,
            "omega_mean": last.omega_mean,
        },
        "max_divergence": out.energy.max_divergence,
        "invariants": checks.iter().map(|c| json!({
            "name": c.name,
            "value": c.value,
            "tol": c.tol,
            "pass": c.pass,
        })).collect::<Vec<_>>(),
        "failures": failures,
        "pass": failures.is_empty(),
    });
    if d.smoothing {
        report["smoothing"] = smoothing_summary(cfg, &ex, &init)?;
    }
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).expect("json"))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("invariant checks failed: {}", failures.join(", "))))
    }
}
