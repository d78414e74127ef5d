use std::fmt::Write as _;
use std::path::Path;

use bousspec::region::{p_inf, pi_contains, pi_r_contains, sigma_sup, RegionVerdict};
use serde_json::json;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct RegionArgs {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub grid: Option<(usize, usize)>,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
}

/// `NxM` with both factors at least 2.
pub fn parse_grid(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::config(format!("invalid --grid `{s}`, expected NxM with N, M >= 2"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    if a < 2 || b < 2 {
        return Err(bad());
    }
    Ok((a, b))
}

/// `lo:hi` with `lo < hi`.
pub fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::config(format!("invalid range `{s}`, expected lo:hi"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    if !(a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn verdict_json(v: &RegionVerdict) -> serde_json::Value {
    let margins: serde_json::Map<_, _> = v
        .margins
        .iter()
        .map(|m| (m.name.to_string(), json!(m.value)))
        .collect();
    json!({
        "inside": v.inside,
        "binding": v.binding,
        "beta_max": v.beta_max,
        "margins": margins,
    })
}

/// Rows `alpha,beta,inside,binding` on an inclusive `na x nb` lattice.
pub fn pi_grid_csv(na: usize, nb: usize, ar: (f64, f64), br: (f64, f64)) -> String {
    let mut out = String::from("alpha,beta,inside,binding\n");
    for i in 0..na {
        let a = ar.0 + (ar.1 - ar.0) * i as f64 / (na - 1) as f64;
        for j in 0..nb {
            let b = br.0 + (br.1 - br.0) * j as f64 / (nb - 1) as f64;
            let v = pi_contains(a, b);
            writeln!(out, "{a},{b},{},{}", v.inside, v.binding).expect("string write");
        }
    }
    out
}

pub fn region(args: &RegionArgs, out_dir: &Path) -> CliResult<()> {
    if args.grid.is_none() && (args.alpha.is_none() || args.beta.is_none()) {
        let missing = if args.alpha.is_none() { "alpha" } else { "beta" };
        return Err(CliError::config(format!(
            "missing required flag --{missing} (or pass --grid NxM)"
        )));
    }
    if let (Some(a), Some(b)) = (args.alpha, args.beta) {
        let mut v = verdict_json(&pi_contains(a, b));
        v["alpha"] = json!(a);
        v["beta"] = json!(b);
        if let Some(r) = args.r {
            v["pi_r"] = verdict_json(&pi_r_contains(a, b, r)?);
            v["pi_r"]["r"] = json!(r);
        }
        match p_inf(a, b) {
            Ok(p) => v["p_inf"] = json!(p),
            Err(e) => v["p_inf_error"] = json!(e.to_string()),
        }
        if let Some(p) = args.p {
            let s = sigma_sup(a, p)?;
            v["sigma_sup"] = json!({ "p": p, "sup": s.sup, "nonempty": s.nonempty });
        }
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    }
    if let Some((na, nb)) = args.grid {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join("pi_grid.csv");
        std::fs::write(&path, pi_grid_csv(na, nb, args.alpha_range, args.beta_range))?;
        eprintln!("wrote {} ({} rows)", path.display(), na * nb);
    }
    Ok(())
}
