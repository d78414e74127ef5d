use std::fmt::Write as _;
use std::path::Path;

use bousspec::boussinesq::{twin_run, BoussinesqParams, SimState};
use bousspec::init::{build, Preset, PresetParams};
use bousspec::littlewood_paley::{BesovSpec, DyadicPartition};
use bousspec::spectral::Grid;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::snapshot::Snapshot;

#[derive(Clone, Debug, PartialEq)]
pub struct BesovArgs {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub homogeneous: bool,
}

pub fn besov(snapshot: &Path, field: &str, args: &BesovArgs) -> CliResult<serde_json::Value> {
    let snap = Snapshot::read(snapshot)?;
    let f = snap.real_field(field)?;
    let spec = if args.homogeneous {
        BesovSpec::homogeneous(args.s, args.p, args.r)
    } else {
        BesovSpec::new(args.s, args.p, args.r)
    };
    spec.validate().map_err(CliError::from)?;
    let part = DyadicPartition::default();
    let hat = f.forward()?;
    let report = part.besov_report(&[&hat], &spec)?;
    Ok(json!({
        "snapshot": snapshot.display().to_string(),
        "field": field,
        "n": snap.n,
        "s": args.s,
        "p": bousspec::boussinesq::p_label(args.p),
        "r": bousspec::boussinesq::p_label(args.r),
        "homogeneous": args.homogeneous,
        "norm": report.norm,
        "mean_dropped": report.mean_dropped,
        "blocks": report.blocks.iter().map(|(q, v)| json!({ "q": q, "lp": v })).collect::<Vec<_>>(),
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwinArgs {
    pub params: BoussinesqParams,
    pub n: usize,
    pub seed: u64,
    pub scales: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub sample_every: usize,
}

/// Writes `twin.csv` and returns the final `Y` per scale.
pub fn twin(args: &TwinArgs, out_dir: &Path) -> CliResult<Vec<(f64, f64)>> {
    let grid = Grid::new(args.n)?;
    let pp = |seed| PresetParams {
        seed,
        kmax: Some(8),
        ..Default::default()
    };
    let base = SimState::from_initial(&build(Preset::Random, grid, &pp(args.seed))?)?;
    let pert = SimState::from_initial(&build(Preset::Random, grid, &pp(args.seed + 1000))?)?;
    let part = DyadicPartition::default();
    let mut csv = String::from("t,scale,du,dtheta,y\n");
    let mut finals = Vec::new();
    for &scale in &args.scales {
        let series = twin_run(
            &args.params,
            &base,
            &pert,
            scale,
            args.t_final,
            args.dt,
            args.sample_every,
            &part,
        )?;
        for s in &series {
            writeln!(csv, "{},{scale},{},{},{}", s.t, s.du, s.dtheta, s.y).expect("string write");
        }
        finals.push((scale, series.last().map_or(0.0, |s| s.y)));
    }
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("twin.csv"), csv)?;
    Ok(finals)
}
