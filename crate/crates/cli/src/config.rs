//! Run configuration from an INI file with `[run]`, `[diagnostics]` and
//! `[output]` sections, overridden key by key from the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bousspec::boussinesq::{p_label, BoussinesqParams};
use bousspec::init::{Preset, PresetParams};
use bousspec::spectral::Grid;
use ini::Ini;

use crate::error::{CliError, CliResult};

pub const ENV_OUT: &str = "BOUSSPEC_OUT";
pub const ENV_THREADS: &str = "BOUSSPEC_THREADS";

const KNOWN: &[(&str, &[&str])] = &[
    (
        "run",
        &[
            "alpha",
            "beta",
            "n",
            "dt",
            "T",
            "seed",
            "init",
            "sample_every",
            "kmax",
            "omega_amp",
            "theta_amp",
        ],
    ),
    (
        "diagnostics",
        &[
            "energy",
            "gamma",
            "besov",
            "smoothing",
            "commutator",
            "p_list",
            "r_tilde",
            "besov_r",
            "smoothing_p",
            "smoothing_rho",
        ],
    ),
    ("output", &["dir", "snapshots"]),
];

/// `section.key -> raw value`, later layers replacing earlier ones.
#[derive(Clone, Debug, Default)]
pub struct Layers {
    values: BTreeMap<String, String>,
}

impl Layers {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let ini = Ini::load_from_file(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut layers = Self::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if props.iter().next().is_some() {
                    return Err(CliError::config("keys outside a section"));
                }
                continue;
            };
            let known = KNOWN
                .iter()
                .find(|(s, _)| *s == section)
                .ok_or_else(|| CliError::config(format!("unknown section [{section}]")))?;
            for (k, v) in props.iter() {
                if !known.1.contains(&k) {
                    return Err(CliError::config(format!("unknown key `{k}` in [{section}]")));
                }
                layers.values.insert(format!("{section}.{k}"), v.trim().to_string());
            }
        }
        Ok(layers)
    }

    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn short(key: &str) -> &str {
        key.split_once('.').map_or(key, |(_, k)| k)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::config(format!("invalid value `{v}` for `{}`", Self::short(key)))
            }),
        }
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn required<T: FromStr>(&self, key: &str) -> CliResult<T> {
        let (section, k) = key.split_once('.').unwrap_or(("run", key));
        self.get(key)?.ok_or_else(|| {
            CliError::config(format!("missing required key `{k}` (set [{section}] {k} or --{k})"))
        })
    }

    pub fn bool_or(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_bool(v).ok_or_else(|| {
                CliError::config(format!("invalid boolean `{v}` for `{}`", Self::short(key)))
            }),
        }
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_exponents(v).map_err(|m| {
                CliError::config(format!("invalid list `{v}` for `{}`: {m}", Self::short(key)))
            }),
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// Parses an exponent, accepting `inf`.
pub fn parse_exponent(v: &str) -> Result<f64, String> {
    let x: f64 = match v.trim() {
        "inf" | "Inf" | "infinity" => f64::INFINITY,
        s => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if !(x >= 1.0) {
        return Err(format!("exponent {x} is below 1"));
    }
    Ok(x)
}

pub fn parse_exponents(v: &str) -> Result<Vec<f64>, String> {
    let out: Vec<f64> = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_exponent)
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

pub fn format_exponents(v: &[f64]) -> String {
    v.iter().map(|&p| p_label(p)).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotPolicy {
    None,
    /// First and last sample.
    Ends,
    All,
}

impl FromStr for SnapshotPolicy {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "none" => Ok(SnapshotPolicy::None),
            "ends" => Ok(SnapshotPolicy::Ends),
            "all" => Ok(SnapshotPolicy::All),
            _ => Err(()),
        }
    }
}

impl SnapshotPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            SnapshotPolicy::None => "none",
            SnapshotPolicy::Ends => "ends",
            SnapshotPolicy::All => "all",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub gamma: bool,
    pub besov: bool,
    pub smoothing: bool,
    pub commutator: bool,
    pub p_list: Vec<f64>,
    pub r_tilde: Vec<f64>,
    pub besov_r: Vec<f64>,
    pub smoothing_p: Vec<f64>,
    pub smoothing_rho: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: BoussinesqParams,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub init: Preset,
    pub kmax: Option<usize>,
    pub omega_amp: f64,
    pub theta_amp: f64,
    pub sample_every: usize,
    pub diagnostics: Diagnostics,
    pub out_dir: PathBuf,
    pub snapshots: SnapshotPolicy,
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("`{name}` must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_layers(l: &Layers) -> CliResult<Self> {
        let alpha: f64 = l.required("run.alpha")?;
        let beta: f64 = l.required("run.beta")?;
        let params = BoussinesqParams::new(alpha, beta)?;
        let n: usize = l.or("run.n", 128)?;
        Grid::new(n)?;
        let dt = positive("dt", l.or("run.dt", 1e-3)?)?;
        let t_final: f64 = l.or("run.T", 1.0)?;
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(CliError::config(format!("`T` must be nonnegative, got {t_final}")));
        }
        let init = match l.raw("run.init") {
            None => Preset::TaylorGreenPlusMode,
            Some(s) => s.parse().map_err(CliError::Config)?,
        };
        let sample_every: usize = l.or("run.sample_every", 10)?;
        if sample_every == 0 {
            return Err(CliError::config("`sample_every` must be at least 1"));
        }
        let kmax: Option<usize> = l.get("run.kmax")?;
        if kmax == Some(0) {
            return Err(CliError::config("`kmax` must be at least 1"));
        }
        if !l.bool_or("diagnostics.energy", true)? {
            return Err(CliError::config(
                "`energy` diagnostics back the invariant checks and cannot be disabled",
            ));
        }
        let mut p_list = l.list_or("diagnostics.p_list", &[2.0, 4.0, f64::INFINITY])?;
        p_list.dedup();
        let diagnostics = Diagnostics {
            gamma: l.bool_or("diagnostics.gamma", true)?,
            besov: l.bool_or("diagnostics.besov", true)?,
            smoothing: l.bool_or("diagnostics.smoothing", false)?,
            commutator: l.bool_or("diagnostics.commutator", false)?,
            p_list,
            r_tilde: l.list_or("diagnostics.r_tilde", &[4.0])?,
            besov_r: l.list_or("diagnostics.besov_r", &[4.0])?,
            smoothing_p: l.list_or("diagnostics.smoothing_p", &[2.0, 4.0])?,
            smoothing_rho: l.list_or("diagnostics.smoothing_rho", &[1.0, 2.0, f64::INFINITY])?,
        };
        if diagnostics.smoothing_p.iter().any(|p| p.is_infinite()) {
            return Err(CliError::config("`smoothing_p` entries must be finite"));
        }
        let out_dir = l
            .raw("output.dir")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("bousspec_out"));
        let snapshots = match l.raw("output.snapshots") {
            None => SnapshotPolicy::Ends,
            Some(s) => s.parse().map_err(|_| {
                CliError::config(format!("invalid `snapshots` value `{s}` (none, ends or all)"))
            })?,
        };
        Ok(Self {
            params,
            n,
            dt,
            t_final,
            seed: l.or("run.seed", 0)?,
            init,
            kmax,
            omega_amp: l.or("run.omega_amp", 1.0)?,
            theta_amp: l.or("run.theta_amp", 1.0)?,
            sample_every,
            diagnostics,
            out_dir,
            snapshots,
        })
    }

    pub fn preset_params(&self) -> PresetParams {
        PresetParams {
            seed: self.seed,
            kmax: self.kmax,
            omega_amp: self.omega_amp,
            theta_amp: self.theta_amp,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let d = &self.diagnostics;
        serde_json::json!({
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "n": self.n,
            "dt": self.dt,
            "T": self.t_final,
            "seed": self.seed,
            "init": self.init.name(),
            "kmax": self.kmax,
            "omega_amp": self.omega_amp,
            "theta_amp": self.theta_amp,
            "sample_every": self.sample_every,
            "diagnostics": {
                "gamma": d.gamma,
                "besov": d.besov,
                "smoothing": d.smoothing,
                "commutator": d.commutator,
                "p_list": format_exponents(&d.p_list),
                "r_tilde": format_exponents(&d.r_tilde),
                "besov_r": format_exponents(&d.besov_r),
                "smoothing_p": format_exponents(&d.smoothing_p),
                "smoothing_rho": format_exponents(&d.smoothing_rho),
            },
            "snapshots": self.snapshots.name(),
        })
    }
}
