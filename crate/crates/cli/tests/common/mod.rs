#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bousspec")
}

pub fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn bousspec(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(bin());
    c.args(args).env_remove("BOUSSPEC_OUT").env_remove("BOUSSPEC_THREADS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("spawn bousspec")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Short coupled run into `dir`; extra flags appended.
pub fn small_run(dir: &Path, extra: &[&str], envs: &[(&str, &str)]) -> Output {
    let out = dir.to_str().expect("utf-8 path");
    let mut args = vec![
        "simulate", "--alpha", "0.95", "--beta", "0.08", "--n", "32", "--T", "0.02", "--dt", "1e-2",
        "--init", "random", "--seed", "3", "--sample-every", "1", "--out", out,
    ];
    args.extend_from_slice(extra);
    bousspec(&args, envs)
}

pub fn header(dir: &Path) -> String {
    let s = std::fs::read_to_string(dir.join("series.csv")).expect("series.csv");
    format!("{}\n", s.lines().next().unwrap_or(""))
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
