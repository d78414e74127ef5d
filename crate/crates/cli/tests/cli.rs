mod common;

use bousspec::littlewood_paley::{BesovSpec, DyadicPartition};
use bousspec_cli::snapshot::Snapshot;
use common::*;

#[test]
fn missing_beta_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = bousspec(&["simulate", "--alpha", "0.95", "--out", d.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("beta"), "{}", stderr(&o));
}

#[test]
fn bad_values_and_keys_are_config_errors() {
    let d = tempfile::tempdir().unwrap();
    let ini = d.path().join("bad.ini");
    std::fs::write(&ini, "[run]\nalpha = 0.95\nbeta = 0.08\nbogus = 1\n").unwrap();
    let o = bousspec(&["simulate", "--config", ini.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert_eq!(code(&small_run(d.path(), &["--n", "12"], &[])), 2);
    assert_eq!(code(&bousspec(&["simulate", "--alpha", "1.5", "--beta", "0.1"], &[])), 2);
    assert_eq!(code(&bousspec(&["verify", "nope"], &[])), 2);
    assert_eq!(code(&bousspec(&["region", "--alpha", "0.9"], &[])), 2);
    assert_eq!(code(&bousspec(&["region", "--grid", "1x1"], &[])), 2);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let ini = d.path().join("run.ini");
    let out = d.path().join("o");
    std::fs::write(
        &ini,
        format!(
            "[run]\nalpha = 0.95\nbeta = 0.5\nn = 32\ndt = 0.01\nT = 0.02\n[output]\ndir = {}\nsnapshots = none\n",
            out.display()
        ),
    )
    .unwrap();
    let o = bousspec(&["simulate", "--config", ini.to_str().unwrap(), "--beta", "0.08"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&read(&out.join("report.json"))).unwrap();
    assert_eq!(report["config"]["beta"], 0.08);
    assert_eq!(report["status"], "ok");
    assert!(!out.join("snapshots").exists());
}

#[test]
fn outside_region_warns_but_runs() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let o = bousspec(&["simulate", "--alpha", "0.6", "--beta", "0.3", "--n", "16", "--T", "0.01", "--dt", "1e-2", "--out", out], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("outside Pi"));
}

#[test]
fn blow_up_exits_with_three() {
    let d = tempfile::tempdir().unwrap();
    let ini = d.path().join("blow.ini");
    std::fs::write(
        &ini,
        "[run]\nalpha = 0.95\nbeta = 0.08\nn = 32\ndt = 0.01\nT = 0.1\ninit = random\nomega_amp = 1e150\n",
    )
    .unwrap();
    let o = bousspec(&["simulate", "--config", ini.to_str().unwrap(), "--out", d.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&read(&d.path().join("report.json"))).unwrap();
    assert_eq!(report["status"], "blow_up");
}

#[test]
fn csv_headers_match_golden() {
    let d = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 3] = [
        ("series_default.csv", &[]),
        (
            "series_full.csv",
            &["--commutator", "true", "--smoothing", "true", "--p-list", "2,3,inf", "--r-tilde", "3,4"],
        ),
        ("series_minimal.csv", &["--gamma", "false", "--besov", "false"]),
    ];
    for (i, (name, extra)) in cases.iter().enumerate() {
        let dir = d.path().join(format!("r{i}"));
        let o = small_run(&dir, extra, &[]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(header(&dir), golden(name), "{name}");
        let rows = std::fs::read_to_string(dir.join("series.csv")).unwrap();
        let width = header(&dir).split(',').count();
        assert_eq!(rows.lines().count(), 4);
        assert!(rows.lines().all(|l| l.split(',').count() == width));
    }
}

#[test]
fn snapshots_round_trip_bit_exactly() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&small_run(d.path(), &["--snapshots", "all"], &[])), 0);
    let snaps: Vec<_> = std::fs::read_dir(d.path().join("snapshots")).unwrap().collect();
    assert_eq!(snaps.len(), 3);
    let path = d.path().join("snapshots/snap_00002.bqsf");
    let bytes = read(&path);
    let snap = Snapshot::read(&path).unwrap();
    assert_eq!(snap.to_bytes(), bytes);
    let names: Vec<&str> = snap.fields.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["omega", "theta", "u1", "u2", "gamma"]);

    let o = bousspec(
        &["besov", "--snapshot", path.to_str().unwrap(), "--field", "theta", "--s", "-0.95", "--p", "2", "--r", "inf"],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let want = DyadicPartition::default()
        .besov_norm(&snap.real_field("theta").unwrap(), &BesovSpec::new(-0.95, 2.0, f64::INFINITY))
        .unwrap();
    assert_eq!(v["norm"].as_f64().unwrap().to_bits(), want.to_bits());
}

#[test]
fn reruns_are_deterministic_across_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = ["1", "4"].iter().map(|t| (d.path().join(format!("t{t}")), *t)).collect();
    for (dir, t) in &dirs {
        let o = small_run(dir, &["--commutator", "true"], &[("BOUSSPEC_THREADS", t)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["series.csv", "snapshots/snap_00000.bqsf", "snapshots/snap_00002.bqsf"] {
        assert_eq!(read(&dirs[0].0.join(f)), read(&dirs[1].0.join(f)), "{f}");
    }
    assert_eq!(code(&small_run(d.path(), &[], &[("BOUSSPEC_THREADS", "zero")])), 2);
}

#[test]
fn out_dir_falls_back_to_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = bousspec(&["region", "--grid", "3x3"], &[("BOUSSPEC_OUT", d.path().to_str().unwrap())]);
    assert_eq!(code(&o), 0);
    assert!(d.path().join("pi_grid.csv").exists());
}

#[test]
fn region_point_and_grid() {
    let o = bousspec(&["region", "--alpha", "0.95", "--beta", "0.08", "--r", "3", "--p", "4"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["inside"], true);
    assert!(v["pi_r"]["inside"].is_boolean());
    assert!(v["p_inf"].as_f64().unwrap() > 2.0);
    let o = bousspec(&["region", "--alpha", "0.95", "--beta", "0.08"], &[]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["binding"], "b2");
    let o = bousspec(&["region", "--alpha", "0.8876275643042055", "--beta", "0.2"], &[]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["inside"], false);

    let d = tempfile::tempdir().unwrap();
    let o = bousspec(&["region", "--grid", "200x200", "--out", d.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(d.path().join("pi_grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("alpha,beta,inside,binding"));
    assert_eq!(lines.count(), 40_000);
}

#[test]
fn verify_lp_writes_report() {
    let d = tempfile::tempdir().unwrap();
    let o = bousspec(&["verify", "lp", "--n", "64", "--out", d.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&read(&d.path().join("verify_lp.json"))).unwrap();
    assert_eq!(v["suite"], "lp");
    assert_eq!(v["pass"], true);
    for c in v["checks"].as_array().unwrap() {
        for k in ["name", "lhs", "rhs", "ratio", "pass"] {
            assert!(c.get(k).is_some(), "{k}");
        }
    }
}

#[test]
fn twin_writes_series() {
    let d = tempfile::tempdir().unwrap();
    let o = bousspec(
        &["twin", "--alpha", "0.95", "--beta", "0.08", "--n", "16", "--T", "0.1", "--out", d.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("twin.csv")).unwrap();
    assert!(csv.starts_with("t,scale,du,dtheta,y\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
}
