use bousspec::calibration::*;
use bousspec::littlewood_paley::DyadicPartition;

fn close_to_frozen(name: &str, v: f64) {
    let f = frozen(name).unwrap_or_else(|| panic!("no frozen value for {name}"));
    assert!((v - f).abs() <= FROZEN_RTOL * f, "{name}: {v} vs frozen {f}");
}

#[test]
fn commutator_fixtures_reproduce_and_refine() {
    let part = DyadicPartition::default();
    for fam in CommutatorFamily::defaults(0.9) {
        let runs: Vec<FixtureResult> = [64, REFERENCE_N]
            .iter()
            .map(|&n| commutator_fixture(fam, 0.9, n, &part).unwrap())
            .collect();
        for r in &runs {
            assert!(r.holdout_pass(), "{} n={}", r.name, r.n);
        }
        close_to_frozen(fam.name(), runs[1].calibration_max());
        assert!(refinement_spread(&runs) < 2.0);
    }
}

#[test]
fn kernel_and_power_fixtures() {
    let part = DyadicPartition::default();
    for r in kernel_fixture(REFERENCE_N, 4.0, 2.0).unwrap() {
        assert!(r.holdout_pass());
        close_to_frozen(&r.name, r.calibration_max());
    }
    let r = power_fixture(REFERENCE_N, 4.0, 0.5, 0.9, &part).unwrap();
    assert!(r.holdout_pass());
    close_to_frozen("power", r.calibration_max());
}

#[test]
fn smoothing_fixtures_at_coarse_grid_stay_under_frozen_envelope() {
    let part = DyadicPartition::default();
    let ens = TdEnsemble::default();
    for r in smoothing_fixtures(&ens, 64, &[2.0, 4.0], &[1.0, 2.0, f64::INFINITY], &part).unwrap() {
        let f = frozen(&r.name).unwrap();
        assert!(r.overall_max() <= HEADROOM * f, "{}", r.name);
        assert!(r.holdout_pass());
    }
}
