use std::collections::BTreeMap;
use std::path::Path;

use abclab::cli::main_with;
use abclab::export::{export_orbit, read_orbit};
use abclab::run::{load, run, RunStatus};
use abclab::ExperimentConfig;
use abclab_core::geometry::{cyl_distance, CylinderPoint};
use abclab_core::text::{fmt_f64, parse_f64};
use abclab_core::turns::Turns;
use num_bigint::BigUint;

fn config(out: &Path, stages: usize, extra: &[(&str, &str)]) -> ExperimentConfig {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    pairs.insert("grid_n".into(), "32".into());
    pairs.insert("stages".into(), stages.to_string());
    pairs.insert("out".into(), out.display().to_string());
    for (k, v) in extra {
        pairs.insert(k.to_string(), v.to_string());
    }
    ExperimentConfig::from_pairs(&pairs).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn one_stage_runs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run(&config(a.path(), 1, &[])).unwrap();
    let mb = run(&config(b.path(), 1, &[])).unwrap();
    assert_eq!(ma.stages.len(), 1);
    assert_eq!(ma.status, RunStatus::Complete);
    assert_eq!(ma, mb);
    assert_eq!(read(&a.path().join("stage_001.txt")), read(&b.path().join("stage_001.txt")));
    let loaded = load(a.path()).unwrap();
    assert_eq!(loaded.stages.len(), 2);
    assert_eq!(loaded.records[0].to_text(), read(&a.path().join("stage_001.txt")).replace("\r", ""));
}

#[test]
fn resume_matches_uninterrupted_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&config(a.path(), 1, &[])).unwrap();
    let first = read(&a.path().join("stage_001.txt"));
    let resumed = run(&config(a.path(), 2, &[])).unwrap();
    run(&config(b.path(), 2, &[])).unwrap();
    assert_eq!(resumed.stages.len(), 2);
    assert_eq!(read(&a.path().join("stage_001.txt")), first);
    for f in ["stage_001.txt", "stage_002.txt", "manifest.txt"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
}

#[test]
fn invalid_config_is_rejected_before_computation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let code = main_with(["abclab", "run", "-q", "--eta", "0.3", "--eps", "0.2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(!out.exists());
    assert_eq!(main_with(["abclab", "run", "--stages", "0"]), 2);
    assert_eq!(main_with(["abclab", "frobnicate"]), 2);
}

#[test]
fn changed_config_cannot_resume_foreign_run() {
    let dir = tempfile::tempdir().unwrap();
    run(&config(dir.path(), 1, &[])).unwrap();
    let err = run(&config(dir.path(), 1, &[("seed", "9")])).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn cli_exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(main_with(["abclab", "run", "-q", "--grid_n", "32", "--stages", "1", "--tol_seam", "1e-30", "--out", d]), 0);
    let diag = |check: &str, stage: &str| main_with(["abclab", "diagnose", "-q", "--run", d, "--check", check, "--stage", stage]);
    assert_eq!(diag("symplectic", "1"), 0);
    assert_eq!(diag("lift", "1"), 1);
    assert_eq!(diag("no-such-check", "1"), 2);
    assert_eq!(diag("symplectic", "5"), 2);
    assert_eq!(main_with(["abclab", "liouville", "-q", "--run", d]), 0);
    let rep = read(&dir.path().join("reports/lift_stage_001.txt"));
    assert!(rep.contains("status = breach"), "{rep}");
    let density = read(&dir.path().join("reports/symplectic_stage_001.txt"));
    assert!(density.contains("status = pass"));
}

#[test]
fn exported_orbits_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run(&config(dir.path(), 1, &[])).unwrap();
    let loaded = load(dir.path()).unwrap();
    let flow = loaded.config.engine().flow;

    let p0 = dir.path().join("o0.txt");
    export_orbit(&loaded, 0, 0.0, 0.0, 1, &p0).unwrap();
    let text = read(&p0);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>(), ["0 0 0"]);
    assert!(text.contains("# alpha_exact = 0/1"));

    let p1 = dir.path().join("o1.txt");
    export_orbit(&loaded, 1, 0.3, -0.2, 40, &p1).unwrap();
    let text = read(&p1);
    assert!(text.contains("# alpha_exact = 1/4"));
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        for tok in line.split_whitespace().skip(1) {
            assert_eq!(fmt_f64(parse_f64(tok).unwrap()), tok);
        }
    }
    let rows = read_orbit(&text).unwrap();
    assert_eq!(rows.len(), 40);
    let s1 = loaded.stage(1).unwrap();
    let f = s1.map();
    let start = CylinderPoint { theta: Turns::from_f64(0.3), y: -0.2 };
    for w in rows.windows(2) {
        let prev = CylinderPoint { theta: Turns::from_f64(w[0].theta), y: w[0].y };
        let next = CylinderPoint { theta: Turns::from_f64(w[1].theta), y: w[1].y };
        assert!(cyl_distance(&f.eval(&prev, &flow).unwrap(), &next) <= 1e-12);
        let direct = s1.iterate(&start, &BigUint::from(w[1].k), &flow).unwrap();
        assert!(cyl_distance(&direct, &next) <= 1e-12);
    }
    assert!(export_orbit(&loaded, 4, 0.0, 0.0, 1, &p1).is_err());
    assert!(export_orbit(&loaded, 1, 0.0, 0.0, 0, &p1).is_err());
}
