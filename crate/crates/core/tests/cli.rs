use std::process::Command;

use opgeom::cli::{meta_path, read_csv, run, ConfigOverrides, Experiment, ExperimentConfig};
use opgeom::operators::Family;

fn opgeom() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opgeom"))
}

fn small(experiment: Experiment, family: Family) -> ExperimentConfig {
    ExperimentConfig::resolve(ConfigOverrides {
        experiment: Some(experiment),
        family: Some(family),
        n_list: Some(vec![4, 8]),
        rho: (family == Family::Durrmeyer).then_some(1.5),
        grid_size: Some(65),
        k_max: Some(6),
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn csv_round_trips_for_every_experiment() {
    let dir = tempfile::tempdir().unwrap();
    for experiment in Experiment::ALL {
        let family = if experiment == Experiment::Invariants { Family::Durrmeyer } else { Family::Bernstein };
        let report = run(&small(experiment, family)).unwrap();
        let path = dir.path().join(format!("{}.csv", experiment.tag()));
        let meta = report.save(&path).unwrap();
        assert_eq!(meta, meta_path(&path));
        assert!(meta.exists());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("{}\n", experiment.header())));
        assert!(!text.contains('\r'));
        assert_eq!(read_csv(experiment, &path).unwrap(), report.rows, "{experiment}");
    }
}

#[test]
fn reports_are_deterministic() {
    let cfg = small(Experiment::Geom, Family::Durrmeyer);
    let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn parallel_runs_keep_row_order() {
    let mut cfg = small(Experiment::Geom, Family::Bernstein);
    cfg.n_list = vec![2, 3, 4, 5, 6, 7, 8];
    let serial = run(&cfg).unwrap().rows;
    cfg.jobs = 3;
    assert_eq!(run(&cfg).unwrap().rows, serial);
}

#[test]
fn binary_writes_csv_to_stdout() {
    let out = opgeom().args(["geom", "--family", "bernstein", "--n-list", "4,8", "--grid-size", "65"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(Experiment::Geom.header()));
    assert_eq!(lines.count(), 2);
}

#[test]
fn exit_status_follows_invariant_suite() {
    let pass = opgeom()
        .args(["invariants", "--family", "bernstein", "--n-list", "4,8", "--grid-size", "65", "--k-max", "5"])
        .output()
        .unwrap();
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stdout));
    // the Becker–Nessel upper bound fails for Z_n
    let fail = opgeom()
        .args(["invariants", "--family", "mkz", "--n-list", "4,8", "--grid-size", "65", "--k-max", "5"])
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains(",false"));
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        vec!["geom", "--grid-size", "5"],
        vec!["geom", "--n-list", "8,4"],
        vec!["geom", "--function", "nope"],
        vec!["geom", "--family", "durrmeyer"],
        vec!["geom", "--family", "mkz"],
    ] {
        let out = opgeom().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"family": "durrmeyer", "rho": 2.0, "n_list": [4, 8, 16], "grid_size": 65, "function": "sin_pi"}"#)
        .unwrap();
    let out = dir.path().join("geom.csv");
    let status = opgeom()
        .args(["geom", "--n-list", "4"])
        .arg("--config")
        .arg(&cfg)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta_path(&out)).unwrap()).unwrap();
    assert_eq!(meta["config"]["family"], "durrmeyer");
    assert_eq!(meta["config"]["rho"], 2.0);
    assert_eq!(meta["config"]["n_list"], serde_json::json!([4]));
    assert_eq!(meta["config"]["function"], "sin_pi");

    std::fs::write(&cfg, r#"{"famly": "bernstein"}"#).unwrap();
    let bad = opgeom().arg("geom").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
