use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn prandtl(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_prandtl"));
    cmd.args(args);
    if let Some(dir) = out {
        cmd.arg("--out").arg(dir);
    }
    cmd.output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn lists_scenarios() {
    let out = prandtl(&["scenarios"], None);
    assert!(out.status.success());
    let s = text(&out.stdout);
    for name in ["example4.1", "example4.2", "favourable", "heat-oracle"] {
        assert!(s.contains(name), "{s}");
    }
}

#[test]
fn heat_run_writes_the_output_tree() {
    let dir = tempfile::tempdir().unwrap();
    let out = prandtl(&["run", "--scenario", "heat-oracle", "--override", "snapshot_every=500"], Some(dir.path()));
    assert!(out.status.success(), "{}", text(&out.stdout));
    assert!(!dir.path().join("event.json").exists());

    let nd = std::fs::read_to_string(dir.path().join("diagnostics.ndjson")).unwrap();
    let lines: Vec<Value> = nd.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // initial level plus 2000 steps per solver
    assert_eq!(lines.len(), 2 * 2001);
    let first = nd.lines().next().unwrap();
    let keys = ["solver", "step", "t", "min_wall_shear", "argmin_x", "G_value", "lemma21_margin", "inequality_margin"];
    let mut at = 0;
    for k in keys {
        let pos = first[at..].find(&format!("\"{k}\"")).unwrap_or_else(|| panic!("{k} missing or out of order"));
        at += pos;
    }
    assert!(lines.iter().filter(|l| l["solver"] == "crocco").all(|l| l["lemma21_margin"].is_number()));
    assert!(lines.iter().filter(|l| l["solver"] == "physical").all(|l| l["lemma21_margin"].is_null()));

    let snaps: Vec<String> = std::fs::read_dir(dir.path().join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    // t = 0, 0.05, 0.1, 0.15, 0.2 for each solver
    assert_eq!(snaps.len(), 10, "{snaps:?}");
    assert!(snaps.contains(&"u_0.000000000e0.csv".to_string()));

    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["scenario"], "heat-oracle");
    assert_eq!(meta["passed"], true);
    assert!(meta["design"]["crocco_wall_closure"].is_string());
}

#[test]
fn physical_event_is_written_as_an_array() {
    let dir = tempfile::tempdir().unwrap();
    let out = prandtl(&["run", "--scenario", "example4.1", "--override", "solver=physical"], Some(dir.path()));
    let events: Value = serde_json::from_slice(&std::fs::read(dir.path().join("event.json")).unwrap()).unwrap();
    let events = events.as_array().unwrap();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0]["source"], "physical");
    let t = events[0]["t_star"].as_f64().unwrap();
    assert!((t / 1.314e-5 - 1.0).abs() < 0.05, "{t}");
    assert!(out.status.success(), "{}", text(&out.stdout));
}

#[test]
fn config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# short heat run\nscenario = heat-oracle\nt_end = 0.01 # ten steps\nsolver = physical\n")
        .unwrap();
    let out = prandtl(&["run", "--config", cfg.to_str().unwrap()], Some(&dir.path().join("o")));
    assert!(out.status.success(), "{}", text(&out.stderr));
    let nd = std::fs::read_to_string(dir.path().join("o/diagnostics.ndjson")).unwrap();
    assert_eq!(nd.lines().count(), 101);

    let bad = prandtl(&["run", "--scenario", "heat-oracle", "--override", "foo=1"], Some(dir.path()));
    assert_eq!(bad.status.code(), Some(2));
    assert!(text(&bad.stderr).contains("unknown key 'foo'"));

    let small = prandtl(&["run", "--scenario", "heat-oracle", "--override", "n_y=4"], Some(dir.path()));
    assert_eq!(small.status.code(), Some(2));
    assert!(text(&small.stderr).contains("n_y"));

    let both = prandtl(&["run", "--scenario", "heat-oracle", "--override", "cfl=0.5", "--override", "dt=1e-4"], None);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn bound_refuses_favourable_and_reports_slow_growth() {
    let dir = tempfile::tempdir().unwrap();
    let fav = prandtl(&["blowup-bound", "--scenario", "favourable"], Some(dir.path()));
    assert_eq!(fav.status.code(), Some(2));
    assert!(text(&fav.stderr).contains("adverse classification required"));

    let out = prandtl(&["blowup-bound", "--scenario", "example4.2"], Some(dir.path()));
    assert!(out.status.success(), "{}", text(&out.stderr));
    let b: Value = serde_json::from_slice(&std::fs::read(dir.path().join("bound.json")).unwrap()).unwrap();
    assert_eq!(b["verdict"], "backflow-expected");
    let value = b["condition"]["value"].as_f64().unwrap() + b["condition"]["tail_estimate"].as_f64().unwrap();
    assert!(value >= 0.4 * 50f64.asinh());
    assert!((b["lambda2"].as_f64().unwrap() - 25.0 / 32.0).abs() < 1e-9);

    let small = prandtl(&["blowup-bound", "--scenario", "example4.1", "--override", "length=1e-3"], Some(dir.path()));
    assert!(small.status.success(), "{}", text(&small.stderr));
    assert!(text(&small.stdout).contains("condition not met"));
}

#[test]
fn validate_passes_and_detects_injected_fault() {
    let ok = prandtl(&["validate"], None);
    assert!(ok.status.success(), "{}", text(&ok.stdout));
    let bad = prandtl(&["validate", "--inject-wall-shear-error"], None);
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad.stdout).contains("[FAIL] heat_physical_wall_shear"));
}

#[test]
fn thread_count_must_be_positive() {
    let out =
        Command::new(env!("CARGO_BIN_EXE_prandtl")).arg("scenarios").env("PRANDTL_THREADS", "0").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
