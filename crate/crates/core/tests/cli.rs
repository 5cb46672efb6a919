use std::fs;
use std::process::Command as Proc;

use laserlab::cli::{emit_report, parse_config, run_command, Command, ConfigError, Overrides, Params};

fn smoke(seed: u64) -> Overrides {
    Overrides { seed: Some(seed), smoke: true, ..Default::default() }
}

#[test]
fn same_seed_gives_byte_identical_artifacts() {
    for cmd in Command::ALL {
        let cfg = parse_config(cmd, &smoke(99)).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = emit_report(&run_command(&cfg).unwrap(), a.path()).unwrap();
        let fb = emit_report(&run_command(&cfg).unwrap(), b.path()).unwrap();
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{cmd}: {}", x.display());
        }
    }
}

#[test]
fn different_seeds_differ() {
    let a = run_command(&parse_config(Command::Molmer, &smoke(1)).unwrap()).unwrap();
    let b = run_command(&parse_config(Command::Molmer, &smoke(2)).unwrap()).unwrap();
    assert_ne!(a.to_json(), b.to_json());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# teleport settings\nr = 0.3\ntrials = 40\nseed = 5\n").unwrap();
    let ov = Overrides { config: Some(path.clone()), set: vec!["r=0.5".into()], ..Default::default() };
    let cfg = parse_config(Command::Teleport, &ov).unwrap();
    assert_eq!(cfg.seed, 5);
    let Params::Teleport(p) = &cfg.params else { panic!("teleport params") };
    assert_eq!(p.r, 0.5);
    assert_eq!(p.trials, 40);
    // --trials beats the file as well; --seed beats the file's seed
    let ov = Overrides { config: Some(path), trials: Some(7), seed: Some(8), ..Default::default() };
    let cfg = parse_config(Command::Teleport, &ov).unwrap();
    let Params::Teleport(p) = &cfg.params else { panic!("teleport params") };
    assert_eq!((p.trials, p.r, cfg.seed), (7, 0.3, 8));
}

#[test]
fn unknown_file_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "squeze = 0.3\n").unwrap();
    let ov = Overrides { config: Some(path), seed: Some(1), ..Default::default() };
    match parse_config(Command::Teleport, &ov) {
        Err(ConfigError::UnknownKey { key, .. }) => assert_eq!(key, "squeze"),
        other => panic!("expected unknown key, got {other:?}"),
    }
}

#[test]
fn report_carries_conventions_and_schema() {
    let rep = run_command(&parse_config(Command::Separability, &smoke(1)).unwrap()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["conventions"]["vacuum_variance"], 0.5);
    assert!(v["conventions"]["beamsplitter"].as_str().unwrap().contains("(b - a)"));
    assert_eq!(v["seed"], 1);
}

#[test]
fn posterior_trace_has_step_plus_grid_columns() {
    let ov = Overrides { seed: Some(3), set: vec!["trials=2".into(), "grid=64".into()], ..Default::default() };
    let rep = run_command(&parse_config(Command::Molmer, &ov).unwrap()).unwrap();
    let t = rep.traces.iter().find(|t| t.name == "posterior_trial0").unwrap();
    let header = t.csv.lines().next().unwrap();
    let cols: Vec<&str> = header.split(',').collect();
    assert_eq!(cols.len(), 65);
    assert_eq!(cols[0], "step");
    assert_eq!(cols[1], "0.000000");
    for line in t.csv.lines().skip(1) {
        assert_eq!(line.split(',').count(), 65);
    }
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_laserlab"))
}

#[test]
fn binary_identity_check_passes() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["identity-check", "--seed", "1", "--dim", "20", "--set", "alpha=1", "--set", "beam_dim=8"])
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("identity-check.json")).unwrap()).unwrap();
    assert!(v["summary"]["max_trace_distance"].as_f64().unwrap() < 1e-10);
}

#[test]
fn binary_separability_dual_verdict() {
    let out = tempfile::tempdir().unwrap();
    let res = bin()
        .args(["separability", "--seed", "1", "--dim", "14", "--set", "r=0.4"])
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("PASS mixture_is_ppt") && err.contains("PASS pure_state_is_npt"), "{err}");
}

#[test]
fn binary_reports_truncation() {
    let out = tempfile::tempdir().unwrap();
    let res = bin()
        .args(["teleport", "--seed", "1", "--dim", "6", "--set", "beta=3"])
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_ne!(res.status.code(), Some(0));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("truncation"), "{err}");
}

#[test]
fn binary_requires_seed_and_known_keys() {
    let res = bin().args(["molmer", "--smoke"]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("seed"));
    let res = bin().args(["teleport", "--seed", "1", "--set", "squeze=1"]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("squeze"));
}

#[test]
fn binary_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let res = bin().args(["phase-lock", "--seed", "42", "--smoke"]).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(res.status.code(), Some(0));
    }
    assert_eq!(
        fs::read(a.path().join("phase-lock.json")).unwrap(),
        fs::read(b.path().join("phase-lock.json")).unwrap()
    );
}
