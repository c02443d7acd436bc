use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn mhdvac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhdvac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"
kind = "verify-54"
[physics]
epsilon = 0.5
sigmaTension = 0.1
[grid]
nx1 = 6
nx2 = 6
nx3 = 6
[solver]
tEnd_time = 0.1
"#;

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn verify_writes_series_and_run_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("out");
    let o = mhdvac(&["verify-54", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(o.status.code(), Some(0));
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("t,I,Itan1,Ivac,surfTerm,ratio54,divFluidMax,divVacMax,traceHNMax\n"));
    let run: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["config"]["grid"]["nx1"], 6);
    assert_eq!(run["config"]["output"], out.to_str().unwrap());
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let o = mhdvac(&["run", "--config", &cfg, "--out", out, "--seed", "9"]);
        assert!(o.status.success());
        let mut files: Vec<(String, Vec<u8>)> = walk(Path::new(out));
        files.sort();
        snapshots.push(files);
    }
    assert_eq!(snapshots[0], snapshots[1]);
}

fn walk(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            v.extend(walk(&p));
        } else {
            v.push((p.to_string_lossy().into_owned(), std::fs::read(&p).unwrap()));
        }
    }
    v
}

#[test]
fn zero_epsilon_exits_one_with_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &SMALL.replace("epsilon = 0.5", "epsilon = 0.0"));
    let out = tmp.path().join("out");
    let o = mhdvac(&["verify-54", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["status"], "error");
    assert_eq!(e["exitCode"], 1);
    assert_eq!(e["field"], "physics.epsilon");
    assert!(e["message"].as_str().unwrap().contains("epsilon must be positive"));
    assert!(out.join("error.json").exists());
}

#[test]
fn usage_errors_exit_one() {
    let o = mhdvac(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["exitCode"], 1);
    let o = mhdvac(&["verify-54", "--config", "x.toml", "--refine", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mhdvac(&["verify-54", "--config", "/nonexistent/x.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(mhdvac(&["--help"]).status.success());
}

#[test]
fn kind_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let o = mhdvac(&["mode-scan", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["field"], "kind");
}

#[test]
fn numerical_failures_map_to_exit_two() {
    let e = mhdvac::Error::Aborted {
        step: 12,
        time: 0.3,
        reason: "norm exceeded".into(),
    };
    let v = mhdvac::artifact::error_json(&e, e.exit_code());
    assert_eq!(v["exitCode"], 2);
    assert_eq!(v["step"], 12);
    assert_eq!(v["time"], 0.3);
    assert_eq!(mhdvac::Error::Numerical("singular".into()).exit_code(), 2);
    assert_eq!(mhdvac::Error::config("physics.epsilon", "x").exit_code(), 1);
}

#[test]
fn mode_scan_writes_one_growth_file_per_tension() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("bigE.toml"))
        .unwrap()
        .replace("points = 8", "points = 3")
        .replace("n1 = 60", "n1 = 24");
    let cfg = write(tmp.path(), "bigE.toml", &text);
    for s in ["0", "0.1"] {
        let out = tmp.path().join("out");
        let o = mhdvac(&["mode-scan", "--config", &cfg, "--out", out.to_str().unwrap(), "--s", s]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["growth_s0.csv", "growth_s0.1.csv"] {
        let csv = std::fs::read_to_string(tmp.path().join("out").join(name)).unwrap();
        assert!(csv.starts_with("k,k2,k3,growthRate,frequency,L1_length,n1,dim\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}

#[test]
fn matrix_audit_reports_ok() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("audit");
    let cfg = configs().join("audit.toml");
    let o = mhdvac(&["matrix-audit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let run: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["summary"]["symmetryOk"], true);
    assert_eq!(run["summary"]["spectraOk"], true);
}
