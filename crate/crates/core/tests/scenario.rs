use std::path::PathBuf;

use mhdvac::error::Error;
use mhdvac::scenario::{growth_file_name, run_scenario, Kind, Overrides, ScenarioConfig};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL_VERIFY: &str = r#"
kind = "verify-54"
seed = 3
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

fn config_field(e: Error) -> String {
    match e {
        Error::Config { field, .. } => field,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn every_shipped_config_resolves() {
    let mut seen = 0;
    for dir in [configs(), configs().join("suite")] {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "toml") {
                let cfg = ScenarioConfig::load(&p, None).unwrap();
                cfg.resolve(&Overrides::default())
                    .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
                seen += 1;
            }
        }
    }
    assert!(seen >= 10);
}

#[test]
fn defaults_fill_missing_sections() {
    let cfg = ScenarioConfig::from_toml_str("kind = \"simulate\"").unwrap();
    assert_eq!(cfg.kind, Kind::Simulate);
    assert_eq!(cfg.output, "out");
    assert_eq!(cfg.snapshot_every, 5);
    assert_eq!(cfg.refine, 1);
    assert_eq!(cfg.grid.nx1, 16);
}

#[test]
fn positive_epsilon_is_required() {
    let text = SMALL_VERIFY.replace("epsilon = 0.5", "epsilon = 0.0");
    let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
    let e = cfg.resolve(&Overrides::default()).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().contains("epsilon must be positive"), "{e}");
    assert_eq!(config_field(e), "physics.epsilon");
}

#[test]
fn unknown_keys_name_their_path() {
    let text = SMALL_VERIFY.replace("nx3 = 6", "nx3 = 6\nbogus = 1");
    let e = ScenarioConfig::from_toml_str(&text).unwrap_err();
    assert!(config_field(e).starts_with("grid"));
}

#[test]
fn subcommand_kind_must_match_file() {
    let e = ScenarioConfig::from_toml_with_kind(SMALL_VERIFY, Some(Kind::ModeScan)).unwrap_err();
    assert_eq!(config_field(e), "kind");
    let cfg = ScenarioConfig::from_toml_with_kind("[physics]\nepsilon = 0.5", Some(Kind::Simulate)).unwrap();
    assert_eq!(cfg.kind, Kind::Simulate);
}

#[test]
fn overrides_and_refinement() {
    let cfg = ScenarioConfig::from_toml_str(SMALL_VERIFY).unwrap();
    let r = cfg
        .clone()
        .resolve(&Overrides {
            output: Some("elsewhere".into()),
            seed: Some(42),
            refine: Some(2),
            sigma_tension: Some(0.3),
        })
        .unwrap();
    assert_eq!(r.output, "elsewhere");
    assert_eq!(r.seed, 42);
    assert_eq!(r.refine, 2);
    assert_eq!(r.physics.sigma_tension, 0.3);
    assert_eq!((r.grid.nx1, r.grid.nx2, r.grid.nx3), (12, 12, 12));
    let bad = cfg.resolve(&Overrides {
        refine: Some(3),
        ..Overrides::default()
    });
    assert!(bad.is_err());
}

#[test]
fn matrix_audit_rejects_refinement() {
    let cfg = ScenarioConfig::from_toml_str("kind = \"matrix-audit\"").unwrap();
    assert!(cfg
        .resolve(&Overrides {
            refine: Some(2),
            ..Overrides::default()
        })
        .is_err());
}

#[test]
fn verify_needs_a_source() {
    let text = format!("{SMALL_VERIFY}\n[source]\namplitude = [0, 0, 0, 0, 0, 0, 0, 0]\n");
    let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
    assert!(cfg.resolve(&Overrides::default()).is_err());
}

#[test]
fn run_json_echoes_resolved_config_and_is_deterministic() {
    let cfg = ScenarioConfig::from_toml_str(SMALL_VERIFY)
        .unwrap()
        .resolve(&Overrides::default())
        .unwrap();
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(a, b);
    let run: serde_json::Value = serde_json::from_slice(a.get("run.json").unwrap()).unwrap();
    assert_eq!(run["kind"], "verify-54");
    assert_eq!(run["config"]["physics"]["epsilon"], 0.5);
    assert_eq!(run["config"]["seed"], 3);
    let files: Vec<String> = serde_json::from_value(run["files"].clone()).unwrap();
    assert_eq!(files, a.names());

    let series = std::str::from_utf8(a.get("series.csv").unwrap()).unwrap();
    let mut lines = series.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,I,Itan1,Ivac,surfTerm,ratio54,divFluidMax,divVacMax,traceHNMax"
    );
    assert!(lines.all(|l| l.split(',').count() == 9));
}

#[test]
fn field_dumps_match_their_headers() {
    let text = r#"
kind = "simulate"
snapshotEvery = 5
fieldDumpEvery = 5
[initial]
amplitude = 0.05
[source]
amplitude = [0, 0, 0, 0, 0, 0, 0, 0]
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
    let cfg = ScenarioConfig::from_toml_str(&text)
        .unwrap()
        .resolve(&Overrides::default())
        .unwrap();
    let art = run_scenario(&cfg).unwrap();
    let headers: Vec<String> = art
        .names()
        .into_iter()
        .filter(|n| n.starts_with("fields/") && n.ends_with(".json"))
        .collect();
    assert!(headers.len() >= 6, "{headers:?}");
    for h in headers {
        let head: serde_json::Value = serde_json::from_slice(art.get(&h).unwrap()).unwrap();
        let shape: Vec<usize> = serde_json::from_value(head["shape"].clone()).unwrap();
        let bin = art.get(&h.replace(".json", ".bin")).unwrap();
        assert_eq!(bin.len(), 8 * shape.iter().product::<usize>(), "{h}");
        assert_eq!(head["dtype"], "f64");
    }
}

#[test]
fn growth_file_names_carry_sigma() {
    assert_eq!(growth_file_name(0.0), "growth_s0.csv");
    assert_eq!(growth_file_name(0.1), "growth_s0.1.csv");
}
