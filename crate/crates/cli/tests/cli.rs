use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn dbmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbmatch"))
        .args(args)
        .env_remove("DBMATCH_MAX_VALUES")
        .output()
        .unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = dbmatch(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Exit code and the final stderr line.
fn failure(out: &Output) -> (i32, String) {
    let stderr = String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), stderr.lines().last().unwrap_or("").to_string())
}

fn spec(name: &str) -> String {
    repo(&format!("specs/{name}.json")).display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mi_prints_the_analytic_rate() {
    let v = ok_json(&["mi", &spec("bsc_0.1")]);
    // 1 - h_b(0.1)
    assert!((v["entropy"]["mi"].as_f64().unwrap() - 0.5310044064107188).abs() < 1e-9);
    assert_eq!(v["entropy"]["mode"], "analytic");
    assert_eq!(v["invocation"][0], "mi");
}

#[test]
fn mi_monte_carlo_is_seeded() {
    let args = ["mi", &spec("gaussian_rho_0.9"), "--monte-carlo", "--m", "200", "--trials", "40", "--seed", "3"];
    let a = dbmatch(&args);
    let b = dbmatch(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["entropy"]["mode"], "monte_carlo");
    let mi = v["entropy"]["mi"].as_f64().unwrap();
    assert!((mi - 1.1979643381655696).abs() < 0.1, "{mi}");
}

#[test]
fn point_mass_match_is_all_ambiguous() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("p.bin");
    ok_json(&["generate", &spec("point_mass"), "--m", "8", "--n", "6", "--seed", "5", "--out", s(&pair)]);
    let v = ok_json(&["match", s(&pair), "--matcher", "typicality", "--score"]);
    assert_eq!(v["ambiguity_fraction"], 1.0);
    let f = v["result"]["success_fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f));
    assert!(v["result"].get("per_entry_correct").is_none());

    let v = ok_json(&["match", s(&pair), "--score", "--verbose"]);
    assert_eq!(v["result"]["per_entry_correct"].as_array().unwrap().len(), 6);
}

#[test]
fn truth_is_only_scored_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("p.bin");
    ok_json(&["generate", &spec("bsc_0.05"), "--m", "400", "--n", "20", "--seed", "9", "--out", s(&pair)]);
    let v = ok_json(&["match", s(&pair), "--matcher", "map_oracle"]);
    assert!(v["result"].get("success_fraction").is_none());
    let v = ok_json(&["match", s(&pair), "--matcher", "map", "--score"]);
    assert_eq!(v["result"]["success_fraction"], 1.0);
}

#[test]
fn match_writes_its_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("p.bin");
    let out = dir.path().join("r.json");
    ok_json(&["generate", &spec("uniform_2x2"), "--m", "4", "--n", "5", "--seed", "1", "--out", s(&pair)]);
    let printed = dbmatch(&["match", s(&pair), "--matcher", "random", "--seed", "4", "--out", s(&out)]);
    assert_eq!(std::fs::read(&out).unwrap(), printed.stdout);
}

#[test]
fn sweep_on_one_cell_writes_header_plus_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let plot = dir.path().join("s.dat");
    let v = ok_json(&[
        "sweep",
        s(&repo("configs/smoke.json")),
        "--out",
        s(&out),
        "--gnuplot",
        s(&plot),
    ]);
    assert_eq!(v["rows"], 5);
    assert_eq!(v["error_rows"], 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1 + 5);
    assert!(std::fs::read_to_string(&plot).unwrap().starts_with("# m=32"));
}

#[test]
fn sweep_output_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo("configs/smoke.json");
    let mut reports = Vec::new();
    for (k, workers) in ["1", "3"].iter().enumerate() {
        for format in ["csv", "json"] {
            let out = dir.path().join(format!("{k}.{format}"));
            ok_json(&["sweep", s(&config), "--out", s(&out), "--format", format, "--workers", workers]);
            reports.push(std::fs::read(&out).unwrap());
        }
    }
    assert_eq!(reports[0], reports[2]);
    assert_eq!(reports[1], reports[3]);
}

#[test]
fn every_shipped_spec_validates_and_matches_the_catalog() {
    let catalog = dbmatch::process::builtin_specs();
    let mut names = Vec::new();
    for entry in std::fs::read_dir(repo("specs")).unwrap() {
        let path = entry.unwrap().path();
        let v = ok_json(&["validate", s(&path)]);
        assert_eq!(v["kind"], "spec");
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let shipped = dbmatch::process::JointProcessSpec::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let builtin = catalog.iter().find(|b| b.name == name).expect("shipped spec is in the catalog");
        assert_eq!(shipped, builtin.spec, "{name}");
        names.push(name);
    }
    assert_eq!(names.len(), catalog.len());
}

#[test]
fn shipped_sweep_configs_parse() {
    for entry in std::fs::read_dir(repo("configs")).unwrap() {
        let path = entry.unwrap().path();
        dbmatch::harness::SweepConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn seed_determines_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let csv = dir.path().join(format!("{name}.csv"));
        ok_json(&[
            "generate",
            &spec("markov_coupled_flips"),
            "--m",
            "30",
            "--n",
            "12",
            "--seed",
            seed,
            "--out",
            s(&path),
            "--csv",
            s(&csv),
        ]);
        (std::fs::read(&path).unwrap(), std::fs::read(&csv).unwrap())
    };
    let a = gen("a", "11");
    let b = gen("b", "11");
    let c = gen("c", "12");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);

    let pair = dir.path().join("a");
    let m1 = dbmatch(&["match", s(&pair), "--epsilon", "0.3", "--seed", "2", "--score"]);
    let m2 = dbmatch(&["match", s(&pair), "--epsilon", "0.3", "--seed", "2", "--score"]);
    assert_eq!(m1.stdout, m2.stdout);
}

#[test]
fn commands_replay_from_their_echo() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.bin");
    let v = ok_json(&["generate", &spec("gaussian_rho_0.5"), "--m", "10", "--n", "7", "--seed", "3", "--out", s(&first)]);
    let mut echo: Vec<String> = v["invocation"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap().to_string())
        .collect();
    let second = dir.path().join("second.bin");
    let out_pos = echo.iter().position(|a| a == "--out").unwrap();
    echo[out_pos + 1] = s(&second).to_string();
    let args: Vec<&str> = echo.iter().map(String::as_str).collect();
    ok_json(&args);
    assert_eq!(std::fs::read(first).unwrap(), std::fs::read(second).unwrap());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["bogus"],
        vec!["generate", "x.json", "--m", "3"],
        vec!["match", "p.bin", "--matcher", "greedy"],
        vec!["generate", "x.json", "--m", "-1", "--n", "2", "--seed", "0", "--out", "o"],
    ] {
        let (code, line) = failure(&dbmatch(&args));
        assert_eq!(code, 2, "{args:?}");
        assert!(line.starts_with("error: usage: "), "{line}");
    }
    assert!(dbmatch(&["--help"]).status.success());
}

#[test]
fn validation_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad_spec = dir.path().join("bad.json");
    std::fs::write(&bad_spec, r#"{"variant": "iid_gaussian", "rho": 1.5}"#).unwrap();
    let (code, line) = failure(&dbmatch(&["validate", s(&bad_spec)]));
    assert_eq!(code, 3);
    assert!(line.starts_with("error: validation: ") && line.contains("rho"), "{line}");

    let (code, _) = failure(&dbmatch(&["mi", s(&dir.path().join("missing.json"))]));
    assert_eq!(code, 3);

    let pair = dir.path().join("p.bin");
    ok_json(&["generate", &spec("bsc_0.1"), "--m", "20", "--n", "8", "--seed", "0", "--out", s(&pair)]);
    let mut bytes = std::fs::read(&pair).unwrap();
    let k = bytes.len() / 2;
    bytes[k] ^= 1;
    std::fs::write(&pair, &bytes).unwrap();
    let (code, line) = failure(&dbmatch(&["validate", s(&pair)]));
    assert_eq!(code, 3);
    assert!(line.contains("checksum"), "{line}");

    let (code, line) = failure(&dbmatch(&["generate", &spec("bsc_0.1"), "--m", "0", "--n", "2", "--seed", "0", "--out", s(&pair)]));
    assert_eq!(code, 3, "{line}");

    let big = dir.path().join("big.bin");
    ok_json(&["generate", &spec("bsc_0.1"), "--m", "5", "--n", "20", "--seed", "0", "--out", s(&big)]);
    let (code, line) = failure(&dbmatch(&["match", s(&big), "--matcher", "map_oracle", "--oracle-cap", "10"]));
    assert_eq!(code, 3);
    assert!(line.contains("oracle cap"), "{line}");
}

#[test]
fn resource_cap_honours_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.bin");
    let run = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_dbmatch"))
            .args(["generate", &spec("bsc_0.1"), "--m", "10", "--n", "10", "--seed", "0", "--out", s(&out)])
            .env("DBMATCH_MAX_VALUES", cap)
            .output()
            .unwrap()
    };
    let (code, line) = failure(&run("99"));
    assert_eq!(code, 3);
    assert!(line.contains("resource cap"), "{line}");
    assert!(run("100").status.success());
}

#[test]
fn runtime_failures_exit_four() {
    let (code, line) = failure(&dbmatch(&[
        "generate",
        &spec("bsc_0.1"),
        "--m",
        "4",
        "--n",
        "4",
        "--seed",
        "0",
        "--out",
        "/nonexistent-dir/p.bin",
    ]));
    assert_eq!(code, 4);
    assert!(line.starts_with("error: runtime: "), "{line}");
}
