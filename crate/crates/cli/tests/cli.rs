use std::path::PathBuf;
use std::process::{Command, Output};

fn nqi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nqi")).args(args).output().expect("binary runs")
}

fn circuit(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "circuits", name].iter().collect();
    p.to_string_lossy().into_owned()
}

/// Rows of a CSV report as maps from column name to cell, skipping the
/// leading `#` line.
fn rows(out: &Output) -> Vec<std::collections::HashMap<String, String>> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| headers.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

#[test]
fn mz_sweep_rows() {
    let out = nqi(&["mz-sweep", "--n-min", "1", "--n-max", "4"]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["N"], "1");
    assert!(num(&rows[0]["simulated_success"]) < 1e-12);
    for r in &rows {
        assert!(num(&r["abs_diff"]) < 1e-10);
    }
    let header = String::from_utf8(out.stdout).unwrap().lines().nth(1).unwrap().to_string();
    assert_eq!(header, "N,simulated_success,closed_form,abs_diff,fidelity,sample,alpha,beta");

    let two = rows_of(&["mz-sweep", "--n-min", "2", "--n-max", "2"]);
    assert_eq!(two[0]["closed_form"], "0.25");
    let big = rows_of(&["mz-sweep", "--n-min", "1000", "--n-max", "1000"]);
    assert!(num(&big[0]["simulated_success"]) > 0.9975);
}

fn rows_of(args: &[&str]) -> Vec<std::collections::HashMap<String, String>> {
    rows(&nqi(args))
}

#[test]
fn mz_sweep_rejects_bad_ranges() {
    for args in [["--n-min", "0", "--n-max", "3"], ["--n-min", "5", "--n-max", "4"], ["--n-min", "1", "--n-max", "4097"]] {
        let mut full = vec!["mz-sweep"];
        full.extend(args);
        let out = nqi(&full);
        assert_eq!(out.status.code(), Some(2));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn random_samples_are_seeded_and_deterministic() {
    let args = ["mz-sweep", "--n-min", "3", "--n-max", "5", "--random", "4", "--seed", "42"];
    let a = nqi(&args);
    let b = nqi(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.lines().next().unwrap().contains("seed=42"));
    assert_eq!(rows(&a).len(), 12);
    let c = nqi(&["mz-sweep", "--n-min", "3", "--n-max", "5", "--random", "4", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn json_mirrors_csv() {
    let out = nqi(&["mz-sweep", "--n-min", "2", "--n-max", "3", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
    assert_eq!(doc["rows"][0]["closed_form"], serde_json::json!(0.25));
    assert_eq!(doc["meta"]["seed"], "none");
    assert_eq!(doc["columns"][0], "N");
}

#[test]
fn output_file() {
    let dir = std::env::temp_dir().join(format!("nqi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sweep.csv");
    let out = nqi(&["mz-sweep", "--n-max", "3", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn fabry_perot_command() {
    let r = rows_of(&["fp", "--r", "0.9", "--alpha", "0.6", "--beta", "0.8i"]);
    assert!((num(&r[0]["success_prob"]) - 0.81).abs() < 1e-10);
    assert_eq!(r[0]["fidelity"], "1");
    let t = 1.0 - 0.81;
    assert!((num(&r[0]["transmitted_prob"]) - t * t * 0.64).abs() < 1e-10);
    for rr in ["0.3", "0.7", "0.95"] {
        let r = rows_of(&["fp", "--r", rr, "--absent"]);
        assert!((num(&r[0]["transmitted_prob"]) - 1.0).abs() < 1e-9);
    }
    let bad = nqi(&["fp", "--r", "0.9", "--t", "0.9"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn direct_prints_joint_amplitudes() {
    let r = rows_of(&["direct", "--alpha", "0.6", "--beta", "0.8"]);
    assert_eq!(r.len(), 12);
    let amp = |mode: &str, level: &str| {
        let row = r.iter().find(|x| x["mode"] == mode && x["level"] == level).unwrap();
        (num(&row["re"]), num(&row["im"]))
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let close = |(re, im): (f64, f64), want: f64| (re - want).abs() < 1e-12 && im.abs() < 1e-12;
    assert!(close(amp("a-", "m+"), 0.6 * h));
    assert!(close(amp("a+", "m-"), -0.8 * h));
    assert!(close(amp("S+", "g"), -0.6 * h));
    assert!(close(amp("S-", "g"), 0.8 * h));
    assert!(close(amp("a+", "m+"), 0.0));
    let bad = nqi(&["direct", "--pol", "z"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn run_circuit_files() {
    let fp = circuit("fp.nqi");
    let r = rows_of(&["run", &fp, "--set", "r=0.9"]);
    assert!((num(&r[0]["success_prob"]) - 0.81).abs() < 1e-10);
    let r = rows_of(&["run", &fp, "--set", "r=0.9", "--absent"]);
    assert!((num(&r[0]["failure_prob"]) - 1.0).abs() < 1e-9);

    let direct = circuit("direct.nqi");
    let r = rows_of(&["run", &direct, "--amplitudes", "--alpha", "0.6", "--beta", "0.8"]);
    assert_eq!(r.len(), 4);

    let mz = circuit("mz.nqi");
    let a = nqi(&["run", &mz, "--set", "N=6", "--random", "3", "--seed", "9"]);
    let b = nqi(&["run", &mz, "--set", "N=6", "--random", "3", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    for row in rows(&a) {
        assert!((num(&row["success_prob"]) - (std::f64::consts::PI / 12.0).cos().powi(12)).abs() < 1e-10);
    }
}

#[test]
fn run_errors_exit_two() {
    let mz = circuit("mz.nqi");
    let unbound = nqi(&["run", &mz]);
    assert_eq!(unbound.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unbound.stderr).contains("`N`"));
    assert_eq!(nqi(&["run", "does-not-exist.nqi"]).status.code(), Some(2));
    assert_eq!(nqi(&["run", &mz, "--set", "N"]).status.code(), Some(2));
    assert_eq!(nqi(&["frobnicate"]).status.code(), Some(2));

    let dir = std::env::temp_dir().join(format!("nqi-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.nqi");
    std::fs::write(&bad, "paths l u\nbs l z t=1 r=0\n").unwrap();
    let out = nqi(&["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 2") && msg.contains('z'), "{msg}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn nogo_check_reports() {
    let mz = circuit("mz.nqi");
    let r = rows_of(&["nogo-check", &mz, "--set", "N=8", "--random", "5", "--seed", "1"]);
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|x| x["witness_found"] == "true" && x["mask"] == "{}"));
    let r = rows_of(&["nogo-check", &mz, "--set", "N=8", "--mask", "m+", "--random", "5", "--seed", "1"]);
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|x| x["witness_found"] == "false" && x["mask"] == "{m+}"));
    assert_eq!(nqi(&["nogo-check", "missing.nqi"]).status.code(), Some(2));
    assert_eq!(nqi(&["nogo-check", &mz, "--set", "N=8", "--mask", "q"]).status.code(), Some(2));
}
