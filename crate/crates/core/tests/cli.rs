use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqed"))
        .args(args)
        .output()
        .expect("spawn cqed")
}

fn with_config(toml: &str, args: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, toml).unwrap();
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--config", path.to_str().unwrap()]);
    cqed(&full)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows below the `#` header and the column line.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn signature(o: &Output) -> Value {
    let line = stderr(o)
        .lines()
        .find_map(|l| l.strip_prefix("signature ").map(str::to_owned))
        .expect("signature line");
    serde_json::from_str(&line).unwrap()
}

#[test]
fn verify_defaults_pass_and_emit_json_lines() {
    let o = cqed(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["kind"], "header");
    assert_eq!(lines[0]["command"], "verify");
    assert!(lines.len() > 20);
    for c in &lines[1..] {
        assert!(c["check_id"].is_string());
        assert!(["pass", "fail", "degenerate"].contains(&c["status"].as_str().unwrap()));
    }
    assert!(stderr(&o).contains("0 anchored failures"));
}

#[test]
fn violated_constraint_exits_one() {
    let toml = "[model]\nomega0 = 2.0\nomega = 1.0\ng_re = 1.0\nlambda1_re = -0.5\nlambda2_re = -0.3\nenforce_resonance = true\n\n[verify]\nsuites = [\"decoupling\"]\n";
    let o = with_config(toml, &["verify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("FAIL decoupling.forbidden_coefficients"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn empty_suite_list_is_a_usage_error() {
    let o = with_config("[verify]\nsuites = []\n", &["verify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no suites selected"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_config_key_names_the_line() {
    let o = with_config("[evolve]\nn0 = 3\nt_maxx = 5.0\n", &["evolve"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("t_maxx") && err.contains("line 3"), "{err}");
}

#[test]
fn bad_invocations_exit_two() {
    assert_eq!(cqed(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cqed(&["evolve", "--n-max", "-3"]).status.code(), Some(2));
    let small = cqed(&["evolve", "--n-max", "2"]);
    assert_eq!(small.status.code(), Some(2));
    assert!(stderr(&small).contains("need at least 4"));
    assert_eq!(cqed(&["--help"]).status.code(), Some(0));
}

#[test]
fn evolve_classifies_by_parity() {
    for (n0, expect) in [(4, "INVERSION"), (5, "RETURN")] {
        let toml = format!("[evolve]\nn0 = {n0}\n");
        let o = with_config(&toml, &["evolve"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(signature(&o)["classification"], expect);
        let data = rows(&stdout(&o));
        assert_eq!(data.len(), 1001);
        let n1: f64 = data[0][1].parse().unwrap();
        assert!((n1 - n0 as f64).abs() < 1e-12);
    }
}

#[test]
fn evolve_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = cqed(&["evolve", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(&path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn zero_duration_gives_one_row() {
    let o = with_config("[evolve]\nn0 = 3\nt_max = 0.0\n", &["evolve"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let data = rows(&stdout(&o));
    assert_eq!(data.len(), 1);
    assert_eq!(data[0][0], "0.0");
}

#[test]
fn header_records_resolved_config() {
    let o = cqed(&["evolve", "--seed", "7", "--n-max", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(
        header.iter().any(|l| l.contains("n_max") && l.ends_with("6")),
        "{header:?}"
    );
    assert!(header.iter().any(|l| l.contains("g_re")));
}

#[test]
fn scan_over_n0_alternates() {
    let o = with_config("[scan]\naxis = \"n0\"\nvalues = [2, 3, 4, 5, 6, 7]\n", &["scan"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let data = rows(&stdout(&o));
    let got: Vec<(String, String)> = data.into_iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    for (k, (n0, class)) in got.iter().enumerate() {
        assert_eq!(n0, &(k + 2).to_string());
        assert_eq!(class, if k % 2 == 0 { "INVERSION" } else { "RETURN" });
    }
    assert_eq!(got.len(), 6);
}

#[test]
fn rejects_fractional_n0_scan() {
    let o = with_config("[scan]\naxis = \"n0\"\nvalues = [2.5]\n", &["scan"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_scan_grid_prints_header_only() {
    let o = with_config("[scan]\nvalues = []\n", &["scan"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(rows(&text).is_empty());
    assert_eq!(
        text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>(),
        ["n0,classification"]
    );
}

#[test]
fn decoupling_residual_grows_with_detuning() {
    let toml =
        "[scan]\naxis = \"lambda2_detuning\"\nvalues = [0.0, 0.01, 0.1, 1.0]\nextractor = \"decoupling_residual\"\n";
    let o = with_config(toml, &["scan"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: Vec<f64> = rows(&stdout(&o)).iter().map(|row| row[1].parse().unwrap()).collect();
    assert_eq!(r.len(), 4);
    assert!(r[0] <= 1e-10, "{r:?}");
    assert!(r.windows(2).all(|w| w[0] < w[1]), "{r:?}");
}

#[test]
fn coeffs_of_the_decoupling_map_have_no_forbidden_terms() {
    let o = cqed(&["coeffs"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["forbidden_residual"].as_f64().unwrap() <= 1e-10);
    assert!(doc["reconstruction_residual"].as_f64().unwrap() <= 1e-10);
    let c = &doc["coefficients"];
    // ω₀ S_z survives unchanged
    assert!((c["Sz"][0].as_f64().unwrap() - 2.0).abs() < 1e-10, "{c}");

    let o = with_config("[coeffs]\ntheta = 0.0\neta = 0.0\n", &["coeffs"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["forbidden_residual"].as_f64().unwrap() > 0.1);
}

#[test]
fn out_flag_writes_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coeffs.json");
    let o = cqed(&["coeffs", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(Path::new(&path).exists());
    let _: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
}
