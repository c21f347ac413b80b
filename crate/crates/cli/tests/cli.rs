// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn case(name: &str) -> [String; 3] {
    let d = root().join("corpus").join(name);
    ["rtl.v", "constraints.cdc", "stimulus.stim"].map(|f| d.join(f).display().to_string())
}

fn cdcv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdcv"))
        .args(args)
        .env_remove("CDCV_OPTIONS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn design<'a>(c: &'a [String; 3], cmd: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![cmd, &c[0], "-c", &c[1], "-o", out]
}

fn with_stim<'a>(c: &'a [String; 3], cmd: &'a str, out: &'a str) -> Vec<&'a str> {
    let mut v = design(c, cmd, out);
    v.extend(["-s", c[2].as_str()]);
    v
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_writes_outputs_and_manifest() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("a");
    let c = case("mixed_schemes");
    let o = cdcv(&design(&c, "analyze", out.to_str().unwrap()));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["findings.json", "pairs.json", "syncs.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "analyze");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
    assert_eq!(m["fingerprint"], json(&out.join("pairs.json"))["fingerprint"]);
}

#[test]
fn strict_mode_fails_on_error_findings() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().to_str().unwrap();
    let bug = case("missing_sync");
    let clean = case("missing_sync_clean");
    assert_eq!(code(&cdcv(&design(&bug, "analyze", out))), 0);
    let mut strict = design(&bug, "analyze", out);
    strict.push("--strict");
    assert_eq!(code(&cdcv(&strict)), 2);
    let mut strict = design(&clean, "analyze", out);
    strict.push("--strict");
    assert_eq!(code(&cdcv(&strict)), 0);
}

#[test]
fn parse_error_reports_position() {
    let t = tempfile::tempdir().unwrap();
    let rtl = t.path().join("bad.v");
    fs::write(&rtl, "module top(input a);\n  wire b = a +;\nendmodule\n").unwrap();
    let cons = t.path().join("c.cdc");
    fs::write(&cons, "").unwrap();
    let out = t.path().join("o");
    let o = cdcv(&["analyze", rtl.to_str().unwrap(), "-c", cons.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.v:2:"), "{err}");
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn bad_constraint_names_the_file() {
    let t = tempfile::tempdir().unwrap();
    let c = case("missing_sync");
    let cons = t.path().join("c.cdc");
    fs::write(&cons, "clock clk_a -period ten\n").unwrap();
    let o = cdcv(&["analyze", &c[0], "-c", cons.to_str().unwrap(), "-o", t.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("c.cdc: line 1"));
}

#[test]
fn simulate_exit_status_follows_verdicts() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().to_str().unwrap();
    assert_eq!(code(&cdcv(&with_stim(&case("wide_pulse"), "simulate", out))), 3);
    let v = json(&t.path().join("verdicts.json"));
    assert_eq!(v[0]["passed"], false);
    assert_eq!(code(&cdcv(&with_stim(&case("wide_pulse_clean"), "simulate", out))), 0);
}

#[test]
fn seed_range_is_deterministic_and_matches_merged_single_runs() {
    let t = tempfile::tempdir().unwrap();
    let c = case("toggling_pair");
    let dir = |n: &str| t.path().join(n).display().to_string();
    let (r1, r2) = (dir("r1"), dir("r2"));
    for d in [&r1, &r2] {
        let mut a = with_stim(&c, "simulate", d);
        a.extend(["--seeds", "1..4"]);
        assert_eq!(code(&cdcv(&a)), 0);
    }
    for f in ["coverage.json", "verdicts.json", "msi_log.json"] {
        let a = fs::read(Path::new(&r1).join(f)).unwrap();
        let b = fs::read(Path::new(&r2).join(f)).unwrap();
        assert!(a == b, "{f} differs between identical runs");
    }
    let mut singles = Vec::new();
    for s in 1..=4 {
        let d = dir(&format!("s{s}"));
        let seed = s.to_string();
        let mut a = with_stim(&c, "simulate", &d);
        a.extend(["--seed", &seed]);
        assert_eq!(code(&cdcv(&a)), 0);
        singles.push(format!("{d}/coverage.json"));
    }
    let merged = dir("merged.json");
    let mut a = vec!["merge-coverage"];
    a.extend(singles.iter().map(String::as_str));
    a.extend(["-o", &merged]);
    assert_eq!(code(&cdcv(&a)), 0);
    assert_eq!(fs::read(&merged).unwrap(), fs::read(format!("{r1}/coverage.json")).unwrap());
}

#[test]
fn no_msi_run_has_no_injections() {
    let t = tempfile::tempdir().unwrap();
    let c = case("toggling_pair");
    let mut a = with_stim(&c, "simulate", t.path().to_str().unwrap());
    a.extend(["--no-msi", "--vcd"]);
    assert_eq!(code(&cdcv(&a)), 0);
    let log = json(&t.path().join("msi_log.json"));
    assert_eq!(log[0]["seed"], serde_json::Value::Null);
    assert!(log[0]["events"].as_array().unwrap().is_empty());
    assert!(fs::read_to_string(t.path().join("trace.vcd")).unwrap().contains("$enddefinitions"));
}

#[test]
fn explore_counterexample_and_budget() {
    let t = tempfile::tempdir().unwrap();
    let c = case("latency_msi");
    let out = t.path().join("e");
    assert_eq!(code(&cdcv(&with_stim(&c, "explore", out.to_str().unwrap()))), 3);
    let e = json(&out.join("explore.json"));
    let v = &e["verdicts"]["latency:src->s2"];
    assert_eq!(v["status"], "counterexample");
    assert!(out.join(v["waveform"].as_str().unwrap()).exists());

    let small = t.path().join("b");
    let mut a = with_stim(&c, "explore", small.to_str().unwrap());
    a.extend(["--budget", "1"]);
    assert_eq!(code(&cdcv(&a)), 4);

    let clean = t.path().join("c");
    assert_eq!(code(&cdcv(&with_stim(&case("latency_msi_clean"), "explore", clean.to_str().unwrap()))), 0);
}

#[test]
fn options_file_from_environment() {
    let t = tempfile::tempdir().unwrap();
    let opts = t.path().join("opts.json");
    fs::write(&opts, r#"{"budget": 1, "probability": "0/1"}"#).unwrap();
    let c = case("latency_msi");
    let run = |cmd: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_cdcv"))
            .args(with_stim(&c, cmd, out))
            .env("CDCV_OPTIONS", &opts)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("explore", t.path().join("e").to_str().unwrap())), 4);
    let sim = t.path().join("s");
    assert_eq!(code(&run("simulate", sim.to_str().unwrap())), 0);
    assert!(json(&sim.join("msi_log.json"))[0]["events"].as_array().unwrap().is_empty());
    assert_eq!(json(&sim.join("manifest.json"))["options"]["probability"], "0/1");

    fs::write(&opts, r#"{"budgett": 1}"#).unwrap();
    assert_eq!(code(&run("explore", t.path().join("x").to_str().unwrap())), 1);
}

#[test]
fn coverage_from_another_design_is_rejected() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    assert_eq!(code(&cdcv(&with_stim(&case("toggling_pair"), "simulate", a.to_str().unwrap()))), 0);
    cdcv(&with_stim(&case("three_flags"), "simulate", b.to_str().unwrap()));
    let (ca, cb) = (a.join("coverage.json"), b.join("coverage.json"));
    let m = t.path().join("m.json");
    let o = cdcv(&["merge-coverage", ca.to_str().unwrap(), cb.to_str().unwrap(), "-o", m.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    assert!(!m.exists());
    let c = case("three_flags");
    let o = cdcv(&["report", &c[0], "-c", &c[1], "--coverage", ca.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    let c = case("toggling_pair");
    let o = cdcv(&["report", &c[0], "-c", &c[1], "--coverage", ca.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("total:"));
}

#[test]
fn replay_reproduces_outputs_byte_for_byte() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("s");
    let c = case("async_fifo");
    let mut a = with_stim(&c, "simulate", out.to_str().unwrap());
    a.extend(["--seeds", "3..5", "--vcd"]);
    assert_eq!(code(&cdcv(&a)), 0);
    let before: Vec<(String, Vec<u8>)> = {
        let mut v: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let saved = t.path().join("manifest.json");
    fs::copy(out.join("manifest.json"), &saved).unwrap();
    fs::remove_dir_all(&out).unwrap();
    assert_eq!(code(&cdcv(&["replay", saved.to_str().unwrap()])), 0);
    for (name, bytes) in before {
        assert!(fs::read(out.join(&name)).unwrap() == bytes, "{name} differs after replay");
    }
}

#[test]
fn replay_refuses_changed_inputs() {
    let t = tempfile::tempdir().unwrap();
    let c = case("three_flags");
    let rtl = t.path().join("rtl.v");
    fs::copy(&c[0], &rtl).unwrap();
    let out = t.path().join("a");
    let o = cdcv(&["analyze", rtl.to_str().unwrap(), "-c", &c[1], "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    fs::write(&rtl, fs::read_to_string(&rtl).unwrap() + "\n// edited\n").unwrap();
    let o = cdcv(&["replay", out.join("manifest.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("changed"));
}

#[test]
fn generate_writes_lint_clean_tree() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("gen");
    assert_eq!(code(&cdcv(&design(&case("mixed_schemes"), "generate", out.to_str().unwrap()))), 0);
    assert!(out.join("bind_all.sv").exists());
    assert!(out.join("coverage/cdc_cov.sv").exists());
}

#[test]
fn corpus_subcommand_writes_matrix() {
    let t = tempfile::tempdir().unwrap();
    let root = root().join("corpus");
    let o = cdcv(&["corpus", "--root", root.to_str().unwrap(), "--filter", "gray", "-o", t.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let m = json(&t.path().join("matrix.json"));
    assert!(m["rows"].as_array().unwrap().iter().all(|r| r["case"] == "gray_counter"));
}
