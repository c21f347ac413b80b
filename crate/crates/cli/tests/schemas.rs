// SPDX-License-Identifier: Apache-2.0

//! Every JSON file the CLI writes conforms to its schema in `schemas/`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn run(args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_cdcv"))
        .args(args)
        .env_remove("CDCV_OPTIONS")
        .output()
        .unwrap();
    assert!(o.status.code().unwrap() <= 4, "{}", String::from_utf8_lossy(&o.stderr));
}

fn check(schema: &str, file: &Path) {
    let s = load(&root().join("schemas").join(format!("{schema}.schema.json")));
    let v = jsonschema::validator_for(&s).unwrap_or_else(|e| panic!("{schema}: {e}"));
    let instance = load(file);
    let errors: Vec<String> = v.iter_errors(&instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{} vs {schema}: {errors:#?}", file.display());
}

#[test]
fn outputs_conform_to_schemas() {
    let t = tempfile::tempdir().unwrap();
    let out = |n: &str| t.path().join(n);
    let mut checked = 0;
    for case in ["mixed_schemes", "static_violation", "missing_rdc_sync", "async_fifo"] {
        let d = root().join("corpus").join(case);
        let (rtl, cons, stim) = (d.join("rtl.v"), d.join("constraints.cdc"), d.join("stimulus.stim"));
        let (rtl, cons, stim) = (rtl.to_str().unwrap(), cons.to_str().unwrap(), stim.to_str().unwrap());
        let (a, s, e) = (out(&format!("{case}_a")), out(&format!("{case}_s")), out(&format!("{case}_e")));
        run(&["analyze", rtl, "-c", cons, "-o", a.to_str().unwrap()]);
        run(&["simulate", rtl, "-c", cons, "-s", stim, "--seeds", "1..3", "-o", s.to_str().unwrap()]);
        run(&["explore", rtl, "-c", cons, "-s", stim, "-o", e.to_str().unwrap()]);
        for (schema, file) in [
            ("findings", a.join("findings.json")),
            ("pairs", a.join("pairs.json")),
            ("syncs", a.join("syncs.json")),
            ("manifest", a.join("manifest.json")),
            ("coverage", s.join("coverage.json")),
            ("coverage_report", s.join("coverage_report.json")),
            ("verdicts", s.join("verdicts.json")),
            ("msi_log", s.join("msi_log.json")),
            ("manifest", s.join("manifest.json")),
            ("explore", e.join("explore.json")),
            ("manifest", e.join("manifest.json")),
        ] {
            check(schema, &file);
            checked += 1;
        }
    }
    let budget = out("budget");
    let d = root().join("corpus/latency_msi");
    run(&[
        "explore",
        d.join("rtl.v").to_str().unwrap(),
        "-c",
        d.join("constraints.cdc").to_str().unwrap(),
        "-s",
        d.join("stimulus.stim").to_str().unwrap(),
        "--budget",
        "1",
        "-o",
        budget.to_str().unwrap(),
    ]);
    check("explore", &budget.join("explore.json"));
    let c = out("corpus");
    run(&["corpus", "--root", root().join("corpus").to_str().unwrap(), "--filter", "fifo", "-o", c.to_str().unwrap()]);
    check("matrix", &c.join("matrix.json"));
    check("manifest", &c.join("manifest.json"));
    assert_eq!(checked, 44);
}

#[test]
fn schemas_reject_malformed_output() {
    let s = load(&root().join("schemas/coverage.schema.json"));
    let v = jsonschema::validator_for(&s).unwrap();
    let bad: Value = serde_json::json!({
        "fingerprint": "xyz", "scope": "", "pairs": {}, "bins": {}, "seeds": [], "edges": 0
    });
    assert!(!v.is_valid(&bad));
}
