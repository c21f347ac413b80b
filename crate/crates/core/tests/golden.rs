// SPDX-License-Identifier: Apache-2.0

//! Byte-exact comparison against checked-in outputs. Run with
//! `CDCV_BLESS=1` to rewrite them after an intended change.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cdcv_core::codegen::generate_all;
use cdcv_core::corpus::{load_corpus, CorpusCase};
use cdcv_core::coverage::report;
use cdcv_core::msi::{simulate, MsiConfig};

mod common;
use common::read_tree;

fn corpus_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn bless() -> bool {
    std::env::var_os("CDCV_BLESS").is_some()
}

fn check_tree(case: &CorpusCase, want: BTreeMap<String, String>) -> Vec<String> {
    let dir = case.dir.join("golden/gen");
    if bless() {
        let _ = fs::remove_dir_all(&dir);
        for (rel, text) in &want {
            let p = dir.join(rel);
            fs::create_dir_all(p.parent().unwrap()).unwrap();
            fs::write(p, text).unwrap();
        }
        return vec![];
    }
    let have = read_tree(&dir);
    let mut diffs = Vec::new();
    for (rel, text) in &want {
        match have.get(rel) {
            None => diffs.push(format!("{}: missing golden {rel}", case.name)),
            Some(h) if h != text => diffs.push(format!("{}: {rel} differs", case.name)),
            Some(_) => {}
        }
    }
    for rel in have.keys().filter(|r| !want.contains_key(*r)) {
        diffs.push(format!("{}: stale golden {rel}", case.name));
    }
    diffs
}

#[test]
fn generated_trees_match_goldens() {
    let cases = load_corpus(&corpus_root()).unwrap();
    let mut diffs = Vec::new();
    for case in &cases {
        let a = case.analysis().unwrap();
        let files = generate_all(&a).unwrap();
        let want = files.into_iter().map(|f| (f.path, f.content)).collect();
        diffs.extend(check_tree(case, want));
    }
    assert!(diffs.is_empty(), "{diffs:#?}");
}

#[test]
fn three_flag_coverage_model_has_one_covergroup_per_flag() {
    let cov = fs::read_to_string(corpus_root().join("three_flags/golden/gen/coverage/cdc_cov.sv")).unwrap();
    assert_eq!(cov.matches("covergroup ").count(), 3);
    assert_eq!(cov.matches("= 3'b000;").count(), 3);
}

#[test]
fn seeded_coverage_report_matches_golden() {
    let case = CorpusCase::load(&corpus_root().join("toggling_pair")).unwrap();
    let a = case.analysis().unwrap();
    let mut stim = case.stimulus_parsed().unwrap();
    stim.run_edges = 500;
    stim.run_clock = "clk_b".into();
    let (_, db) = simulate(&a, &stim, &MsiConfig::random(42, &a.constraints.options), false).unwrap();
    let rep = report(&db, &a.pairs).unwrap();
    let got = serde_json::to_string_pretty(&rep).unwrap() + "\n";
    let path = case.dir.join("golden/coverage_report_seed42.json");
    if bless() {
        fs::write(&path, &got).unwrap();
    }
    assert_eq!(fs::read_to_string(&path).unwrap(), got);
    assert_eq!(rep.percent, 100.0);
}
