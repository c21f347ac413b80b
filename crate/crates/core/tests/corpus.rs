// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use cdcv_core::corpus::{check_taxonomy, load_corpus, load_taxonomy, run_corpus, CorpusCase, CorpusError};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn every_expectation_holds() {
    let m = run_corpus(&root(), None).unwrap();
    let failures: Vec<_> = m.failures().collect();
    assert!(failures.is_empty(), "{failures:#?}");
    assert!(m.rows.len() > 200);
}

#[test]
fn taxonomy_is_total() {
    let cases = load_corpus(&root()).unwrap();
    let tax = load_taxonomy(&root()).unwrap();
    check_taxonomy(&tax, &cases).unwrap();
    assert_eq!(tax.rows.iter().filter(|r| !r.cases.is_empty()).count(), 10);
}

#[test]
fn clean_twins_are_quiet() {
    let cases = load_corpus(&root()).unwrap();
    for c in cases.iter().filter(|c| c.name.ends_with("_clean")) {
        let l = &c.labels;
        assert!(l.findings.as_ref().unwrap().is_empty(), "{}", c.name);
        assert!(l.reference_failures.as_ref().unwrap().is_empty(), "{}", c.name);
        assert_eq!(l.msi.as_ref().unwrap().seeds, (1, 20), "{}", c.name);
        assert!(l.msi.as_ref().unwrap().failures.is_empty(), "{}", c.name);
    }
}

#[test]
fn missing_label_is_an_error() {
    let src = root().join("missing_sync");
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("partial");
    std::fs::create_dir(&case).unwrap();
    for f in ["rtl.v", "constraints.cdc", "stimulus.stim"] {
        std::fs::copy(src.join(f), case.join(f)).unwrap();
    }
    std::fs::write(case.join("labels.json"), r#"{"findings": ["MISSING_SYNC"]}"#).unwrap();
    assert!(matches!(CorpusCase::load(&case), Err(CorpusError::MissingLabel { field, .. }) if field == "syncs"));
}

#[test]
fn unmapped_taxonomy_row_is_an_error() {
    let cases = load_corpus(&root()).unwrap();
    let mut tax = load_taxonomy(&root()).unwrap();
    tax.rows[0].cases = vec!["no_such_case".into()];
    assert!(check_taxonomy(&tax, &cases).is_err());
    tax.rows[0].cases.clear();
    assert!(check_taxonomy(&tax, &cases).is_err());
}
