// SPDX-License-Identifier: Apache-2.0

//! Labeled micro-design corpus and its expectation runner.
//!
//! A case lives in `<root>/<name>/` with `rtl.v`, `constraints.cdc`,
//! `stimulus.stim` and `labels.json`. `<root>/taxonomy.json` maps each
//! bug class to the cases that exhibit it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{analyze_sources, Analysis};
use crate::codegen::{generate_all, interp::interpret, lint::lint, property_name};
use crate::msi::{explore_exhaustive, parse_stimulus, reference_simulate, simulate, MsiConfig, SimTrace, Simulator, Stimulus};
use crate::pairs::CdcPair;
use crate::sync::{SyncInstance, SyncKind};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum CorpusError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("case `{case}` has no `{field}` label")]
    MissingLabel { case: String, field: String },
    #[error("case `{case}`: {message}")]
    Case { case: String, message: String },
    #[error("taxonomy: {message}")]
    Taxonomy { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncLabel {
    pub kind: String,
    /// Synchronizer chain depth; FIFO depth for asynchronous FIFOs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    pub members: Vec<String>,
}

impl SyncLabel {
    pub fn of(s: &SyncInstance) -> Self {
        let depth = match &s.kind {
            SyncKind::Ndff { depth } => Some(*depth),
            SyncKind::PulseToggle { ndff_depth, .. } | SyncKind::MuxEnable { ndff_depth, .. } => Some(*ndff_depth),
            SyncKind::AsyncFifo { depth, .. } => Some(*depth),
            SyncKind::UserDefined { .. } => None,
        };
        let mut members = s.member_names.clone();
        members.sort();
        SyncLabel {
            kind: s.kind.name().to_string(),
            depth,
            members,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub total: usize,
    pub synchronized: usize,
    pub unsynchronized: usize,
    pub suppressed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLabel {
    pub seeds: (u64, u64),
    pub failures: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreLabel {
    pub budget: u32,
    pub failures: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageLabel {
    pub seed: u64,
    pub run_edges: u64,
    pub run_clock: String,
    /// Pairs expected to hit all four bins.
    pub saturated: Vec<String>,
}

/// Ground truth of one case. Every field except `twin`, `coverage` and
/// `description` is required.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Labels {
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twin: Option<String>,
    pub findings: Option<Vec<String>>,
    pub syncs: Option<Vec<SyncLabel>>,
    pub pairs: Option<PairCounts>,
    pub reference_failures: Option<BTreeSet<String>>,
    pub msi: Option<SeedLabel>,
    pub explore: Option<ExploreLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageLabel>,
}

#[derive(Debug, Clone)]
pub struct CorpusCase {
    pub name: String,
    pub dir: PathBuf,
    pub rtl: String,
    pub constraints: String,
    pub stimulus: String,
    pub labels: Labels,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

impl CorpusCase {
    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let labels_path = dir.join("labels.json");
        let labels: Labels = serde_json::from_str(&read(&labels_path)?).map_err(|e| CorpusError::Io {
            path: labels_path.display().to_string(),
            message: e.to_string(),
        })?;
        let case = CorpusCase {
            rtl: read(&dir.join("rtl.v"))?,
            constraints: read(&dir.join("constraints.cdc"))?,
            stimulus: read(&dir.join("stimulus.stim"))?,
            name,
            dir: dir.to_path_buf(),
            labels,
        };
        case.check_labels()?;
        Ok(case)
    }

    fn check_labels(&self) -> Result<(), CorpusError> {
        let l = &self.labels;
        let missing = [
            ("findings", l.findings.is_none()),
            ("syncs", l.syncs.is_none()),
            ("pairs", l.pairs.is_none()),
            ("reference_failures", l.reference_failures.is_none()),
            ("msi", l.msi.is_none()),
            ("explore", l.explore.is_none()),
        ];
        match missing.iter().find(|(_, m)| *m) {
            Some((field, _)) => Err(CorpusError::MissingLabel {
                case: self.name.clone(),
                field: field.to_string(),
            }),
            None => Ok(()),
        }
    }

    fn err(&self, message: impl std::fmt::Display) -> CorpusError {
        CorpusError::Case {
            case: self.name.clone(),
            message: message.to_string(),
        }
    }

    pub fn analysis(&self) -> Result<Analysis, CorpusError> {
        analyze_sources(&[("rtl.v", &self.rtl)], &self.constraints, None).map_err(|e| self.err(e))
    }

    pub fn stimulus_parsed(&self) -> Result<Stimulus, CorpusError> {
        parse_stimulus(&self.stimulus).map_err(|e| self.err(e))
    }
}

/// Every case directory under `root`, sorted by name.
pub fn load_corpus(root: &Path) -> Result<Vec<CorpusCase>, CorpusError> {
    let entries = fs::read_dir(root).map_err(|e| CorpusError::Io {
        path: root.display().to_string(),
        message: e.to_string(),
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.join("rtl.v").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| CorpusCase::load(d)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyRow {
    pub bug_type: String,
    pub analysis: String,
    pub description: String,
    /// Cases exhibiting the bug; a row with `pipeline_check` set is
    /// covered by a property of the whole pipeline instead.
    #[serde(default)]
    pub cases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_check: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub rows: Vec<TaxonomyRow>,
}

pub fn load_taxonomy(root: &Path) -> Result<Taxonomy, CorpusError> {
    let path = root.join("taxonomy.json");
    serde_json::from_str(&read(&path)?).map_err(|e| CorpusError::Taxonomy { message: e.to_string() })
}

/// Every row maps to at least one existing case (or a pipeline check), and
/// every mapped case has a clean twin in the corpus.
pub fn check_taxonomy(tax: &Taxonomy, cases: &[CorpusCase]) -> Result<(), CorpusError> {
    let by_name: BTreeMap<&str, &CorpusCase> = cases.iter().map(|c| (c.name.as_str(), c)).collect();
    for row in &tax.rows {
        if row.cases.is_empty() && row.pipeline_check.is_none() {
            return Err(CorpusError::Taxonomy {
                message: format!("`{}` maps to no case", row.description),
            });
        }
        for c in &row.cases {
            let Some(case) = by_name.get(c.as_str()) else {
                return Err(CorpusError::Taxonomy {
                    message: format!("`{}` maps to missing case `{c}`", row.description),
                });
            };
            match &case.labels.twin {
                Some(t) if by_name.contains_key(t.as_str()) => {}
                _ => {
                    return Err(CorpusError::Taxonomy {
                        message: format!("case `{c}` has no clean twin in the corpus"),
                    })
                }
            }
        }
    }
    Ok(())
}

/// What the tool reports for a case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Observation {
    pub findings: Vec<String>,
    pub syncs: Vec<SyncLabel>,
    pub pairs: PairCounts,
    pub reference_failures: BTreeSet<String>,
    pub msi_failures: BTreeSet<String>,
    pub explore_failures: BTreeSet<String>,
    pub explore_branches: u64,
    pub explore_depth: usize,
}

pub fn pair_counts(a: &Analysis) -> PairCounts {
    use crate::sync::PairStatus;
    let mut c = PairCounts {
        total: a.pairs.len(),
        ..Default::default()
    };
    for p in &a.pairs {
        match a.status.get(&p.id) {
            Some(PairStatus::Synchronized { .. }) => c.synchronized += 1,
            Some(PairStatus::Suppressed { .. }) => c.suppressed += 1,
            _ => c.unsynchronized += 1,
        }
    }
    c
}

fn failing(t: &SimTrace) -> impl Iterator<Item = String> + '_ {
    t.failing().map(|v| v.checker.clone())
}

/// Union of failing checkers over `seeds` under random injection.
pub fn msi_failures(a: &Analysis, stim: &Stimulus, seeds: (u64, u64)) -> Result<BTreeSet<String>, String> {
    let sets: Vec<BTreeSet<String>> = (seeds.0..=seeds.1)
        .into_par_iter()
        .map(|s| {
            let (t, _) = simulate(a, stim, &MsiConfig::random(s, &a.constraints.options), false).map_err(|e| e.to_string())?;
            Ok(failing(&t).collect())
        })
        .collect::<Result<_, String>>()?;
    Ok(sets.into_iter().flatten().collect())
}

pub fn observe(case: &CorpusCase) -> Result<Observation, CorpusError> {
    let a = case.analysis()?;
    let stim = case.stimulus_parsed()?;
    let l = &case.labels;
    let seeds = l.msi.as_ref().map_or((1, 20), |m| m.seeds);
    let budget = l.explore.as_ref().map_or(16, |e| e.budget);
    let reference = reference_simulate(&a, &stim).map_err(|e| case.err(e))?;
    let sim = Simulator::new(&a, &stim).map_err(|e| case.err(e))?;
    let explored =
        explore_exhaustive(&sim, &MsiConfig::random(0, &a.constraints.options), budget).map_err(|e| case.err(e))?;
    Ok(Observation {
        findings: a.findings.iter().map(|f| f.rule.id().to_string()).collect(),
        syncs: a.syncs.iter().map(SyncLabel::of).collect(),
        pairs: pair_counts(&a),
        reference_failures: failing(&reference).collect(),
        msi_failures: msi_failures(&a, &stim, seeds).map_err(|e| case.err(e))?,
        explore_failures: explored.failing().map(str::to_string).collect(),
        explore_branches: explored.branches,
        explore_depth: explored.max_depth,
    })
}

/// One (case, expectation) cell of the corpus matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatrixRow {
    pub case: String,
    pub expectation: String,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Matrix {
    pub rows: Vec<MatrixRow>,
}

impl Matrix {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &MatrixRow> {
        self.rows.iter().filter(|r| !r.passed)
    }
}

fn row<T: Serialize + PartialEq>(case: &str, expectation: &str, expected: &T, actual: &T) -> MatrixRow {
    let js = |v: &T| serde_json::to_string(v).unwrap_or_default();
    MatrixRow {
        case: case.to_string(),
        expectation: expectation.to_string(),
        passed: expected == actual,
        expected: js(expected),
        actual: js(actual),
    }
}

/// Every unsuppressed pair has an injection hook and a covergroup.
fn hooks_row(case: &str, a: &Analysis) -> MatrixRow {
    let want: Vec<String> = a.unsuppressed().map(|p: &CdcPair| p.id.to_ascii_lowercase()).collect();
    let cov = generate_all(a)
        .ok()
        .and_then(|fs| fs.into_iter().find(|f| f.path == "coverage/cdc_cov.sv"));
    let got: Vec<String> = match &cov {
        Some(f) => want
            .iter()
            .filter(|id| f.content.contains(&format!("logic [2:0] evt_{id} ")) && f.content.contains(&format!("covergroup cg_{id} ")))
            .cloned()
            .collect(),
        None => vec![],
    };
    row(case, "msi_hooks", &want, &got)
}

/// Generated assertions lint clean and agree with the runtime checkers on
/// the reference trace and one injected trace.
fn codegen_rows(case: &CorpusCase, a: &Analysis, stim: &Stimulus) -> Vec<MatrixRow> {
    let files = match generate_all(a) {
        Ok(f) => f,
        Err(e) => return vec![row(&case.name, "codegen", &String::new(), &e.to_string())],
    };
    let issues: Vec<String> = lint(&files, &a.netlist).iter().map(|i| format!("{}:{}: {}", i.file, i.line, i.message)).collect();
    let mut rows = vec![row(&case.name, "lint", &Vec::<String>::new(), &issues)];
    let traces = [
        reference_simulate(a, stim).map_err(|e| e.to_string()),
        simulate(a, stim, &MsiConfig::random(1, &a.constraints.options), true)
            .map(|(t, _)| t)
            .map_err(|e| e.to_string()),
    ];
    let mut mismatches = Vec::new();
    for t in traces {
        let t = match t {
            Ok(t) => t,
            Err(e) => {
                mismatches.push(e);
                continue;
            }
        };
        let got: BTreeMap<String, Option<u64>> = match interpret(&files, &a.constraints, &t) {
            Ok(v) => v.into_iter().map(|v| (v.property, v.failure)).collect(),
            Err(e) => {
                mismatches.push(e.to_string());
                continue;
            }
        };
        // latency expectations come from the stimulus and have no template
        for v in t.verdicts.iter().filter(|v| v.kind != "latency") {
            let want = v.failure.as_ref().map(|f| f.tick);
            match got.get(&property_name(&v.checker)) {
                Some(g) if *g == want => {}
                None if want.is_none() => {}
                g => mismatches.push(format!("{}: runtime {want:?}, assertion {g:?}", v.checker)),
            }
        }
    }
    rows.push(row(&case.name, "assertion_agreement", &Vec::<String>::new(), &mismatches));
    rows
}

fn case_rows(case: &CorpusCase) -> Vec<MatrixRow> {
    let n = case.name.as_str();
    let l = &case.labels;
    let (a, stim, obs) = match (case.analysis(), case.stimulus_parsed(), observe(case)) {
        (Ok(a), Ok(s), Ok(o)) => (a, s, o),
        (a, s, o) => {
            let e = [a.err(), s.err(), o.err()].into_iter().flatten().next().map(|e| e.to_string());
            return vec![row(n, "runs", &String::new(), &e.unwrap_or_default())];
        }
    };
    let mut rows = vec![
        row(n, "findings", l.findings.as_ref().expect("checked"), &obs.findings),
        row(n, "syncs", l.syncs.as_ref().expect("checked"), &obs.syncs),
        row(n, "pairs", l.pairs.as_ref().expect("checked"), &obs.pairs),
        row(n, "reference_failures", l.reference_failures.as_ref().expect("checked"), &obs.reference_failures),
        row(n, "msi_failures", &l.msi.as_ref().expect("checked").failures, &obs.msi_failures),
        row(n, "explore_failures", &l.explore.as_ref().expect("checked").failures, &obs.explore_failures),
        hooks_row(n, &a),
    ];
    rows.extend(codegen_rows(case, &a, &stim));
    if let Some(c) = &l.coverage {
        let mut s = stim.clone();
        s.run_edges = c.run_edges;
        s.run_clock = c.run_clock.clone();
        let got: Vec<String> = match simulate(&a, &s, &MsiConfig::random(c.seed, &a.constraints.options), false) {
            Ok((_, db)) => c
                .saturated
                .iter()
                .filter(|p| db.bins.get(*p).is_some_and(|bits| bits.values().all(|b| b.hit() == 4)))
                .cloned()
                .collect(),
            Err(e) => vec![e.to_string()],
        };
        rows.push(row(n, "coverage", &c.saturated, &got));
    }
    rows
}

/// Checks every labeled expectation of the cases whose name contains
/// `filter` (all cases when `None`).
pub fn run_corpus(root: &Path, filter: Option<&str>) -> Result<Matrix, CorpusError> {
    let cases = load_corpus(root)?;
    let tax = load_taxonomy(root)?;
    check_taxonomy(&tax, &cases)?;
    let selected: Vec<&CorpusCase> = cases
        .iter()
        .filter(|c| filter.is_none_or(|f| c.name.contains(f)))
        .collect();
    let rows: Vec<Vec<MatrixRow>> = selected.par_iter().map(|c| case_rows(c)).collect();
    Ok(Matrix {
        rows: rows.into_iter().flatten().collect(),
    })
}
