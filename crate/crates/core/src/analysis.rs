// SPDX-License-Identifier: Apache-2.0

//! The structural pipeline from sources to findings.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::checks::{run_structural, CheckInput, Finding, Severity};
use crate::domains::{assign_domains, DomainError, DomainMap};
use crate::elaborate::{elaborate, find_top, ElabError};
use crate::frontend::{parse_constraints, parse_files, ConstraintError, ConstraintSet, FrontendError};
use crate::netlist::{Netlist, StructuralError};
use crate::pairs::{extract_cdc_pairs, extract_rdc_pairs, CdcPair, RdcPair, UnclockedCrossing};
use crate::sync::{classify_pairs, recognize, reset_synchronizers, PairStatus, ResetSync, SyncInstance};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("constraints: {0}")]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Elab(#[from] ElabError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Structural(#[from] StructuralError),
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub netlist: Netlist,
    pub constraints: ConstraintSet,
    pub domains: DomainMap,
    pub pairs: Vec<CdcPair>,
    pub unclocked: Vec<UnclockedCrossing>,
    pub rdc: Vec<RdcPair>,
    pub syncs: Vec<SyncInstance>,
    pub reset_syncs: Vec<ResetSync>,
    pub status: BTreeMap<String, PairStatus>,
    pub findings: Vec<Finding>,
}

pub fn analyze_sources(
    rtl: &[(&str, &str)],
    constraints: &str,
    top: Option<&str>,
) -> Result<Analysis, AnalysisError> {
    let modules = parse_files(rtl.iter().copied())?;
    let cs = parse_constraints(constraints)?;
    let top = match top {
        Some(t) => t.to_string(),
        None => find_top(&modules)?,
    };
    let nl = elaborate(&modules, &top)?;
    analyze(nl, cs)
}

pub fn analyze(nl: Netlist, cs: ConstraintSet) -> Result<Analysis, AnalysisError> {
    let dm = assign_domains(&nl, &cs)?;
    let ex = extract_cdc_pairs(&nl, &dm, &cs)?;
    let rdc = extract_rdc_pairs(&nl, &dm, &cs)?;
    let syncs = recognize(&nl, &dm, &ex.pairs, &cs)?;
    let reset_syncs = reset_synchronizers(&nl, &dm, &cs);
    let status = classify_pairs(&nl, &ex.pairs, &syncs);
    let findings = run_structural(&CheckInput {
        nl: &nl,
        dm: &dm,
        pairs: &ex.pairs,
        rdc: &rdc,
        syncs: &syncs,
        status: &status,
        reset_syncs: &reset_syncs,
        cs: &cs,
    })?;
    Ok(Analysis {
        netlist: nl,
        constraints: cs,
        domains: dm,
        pairs: ex.pairs,
        unclocked: ex.unclocked,
        rdc,
        syncs,
        reset_syncs,
        status,
        findings,
    })
}

#[derive(Debug, Serialize)]
pub struct PairRow<'a> {
    #[serde(flatten)]
    pub pair: &'a CdcPair,
    #[serde(flatten)]
    pub status: &'a PairStatus,
}

impl Analysis {
    pub fn pair(&self, id: &str) -> Option<&CdcPair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    pub fn sync(&self, id: &str) -> Option<&SyncInstance> {
        self.syncs.iter().find(|s| s.id == id)
    }

    pub fn unsuppressed(&self) -> impl Iterator<Item = &CdcPair> {
        self.pairs.iter().filter(|p| p.suppressed.is_none())
    }

    pub fn errors(&self) -> usize {
        self.findings.iter().filter(|f| f.severity == Severity::Error).count()
    }

    pub fn pair_rows(&self) -> Vec<PairRow<'_>> {
        self.pairs
            .iter()
            .map(|p| PairRow {
                pair: p,
                status: &self.status[&p.id],
            })
            .collect()
    }
}
