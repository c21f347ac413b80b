// SPDX-License-Identifier: Apache-2.0

//! Exhaustive enumeration of injection decisions.
//!
//! Each opportunity is one binary decision (reference capture or
//! violation). Branches are visited depth first with "skip" before
//! "inject", which is lexicographic order on decision vectors, so the first
//! failing branch found for a checker is its lexicographically first
//! counterexample.

use std::collections::BTreeMap;

use serde::Serialize;

use super::engine::{SimError, SimTrace, Simulator};
use super::{MsiConfig, MAX_DECISIONS_CAP};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum ExploreOutcome {
    Proven,
    Counterexample { decisions: Vec<bool>, trace: Box<SimTrace> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExploreResult {
    pub verdicts: BTreeMap<String, ExploreOutcome>,
    pub branches: u64,
    /// Largest decision count over all branches.
    pub max_depth: usize,
}

impl ExploreResult {
    pub fn failing(&self) -> impl Iterator<Item = &str> {
        self.verdicts
            .iter()
            .filter(|(_, o)| matches!(o, ExploreOutcome::Counterexample { .. }))
            .map(|(k, _)| k.as_str())
    }
}

/// Runs every decision branch; fails if any branch needs more than
/// `max_decisions` decisions.
pub fn explore_exhaustive(sim: &Simulator, msi: &MsiConfig, max_decisions: u32) -> Result<ExploreResult, SimError> {
    if max_decisions > MAX_DECISIONS_CAP {
        return Err(SimError::BudgetTooLarge {
            max: max_decisions,
            cap: MAX_DECISIONS_CAP,
        });
    }
    let mut first_fail: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    let mut script: Vec<bool> = Vec::new();
    let mut branches = 0u64;
    let mut max_depth = 0;
    loop {
        let trace = sim.run_script(msi, &script, false)?;
        branches += 1;
        let d = trace.decisions;
        if d.len() > max_decisions as usize {
            return Err(SimError::DecisionBudgetExceeded {
                count: d.len(),
                max: max_decisions,
            });
        }
        max_depth = max_depth.max(d.len());
        for v in trace.verdicts.iter().filter(|v| !v.passed()) {
            first_fail.entry(v.checker.clone()).or_insert_with(|| d.clone());
        }
        let Some(i) = d.iter().rposition(|b| !b) else { break };
        script = d[..i].to_vec();
        script.push(true);
    }
    let mut verdicts = BTreeMap::new();
    for c in sim.checkers() {
        let outcome = match first_fail.get(&c.id) {
            None => ExploreOutcome::Proven,
            Some(decisions) => ExploreOutcome::Counterexample {
                decisions: decisions.clone(),
                trace: Box::new(sim.run_script(msi, decisions, true)?),
            },
        };
        verdicts.insert(c.id.clone(), outcome);
    }
    Ok(ExploreResult {
        verdicts,
        branches,
        max_depth,
    })
}
