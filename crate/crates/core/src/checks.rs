// SPDX-License-Identifier: Apache-2.0

//! Structural rule catalog.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domains::{DomainMap, DomainNote, NetDomain};
use crate::frontend::ConstraintSet;
use crate::netlist::cone::{ConeCache, ConeSource};
use crate::netlist::{CellId, NetId, Netlist, StructuralError};
use crate::pairs::{CdcPair, RdcPair};
use crate::sync::{PairStatus, ResetSync, SyncInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn parse(s: &str) -> Option<Severity> {
        match s {
            "error" => Some(Severity::Error),
            "warning" => Some(Severity::Warning),
            "info" => Some(Severity::Info),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    MissingSync,
    CombOnCdc,
    MissingRdcSync,
    CombOnRdc,
    ResetConvergence,
    Convergence,
    Divergence,
    StaticNotConstrained,
    GatedClockGlitch,
    BlackboxBoundary,
}

impl Rule {
    pub const ALL: [Rule; 10] = [
        Rule::MissingSync,
        Rule::CombOnCdc,
        Rule::MissingRdcSync,
        Rule::CombOnRdc,
        Rule::ResetConvergence,
        Rule::Convergence,
        Rule::Divergence,
        Rule::StaticNotConstrained,
        Rule::GatedClockGlitch,
        Rule::BlackboxBoundary,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::MissingSync => "MISSING_SYNC",
            Rule::CombOnCdc => "COMB_ON_CDC",
            Rule::MissingRdcSync => "MISSING_RDC_SYNC",
            Rule::CombOnRdc => "COMB_ON_RDC",
            Rule::ResetConvergence => "RESET_CONVERGENCE",
            Rule::Convergence => "CONVERGENCE",
            Rule::Divergence => "DIVERGENCE",
            Rule::StaticNotConstrained => "STATIC_NOT_CONSTRAINED",
            Rule::GatedClockGlitch => "GATED_CLOCK_GLITCH",
            Rule::BlackboxBoundary => "BLACKBOX_BOUNDARY",
        }
    }

    pub fn parse(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.id() == s)
    }

    pub fn default_severity(self) -> Severity {
        match self {
            Rule::MissingSync
            | Rule::CombOnCdc
            | Rule::MissingRdcSync
            | Rule::CombOnRdc
            | Rule::ResetConvergence => Severity::Error,
            Rule::Convergence | Rule::Divergence | Rule::GatedClockGlitch | Rule::BlackboxBoundary => {
                Severity::Warning
            }
            Rule::StaticNotConstrained => Severity::Info,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub rule: Rule,
    pub severity: Severity,
    /// Hierarchical names of the nets or cells the finding is about.
    pub subjects: Vec<String>,
    pub pairs: Vec<String>,
    pub syncs: Vec<String>,
    pub message: String,
    /// Netlist names (cells or nets) demonstrating the issue, in path order
    /// where a path exists.
    pub witness: Vec<String>,
}

pub struct CheckInput<'a> {
    pub nl: &'a Netlist,
    pub dm: &'a DomainMap,
    pub pairs: &'a [CdcPair],
    pub rdc: &'a [RdcPair],
    pub syncs: &'a [SyncInstance],
    pub status: &'a BTreeMap<String, PairStatus>,
    pub reset_syncs: &'a [ResetSync],
    pub cs: &'a ConstraintSet,
}

fn multi_input(nl: &Netlist, c: CellId) -> bool {
    nl.cell(c).as_gate().is_some_and(|g| !g.op.is_single_input())
}

pub fn run_structural(input: &CheckInput) -> Result<Vec<Finding>, StructuralError> {
    let CheckInput {
        nl,
        dm,
        pairs,
        rdc,
        syncs,
        status,
        reset_syncs,
        cs,
    } = *input;
    let mut cache = ConeCache::new();
    let mut out = Vec::new();
    let mut push = |rule: Rule, subjects: Vec<String>, pairs: Vec<String>, syncs: Vec<String>, message: String, witness: Vec<String>| {
        out.push(Finding {
            rule,
            severity: cs.options.severity_of(rule),
            subjects,
            pairs,
            syncs,
            message,
            witness,
        });
    };
    let cname = |c: &CellId| nl.cell_name(*c).to_string();

    for p in pairs {
        if status.get(&p.id) != Some(&PairStatus::Unsynchronized) {
            continue;
        }
        let mut witness = vec![p.src_name.clone()];
        witness.extend(p.path_names.iter().cloned());
        witness.push(p.dst_name.clone());
        let comb_cells: Vec<String> = p.path.iter().filter(|c| multi_input(nl, **c)).map(cname).collect();
        let mixed: Vec<String> = p
            .path
            .iter()
            .map(|c| nl.cell(*c).output())
            .filter(|n| matches!(dm.net(*n), NetDomain::Mixed(_)))
            .map(|n| nl.net_name(n).to_string())
            .collect();
        let comb = !comb_cells.is_empty() || !mixed.is_empty();
        let into_sync = syncs.iter().any(|s| s.protected.contains(&p.id));
        if comb {
            let what = if comb_cells.is_empty() { mixed.join(", ") } else { comb_cells.join(", ") };
            push(
                Rule::CombOnCdc,
                vec![p.src_name.clone(), p.dst_name.clone()],
                vec![p.id.clone()],
                vec![],
                format!(
                    "crossing {} -> {} ({} -> {}) passes through combinational logic: {what}",
                    p.src_name, p.dst_name, p.src_domain, p.dst_domain
                ),
                witness.clone(),
            );
        }
        if !(comb && into_sync) {
            push(
                Rule::MissingSync,
                vec![p.src_name.clone(), p.dst_name.clone()],
                vec![p.id.clone()],
                vec![],
                format!(
                    "crossing {} -> {} ({} -> {}, {} pin) has no synchronizer",
                    p.src_name,
                    p.dst_name,
                    p.src_domain,
                    p.dst_domain,
                    p.pin.name()
                ),
                witness.clone(),
            );
        }
        let static_like = match p.src {
            ConeSource::Dff(s) => {
                let d = nl.cell(s).as_dff().expect("flop");
                let mut ok = cache.cone(nl, d.data)?.sequential_sources.iter().all(|x| *x == ConeSource::Dff(s));
                if let Some(e) = d.enable {
                    ok &= cache.cone(nl, e)?.sequential_sources.iter().all(|x| *x == ConeSource::Dff(s));
                }
                ok
            }
            _ => false,
        };
        if static_like {
            push(
                Rule::StaticNotConstrained,
                vec![p.src_name.clone()],
                vec![p.id.clone()],
                vec![],
                format!("`{}` never changes after reset but is not declared static", p.src_name),
                vec![p.src_name.clone(), p.dst_name.clone()],
            );
        }
    }

    // reset crossings
    let sync_out: BTreeMap<NetId, &ResetSync> = reset_syncs.iter().map(|r| (r.output, r)).collect();
    let sync_stage: BTreeSet<CellId> = reset_syncs.iter().flat_map(|r| r.cells.iter().copied()).collect();
    let reset_domain_of = |src: ConeSource| -> Option<String> {
        match src {
            ConeSource::Port(p) => cs.reset(&nl.ports[p].name).map(|r| r.domain.clone()),
            ConeSource::Dff(c) => sync_out.get(&nl.cell(c).output()).map(|r| r.domain.clone()),
            ConeSource::Blackbox(_) => None,
        }
    };
    for r in rdc {
        let reset_net = nl.cell(r.dst).as_dff().and_then(|d| d.reset).expect("reset flop").net;
        let cone = cache.cone(nl, reset_net)?;
        let has_sync = cone.sequential_sources.iter().any(|s| match s {
            ConeSource::Dff(c) => sync_out
                .get(&nl.cell(*c).output())
                .is_some_and(|rs| rs.domain == r.dst_domain),
            _ => false,
        });
        let mut witness = vec![r.src_name.clone()];
        witness.extend(r.path_names.iter().cloned());
        witness.push(r.dst_name.clone());
        if !has_sync && !sync_stage.contains(&r.dst) {
            push(
                Rule::MissingRdcSync,
                vec![r.src_name.clone(), r.dst_name.clone()],
                vec![r.id.clone()],
                vec![],
                format!(
                    "async reset of {} ({}) comes from {} ({}) without a reset synchronizer",
                    r.dst_name, r.dst_domain, r.src_name, r.src_domain
                ),
                witness,
            );
        } else if has_sync && reset_domain_of(r.src).is_none() && r.path.iter().any(|c| multi_input(nl, *c)) {
            let gates: Vec<String> = r.path.iter().filter(|c| multi_input(nl, **c)).map(cname).collect();
            push(
                Rule::CombOnRdc,
                vec![r.src_name.clone(), r.dst_name.clone()],
                vec![r.id.clone()],
                vec![],
                format!(
                    "reset path {} -> {} passes through combinational logic: {}",
                    r.src_name,
                    r.dst_name,
                    gates.join(", ")
                ),
                witness,
            );
        }
    }
    let mut seen_reset_nets = BTreeSet::new();
    for (_, d) in nl.dffs() {
        let Some(rp) = d.reset else { continue };
        if !seen_reset_nets.insert(rp.net) {
            continue;
        }
        let cone = cache.cone(nl, rp.net)?;
        let mut by_domain: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for s in cone.sequential_sources.iter() {
            if let Some(dom) = reset_domain_of(*s) {
                by_domain.entry(dom).or_default().push(crate::pairs::source_name(nl, *s));
            }
        }
        if by_domain.len() >= 2 {
            let mut witness: Vec<String> = by_domain.values().flatten().cloned().collect();
            witness.extend(cone.comb_cells.iter().map(cname));
            witness.push(nl.net_name(rp.net).to_string());
            let dsts: Vec<String> = nl
                .dffs()
                .filter(|(_, x)| x.reset.map(|r| r.net) == Some(rp.net))
                .map(|(c, _)| cname(&c))
                .collect();
            push(
                Rule::ResetConvergence,
                vec![nl.net_name(rp.net).to_string()],
                vec![],
                vec![],
                format!(
                    "reset `{}` of {} merges resets from domains {}",
                    nl.net_name(rp.net),
                    dsts.join(", "),
                    by_domain.keys().cloned().collect::<Vec<_>>().join(", ")
                ),
                witness,
            );
        }
    }

    // convergence: outputs of several synchronizers meet before a flop
    let live: Vec<&SyncInstance> = syncs
        .iter()
        .filter(|s| {
            s.protected
                .iter()
                .any(|id| matches!(status.get(id), Some(PairStatus::Synchronized { .. })))
        })
        .collect();
    let mut out_flop: BTreeMap<CellId, usize> = BTreeMap::new();
    for (i, s) in live.iter().enumerate() {
        for n in &s.outputs {
            let cone = cache.cone(nl, *n)?;
            for f in cone.dff_sources() {
                if s.members.contains(&f) {
                    out_flop.insert(f, i);
                }
            }
        }
    }
    let mut reported: BTreeSet<Vec<usize>> = BTreeSet::new();
    for (id, d) in nl.dffs() {
        if live.iter().any(|s| s.members.contains(&id)) {
            continue;
        }
        let mut nets = vec![d.data];
        nets.extend(d.enable);
        let mut hit: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        let mut comb = BTreeSet::new();
        for n in nets {
            let cone = cache.cone(nl, n)?;
            for f in cone.dff_sources() {
                if let Some(i) = out_flop.get(&f) {
                    hit.entry(live[*i].src_domain.as_str()).or_default().insert(*i);
                }
            }
            comb.extend(cone.comb_cells.iter().copied());
        }
        for (dom, set) in hit {
            if set.len() < 2 {
                continue;
            }
            let key: Vec<usize> = set.iter().copied().collect();
            if !reported.insert(key.clone()) {
                continue;
            }
            let ids: Vec<String> = key.iter().map(|i| live[*i].id.clone()).collect();
            let mut witness: Vec<String> = key
                .iter()
                .flat_map(|i| live[*i].outputs.iter().map(|n| nl.net_name(*n).to_string()))
                .collect();
            witness.extend(comb.iter().map(cname));
            witness.push(cname(&id));
            push(
                Rule::Convergence,
                vec![cname(&id)],
                vec![],
                ids.clone(),
                format!(
                    "outputs of synchronizers {} (all from domain {dom}) converge at {}",
                    ids.join(", "),
                    cname(&id)
                ),
                witness,
            );
        }
    }

    // divergence: one source feeding several synchronizers into one domain
    let mut by_src: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.suppressed.is_none()) {
        if let Some(PairStatus::Synchronized { sync, .. }) = status.get(&p.id) {
            by_src
                .entry((p.src_name.clone(), p.dst_domain.clone()))
                .or_default()
                .insert(sync.clone());
        }
    }
    for ((src, dom), ids) in by_src {
        if ids.len() < 2 {
            continue;
        }
        let mut ids: Vec<String> = ids.into_iter().collect();
        ids.sort_by_key(|i| crate::sync::id_num(i));
        let mut witness = vec![src.clone()];
        for s in syncs.iter().filter(|s| ids.contains(&s.id)) {
            witness.extend(s.chain.first().map(cname));
        }
        push(
            Rule::Divergence,
            vec![src.clone()],
            vec![],
            ids.clone(),
            format!("`{src}` is synchronized into domain {dom} by several synchronizers: {}", ids.join(", ")),
            witness,
        );
    }

    // clock gating
    let mut gates_seen = BTreeSet::new();
    for note in &dm.notes {
        let DomainNote::ClockGate { flop, gates } = note else { continue };
        let root = &dm.flop_clock_root[flop];
        let root_net = nl.port(root).expect("clock port").net;
        for g in gates {
            if !multi_input(nl, *g) || !gates_seen.insert(*g) {
                continue;
            }
            let gate = nl.cell(*g).as_gate().expect("gate");
            let mut bad = Vec::new();
            for i in &gate.inputs {
                let cone = cache.cone(nl, *i)?;
                let is_clock = *i == root_net
                    || cone
                        .sequential_sources
                        .iter()
                        .any(|s| matches!(s, ConeSource::Port(p) if nl.ports[*p].net == root_net));
                if is_clock {
                    continue;
                }
                let registered = nl
                    .driver_cell(*i)
                    .is_some_and(|c| nl.cell(c).as_dff().is_some() && dm.flop_domain.get(&c) == dm.flop_domain.get(flop));
                if !registered {
                    bad.push(nl.net_name(*i).to_string());
                }
            }
            if !bad.is_empty() {
                push(
                    Rule::GatedClockGlitch,
                    vec![cname(g)],
                    vec![],
                    vec![],
                    format!(
                        "clock gate {} on {root} is controlled by unregistered {}",
                        cname(g),
                        bad.join(", ")
                    ),
                    vec![root.clone(), cname(g)],
                );
            }
        }
    }

    for bb in &nl.blackboxes {
        let mut witness = vec![bb.path.clone()];
        witness.extend(bb.outputs.iter().map(|(_, n)| nl.net_name(*n).to_string()));
        push(
            Rule::BlackboxBoundary,
            bb.outputs.iter().map(|(_, n)| nl.net_name(*n).to_string()).collect(),
            vec![],
            vec![],
            format!(
                "instance {} of undefined module {}: its outputs are treated as unclocked",
                bb.path, bb.module
            ),
            witness,
        );
    }

    out.sort_by(|a, b| (a.rule, &a.subjects, &a.pairs).cmp(&(b.rule, &b.subjects, &b.pairs)));
    Ok(out)
}

/// Every witness entry names a cell or net of `nl`.
pub fn witness_resolves(nl: &Netlist, f: &Finding) -> bool {
    !f.witness.is_empty()
        && f.witness.iter().all(|w| {
            nl.find_cell(w).is_some()
                || nl.find_net(w).is_some()
                || nl.blackboxes.iter().any(|b| &b.path == w)
        })
}
