// SPDX-License-Identifier: Apache-2.0

//! Clock- and reset-domain crossing extraction.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::domains::{source_domain, DomainMap};
use crate::frontend::ConstraintSet;
use crate::netlist::cone::{ConeCache, ConeSource};
use crate::netlist::{CellId, NetId, Netlist, StructuralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairPin {
    Data,
    Enable,
}

impl PairPin {
    pub fn name(self) -> &'static str {
        match self {
            PairPin::Data => "data",
            PairPin::Enable => "enable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suppression {
    FalsePath,
    Static,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CdcPair {
    pub id: String,
    #[serde(skip)]
    pub src: ConeSource,
    /// Net name of the source flop output or input port.
    pub src_name: String,
    #[serde(skip)]
    pub src_net: NetId,
    #[serde(skip)]
    pub dst: CellId,
    pub dst_name: String,
    pub pin: PairPin,
    pub src_domain: String,
    pub dst_domain: String,
    #[serde(skip)]
    pub path: Vec<CellId>,
    #[serde(rename = "path")]
    pub path_names: Vec<String>,
    pub width: u32,
    pub suppressed: Option<Suppression>,
}

/// A crossing whose source has no declared domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnclockedCrossing {
    pub src_name: String,
    pub dst_name: String,
    pub pin: PairPin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RdcPair {
    pub id: String,
    #[serde(skip)]
    pub src: ConeSource,
    pub src_name: String,
    pub src_domain: String,
    #[serde(skip)]
    pub dst: CellId,
    pub dst_name: String,
    pub dst_domain: String,
    #[serde(skip)]
    pub path: Vec<CellId>,
    #[serde(rename = "path")]
    pub path_names: Vec<String>,
}

pub fn source_net(nl: &Netlist, src: ConeSource) -> Option<NetId> {
    match src {
        ConeSource::Dff(c) => Some(nl.cell(c).output()),
        ConeSource::Port(p) => Some(nl.ports[p].net),
        ConeSource::Blackbox(_) => None,
    }
}

pub fn source_name(nl: &Netlist, src: ConeSource) -> String {
    match src {
        ConeSource::Dff(c) => nl.net_name(nl.cell(c).output()).to_string(),
        ConeSource::Port(p) => nl.ports[p].name.clone(),
        ConeSource::Blackbox(b) => nl.blackboxes[b].path.clone(),
    }
}

/// All names a net answers to.
fn names_of(nl: &Netlist, net: NetId) -> impl Iterator<Item = &str> {
    let n = nl.net(net);
    std::iter::once(n.name.as_str()).chain(n.aliases.iter().map(String::as_str))
}

/// Comb cells of `sink`'s cone that lie on a path from `src_net`, in
/// evaluation order.
pub fn path_cells(
    nl: &Netlist,
    cache: &mut ConeCache,
    src: ConeSource,
    sink: NetId,
) -> Result<Vec<CellId>, StructuralError> {
    let cone = cache.cone(nl, sink)?;
    let mut on_path = BTreeSet::new();
    for c in cone.comb_cells.iter() {
        let sub = cache.cone(nl, nl.cell(*c).output())?;
        if sub.sequential_sources.contains(&src) {
            on_path.insert(*c);
        }
    }
    Ok(nl
        .comb_order()
        .iter()
        .copied()
        .filter(|c| on_path.contains(c))
        .collect())
}

pub struct Extraction {
    pub pairs: Vec<CdcPair>,
    pub unclocked: Vec<UnclockedCrossing>,
}

pub fn extract_cdc_pairs(
    nl: &Netlist,
    dm: &DomainMap,
    cs: &ConstraintSet,
) -> Result<Extraction, StructuralError> {
    let mut cache = ConeCache::new();
    let mut pairs = Vec::new();
    let mut unclocked = Vec::new();
    for (dst, d) in nl.dffs() {
        let dst_domain = dm.flop(dst);
        let mut pins = vec![(PairPin::Data, d.data)];
        if let Some(e) = d.enable {
            pins.push((PairPin::Enable, e));
        }
        for (pin, net) in pins {
            let cone = cache.cone(nl, net)?;
            for src in cone.sequential_sources.iter().copied() {
                let Some(src_domain) = source_domain(nl, cs, &dm.flop_domain, src) else {
                    unclocked.push(UnclockedCrossing {
                        src_name: source_name(nl, src),
                        dst_name: nl.cell_name(dst).to_string(),
                        pin,
                    });
                    continue;
                };
                if src_domain == dst_domain {
                    continue;
                }
                let path = path_cells(nl, &mut cache, src, net)?;
                let src_net = source_net(nl, src).expect("clocked sources have nets");
                let dst_names: Vec<&str> = std::iter::once(nl.cell_name(dst))
                    .chain(names_of(nl, d.q))
                    .collect();
                let suppressed = if names_of(nl, src_net)
                    .any(|s| dst_names.iter().any(|t| cs.is_false_path(s, t)))
                {
                    Some(Suppression::FalsePath)
                } else if names_of(nl, src_net).any(|s| cs.is_static(s)) {
                    Some(Suppression::Static)
                } else {
                    None
                };
                pairs.push(CdcPair {
                    id: String::new(),
                    src,
                    src_name: source_name(nl, src),
                    src_net,
                    dst,
                    dst_name: nl.cell_name(dst).to_string(),
                    pin,
                    src_domain,
                    dst_domain: dst_domain.to_string(),
                    path_names: path.iter().map(|c| nl.cell_name(*c).to_string()).collect(),
                    path,
                    width: nl.net(net).width,
                    suppressed,
                });
            }
        }
    }
    pairs.sort_by(|a, b| (&a.dst_name, a.pin, &a.src_name).cmp(&(&b.dst_name, b.pin, &b.src_name)));
    for (i, p) in pairs.iter_mut().enumerate() {
        p.id = format!("P{}", i + 1);
        assert_ne!(p.src_domain, p.dst_domain);
    }
    unclocked.sort_by(|a, b| (&a.dst_name, a.pin, &a.src_name).cmp(&(&b.dst_name, b.pin, &b.src_name)));
    unclocked.dedup();
    Ok(Extraction { pairs, unclocked })
}

/// One pair per flop whose async-reset cone holds a source of another
/// domain. Ports count by their clock, reset or input declaration.
pub fn extract_rdc_pairs(
    nl: &Netlist,
    dm: &DomainMap,
    cs: &ConstraintSet,
) -> Result<Vec<RdcPair>, StructuralError> {
    let mut cache = ConeCache::new();
    let mut out = Vec::new();
    for (dst, d) in nl.dffs() {
        let Some(r) = d.reset else { continue };
        let dst_domain = dm.flop(dst);
        let cone = cache.cone(nl, r.net)?;
        for src in cone.sequential_sources.iter().copied() {
            let Some(src_domain) = source_domain(nl, cs, &dm.flop_domain, src) else {
                continue;
            };
            if src_domain == dst_domain {
                continue;
            }
            let path = path_cells(nl, &mut cache, src, r.net)?;
            out.push(RdcPair {
                id: String::new(),
                src,
                src_name: source_name(nl, src),
                src_domain,
                dst,
                dst_name: nl.cell_name(dst).to_string(),
                dst_domain: dst_domain.to_string(),
                path_names: path.iter().map(|c| nl.cell_name(*c).to_string()).collect(),
                path,
            });
        }
    }
    out.sort_by(|a, b| (&a.dst_name, &a.src_name).cmp(&(&b.dst_name, &b.src_name)));
    for (i, p) in out.iter_mut().enumerate() {
        p.id = format!("R{}", i + 1);
    }
    Ok(out)
}

/// Index of pairs by destination flop.
pub fn pairs_by_dst(pairs: &[CdcPair]) -> BTreeMap<CellId, Vec<usize>> {
    let mut m: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        m.entry(p.dst).or_default().push(i);
    }
    m
}
