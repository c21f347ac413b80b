// SPDX-License-Identifier: Apache-2.0

//! Synchronizer recognition and pair classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::domains::DomainMap;
use crate::frontend::ConstraintSet;
use crate::netlist::cone::{ConeCache, ConeSource};
use crate::netlist::{CellId, CellKind, Dff, GateOp, NetId, Netlist, Pin, Reader, StructuralError};
use crate::pairs::{CdcPair, PairPin, Suppression};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type")]
pub enum SyncKind {
    Ndff {
        depth: u32,
    },
    PulseToggle {
        toggle: String,
        xor: String,
        pulse: String,
        ndff_depth: u32,
    },
    MuxEnable {
        data: Vec<String>,
        select: String,
        ndff_depth: u32,
    },
    AsyncFifo {
        write_ptr: String,
        read_ptr: String,
        width: u32,
        depth: u32,
        gray_encode: Vec<String>,
        write_domain: String,
        read_domain: String,
    },
    UserDefined {
        module: String,
        instance: String,
    },
}

impl SyncKind {
    pub fn name(&self) -> &'static str {
        match self {
            SyncKind::Ndff { .. } => "Ndff",
            SyncKind::PulseToggle { .. } => "PulseToggle",
            SyncKind::MuxEnable { .. } => "MuxEnable",
            SyncKind::AsyncFifo { .. } => "AsyncFifo",
            SyncKind::UserDefined { .. } => "UserDefined",
        }
    }
}

/// Nets the runtime checkers and code generator need for one instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SyncSignals {
    /// Pulse input of a toggle synchronizer (source domain).
    pub pulse: Option<NetId>,
    /// Synchronized select of a mux synchronizer (destination domain).
    pub select: Option<NetId>,
    /// Data arms of a mux synchronizer.
    pub data: Vec<NetId>,
    /// Binary pointer registers of a FIFO: (write, read).
    pub fifo_bins: Option<(NetId, NetId)>,
    /// Gray pointer pairs of a FIFO.
    pub pointer_pairs: Vec<String>,
    /// Pair whose source drives the select chain of a mux synchronizer.
    pub select_pair: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyncInstance {
    pub id: String,
    pub kind: SyncKind,
    #[serde(skip)]
    pub members: BTreeSet<CellId>,
    #[serde(rename = "members")]
    pub member_names: Vec<String>,
    pub protected: Vec<String>,
    pub src_domain: String,
    pub dst_domain: String,
    /// Main chain, first stage first. For a FIFO this is the write-to-read
    /// pointer chain.
    #[serde(skip)]
    pub chain: Vec<CellId>,
    #[serde(skip)]
    pub outputs: Vec<NetId>,
    /// Protected pairs whose path may hold any logic (FIFO storage reads).
    #[serde(skip)]
    pub unrestricted: BTreeSet<String>,
    #[serde(skip)]
    pub signals: SyncSignals,
    #[serde(skip)]
    sort_key: String,
}

/// A reset synchronizer: a flop chain sharing one async reset whose first
/// stage samples a constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResetSync {
    #[serde(skip)]
    pub cells: Vec<CellId>,
    pub stages: Vec<String>,
    #[serde(skip)]
    pub output: NetId,
    pub output_name: String,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status")]
pub enum PairStatus {
    Synchronized { kind: String, sync: String },
    Unsynchronized,
    Suppressed { reason: Suppression },
}

/// Follows single-reader, same-clock, enable-free flop stages from `head`.
fn follow_chain(nl: &Netlist, head: CellId, same_reset: bool) -> Vec<CellId> {
    let hd = nl.cell(head).as_dff().expect("head is a flop");
    let mut chain = vec![head];
    let mut cur = head;
    loop {
        let q = nl.cell(cur).output();
        let readers = &nl.net(q).readers;
        let [Reader::Cell { cell: next, pin: Pin::Data }] = readers.as_slice() else {
            break;
        };
        let Some(nd) = nl.cell(*next).as_dff() else { break };
        let ok = nd.clock == hd.clock
            && nd.enable.is_none()
            && nd.data == q
            && (!same_reset || nd.reset == hd.reset)
            && !chain.contains(next);
        if !ok {
            break;
        }
        chain.push(*next);
        cur = *next;
    }
    chain
}

pub fn reset_synchronizers(nl: &Netlist, dm: &DomainMap, cs: &ConstraintSet) -> Vec<ResetSync> {
    let mut out = Vec::new();
    for (id, d) in nl.dffs() {
        if d.reset.is_none() || d.enable.is_some() {
            continue;
        }
        let const_data = matches!(
            nl.driver_cell(d.data).map(|c| &nl.cell(c).kind),
            Some(CellKind::Const(_))
        );
        if !const_data {
            continue;
        }
        let chain = follow_chain(nl, id, true);
        if chain.len() < cs.options.ndff_min_depth.max(2) as usize {
            continue;
        }
        let last = *chain.last().unwrap();
        let output = nl.cell(last).output();
        out.push(ResetSync {
            stages: chain.iter().map(|c| nl.cell_name(*c).to_string()).collect(),
            cells: chain,
            output,
            output_name: nl.net_name(output).to_string(),
            domain: dm.flop(id).to_string(),
        });
    }
    out
}

struct Chain {
    cells: Vec<CellId>,
    /// Pairs into the head's data pin.
    pairs: Vec<usize>,
}

fn dff(nl: &Netlist, c: CellId) -> &Dff {
    nl.cell(c).as_dff().expect("flop")
}

fn gate_of(nl: &Netlist, net: NetId) -> Option<(CellId, GateOp, &[NetId])> {
    let c = nl.driver_cell(net)?;
    let g = nl.cell(c).as_gate()?;
    Some((c, g.op, g.inputs.as_slice()))
}

/// Matches `b ^ {1'b0, b[w-1:1]}` driving `net`; returns (binary net, cells).
fn gray_encoder_at(nl: &Netlist, xor_out: NetId) -> Option<(NetId, Vec<CellId>)> {
    let (xor, op, ins) = gate_of(nl, xor_out)?;
    if op != GateOp::Xor || ins.len() != 2 {
        return None;
    }
    let w = nl.net(xor_out).width;
    if w < 2 {
        return None;
    }
    for (b, shifted) in [(ins[0], ins[1]), (ins[1], ins[0])] {
        let Some((cat, GateOp::Concat, cins)) = gate_of(nl, shifted) else { continue };
        let [zero, sl] = cins else { continue };
        let zero_ok = nl.net(*zero).width == 1
            && matches!(
                nl.driver_cell(*zero).map(|c| &nl.cell(c).kind),
                Some(CellKind::Const(k)) if k.value == 0
            );
        let Some((slc, GateOp::Slice { msb, lsb }, sins)) = gate_of(nl, *sl) else { continue };
        if zero_ok && msb == w - 1 && lsb == 1 && sins[0] == b {
            let k = nl.driver_cell(*zero).unwrap();
            return Some((b, vec![xor, cat, k, slc]));
        }
    }
    None
}

/// Searches the comb cone feeding `net` for a gray encoder.
fn find_gray(
    nl: &Netlist,
    cache: &mut ConeCache,
    net: NetId,
) -> Result<Option<(NetId, Vec<CellId>)>, StructuralError> {
    if let Some(g) = gray_encoder_at(nl, net) {
        return Ok(Some(g));
    }
    let cone = cache.cone(nl, net)?;
    for c in cone.comb_cells.iter() {
        if let Some(g) = gray_encoder_at(nl, nl.cell(*c).output()) {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

pub fn recognize(
    nl: &Netlist,
    dm: &DomainMap,
    pairs: &[CdcPair],
    cs: &ConstraintSet,
) -> Result<Vec<SyncInstance>, StructuralError> {
    let mut cache = ConeCache::new();
    let mut out: Vec<SyncInstance> = Vec::new();
    let name = |c: &CellId| nl.cell_name(*c).to_string();

    // user-declared synchronizer modules take their whole instance
    let mut user_cells = BTreeSet::new();
    for inst in &nl.instances {
        if !cs.sync_cells.contains(&inst.module) {
            continue;
        }
        let members: BTreeSet<CellId> = inst.cells.iter().copied().collect();
        let protected: Vec<&CdcPair> = pairs.iter().filter(|p| members.contains(&p.dst)).collect();
        let outputs = inst
            .ports
            .iter()
            .filter(|(_, d, _)| *d == crate::netlist::Direction::Out)
            .map(|(_, _, n)| *n)
            .collect();
        let dst_domain = members
            .iter()
            .find_map(|c| dm.flop_domain.get(c).cloned())
            .unwrap_or_default();
        let src_domain = protected.first().map(|p| p.src_domain.clone()).unwrap_or_default();
        user_cells.extend(members.iter().copied());
        out.push(SyncInstance {
            id: String::new(),
            kind: SyncKind::UserDefined {
                module: inst.module.clone(),
                instance: inst.path.clone(),
            },
            member_names: members.iter().map(name).collect(),
            protected: protected.iter().map(|p| p.id.clone()).collect(),
            src_domain,
            dst_domain,
            chain: members.iter().copied().filter(|c| nl.cell(*c).as_dff().is_some()).collect(),
            members,
            outputs,
            unrestricted: BTreeSet::new(),
            signals: SyncSignals::default(),
            sort_key: inst.path.clone(),
        });
    }

    // candidate N-flop chains, one per data-crossing head
    let mut heads: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.pin == PairPin::Data {
            heads.entry(p.dst).or_default().push(i);
        }
    }
    let mut chains = Vec::new();
    for (head, pidx) in heads {
        if user_cells.contains(&head) || dff(nl, head).enable.is_some() {
            continue;
        }
        let cells = follow_chain(nl, head, false);
        if cells.len() >= cs.options.ndff_min_depth as usize {
            chains.push(Chain { cells, pairs: pidx });
        }
    }
    let mut used = vec![false; chains.len()];

    // pulse (toggle) synchronizers
    for (ci, ch) in chains.iter().enumerate() {
        let [pi] = ch.pairs.as_slice() else { continue };
        let p = &pairs[*pi];
        let ConeSource::Dff(t) = p.src else { continue };
        let td = dff(nl, t);
        let (fb_gate, pulse) = match gate_of(nl, td.data) {
            Some((g, GateOp::Xor, [a, b])) if *a == td.q => (g, *b),
            Some((g, GateOp::Xor, [a, b])) if *b == td.q => (g, *a),
            Some((g, GateOp::Not, [a])) if *a == td.q && td.enable.is_some() => (g, td.enable.unwrap()),
            _ => continue,
        };
        let last = *ch.cells.last().unwrap();
        let lq = nl.cell(last).output();
        let hclk = dff(nl, ch.cells[0]).clock;
        let mut found = None;
        for r in &nl.net(lq).readers {
            let Reader::Cell { cell: f, pin: Pin::Data } = r else { continue };
            let Some(fd) = nl.cell(*f).as_dff() else { continue };
            if fd.clock != hclk || fd.enable.is_some() || fd.data != lq {
                continue;
            }
            for r2 in &nl.net(lq).readers {
                let Reader::Cell { cell: x, .. } = r2 else { continue };
                if let Some(g) = nl.cell(*x).as_gate() {
                    let set: BTreeSet<NetId> = g.inputs.iter().copied().collect();
                    if g.op == GateOp::Xor && g.inputs.len() == 2 && set == BTreeSet::from([lq, fd.q]) {
                        found = Some((*f, *x));
                    }
                }
            }
            if found.is_some() {
                break;
            }
        }
        let Some((f, xor)) = found else { continue };
        used[ci] = true;
        let mut members: BTreeSet<CellId> = ch.cells.iter().copied().collect();
        members.extend([t, fb_gate, f, xor]);
        out.push(SyncInstance {
            id: String::new(),
            kind: SyncKind::PulseToggle {
                toggle: name(&t),
                xor: name(&xor),
                pulse: nl.net_name(pulse).to_string(),
                ndff_depth: ch.cells.len() as u32,
            },
            member_names: members.iter().map(name).collect(),
            members,
            protected: vec![p.id.clone()],
            src_domain: p.src_domain.clone(),
            dst_domain: p.dst_domain.clone(),
            chain: ch.cells.clone(),
            outputs: vec![nl.cell(xor).output()],
            unrestricted: BTreeSet::new(),
            signals: SyncSignals {
                pulse: Some(pulse),
                ..Default::default()
            },
            sort_key: name(&ch.cells[0]),
        });
    }

    // asynchronous FIFOs: two gray-coded pointer chains in opposite directions
    struct GrayChain {
        chain: usize,
        pair: usize,
        ptr: CellId,
        bin: NetId,
        cells: Vec<CellId>,
    }
    let mut grays = Vec::new();
    for (ci, ch) in chains.iter().enumerate() {
        if used[ci] {
            continue;
        }
        let [pi] = ch.pairs.as_slice() else { continue };
        let p = &pairs[*pi];
        let ConeSource::Dff(s) = p.src else { continue };
        if p.width < 2 || !p.path.iter().all(|c| is_single_input(nl, *c)) {
            continue;
        }
        if let Some((bin, cells)) = find_gray(nl, &mut cache, dff(nl, s).data)? {
            grays.push(GrayChain {
                chain: ci,
                pair: *pi,
                ptr: s,
                bin,
                cells,
            });
        }
    }
    let mut gray_used = vec![false; grays.len()];
    for a in 0..grays.len() {
        if gray_used[a] {
            continue;
        }
        let pa = &pairs[grays[a].pair];
        let Some(b) = (a + 1..grays.len()).find(|&b| {
            let pb = &pairs[grays[b].pair];
            !gray_used[b]
                && pb.src_domain == pa.dst_domain
                && pb.dst_domain == pa.src_domain
                && pb.width == pa.width
        }) else {
            continue;
        };
        gray_used[a] = true;
        gray_used[b] = true;
        let pb = &pairs[grays[b].pair];
        // binary pointer registers behind each gray encoder
        let bin_reg = |cache: &mut ConeCache, g: &GrayChain| -> Result<Vec<CellId>, StructuralError> {
            let cone = cache.cone(nl, g.bin)?;
            Ok(cone.dff_sources().collect())
        };
        let side_a = bin_reg(&mut cache, &grays[a])?;
        let side_b = bin_reg(&mut cache, &grays[b])?;
        let storage_pairs = |from: &str, ptr_side: &[CellId], cache: &mut ConeCache| -> Result<Vec<usize>, StructuralError> {
            let mut v = Vec::new();
            for (i, p) in pairs.iter().enumerate() {
                if p.src_domain != from || p.pin != PairPin::Data || i == grays[a].pair || i == grays[b].pair {
                    continue;
                }
                let to = if from == pa.src_domain { &pa.dst_domain } else { &pb.dst_domain };
                if &p.dst_domain != to {
                    continue;
                }
                let ConeSource::Dff(s) = p.src else { continue };
                let sd = dff(nl, s);
                let mut srcs: BTreeSet<CellId> = cache.cone(nl, sd.data)?.dff_sources().collect();
                if let Some(e) = sd.enable {
                    srcs.extend(cache.cone(nl, e)?.dff_sources());
                }
                if ptr_side.iter().any(|c| srcs.contains(c)) {
                    v.push(i);
                }
            }
            Ok(v)
        };
        let from_a = storage_pairs(&pa.src_domain, &side_a, &mut cache)?;
        let from_b = storage_pairs(&pb.src_domain, &side_b, &mut cache)?;
        let a_is_write = match (from_a.is_empty(), from_b.is_empty()) {
            (false, true) => true,
            (true, false) => false,
            _ => {
                let pos = |d: &str| cs.clocks.iter().position(|c| c.domain == d).unwrap_or(usize::MAX);
                pos(&pa.src_domain) <= pos(&pb.src_domain)
            }
        };
        let (w, r, storage) = if a_is_write { (a, b, from_a) } else { (b, a, from_b) };
        let (gw, gr) = (&grays[w], &grays[r]);
        let (pw, pr) = (&pairs[gw.pair], &pairs[gr.pair]);
        let mut members: BTreeSet<CellId> = BTreeSet::new();
        members.extend(chains[gw.chain].cells.iter().copied());
        members.extend(chains[gr.chain].cells.iter().copied());
        members.extend([gw.ptr, gr.ptr]);
        members.extend(gw.cells.iter().copied());
        members.extend(gr.cells.iter().copied());
        let mut protected = vec![pw.id.clone(), pr.id.clone()];
        let mut unrestricted = BTreeSet::new();
        for i in &storage {
            protected.push(pairs[*i].id.clone());
            unrestricted.insert(pairs[*i].id.clone());
            if let ConeSource::Dff(s) = pairs[*i].src {
                members.insert(s);
            }
        }
        protected.sort_by_key(|id| id_num(id));
        protected.dedup();
        let single_bin = |g: &GrayChain, cache: &mut ConeCache| -> Result<NetId, StructuralError> {
            let cone = cache.cone(nl, g.bin)?;
            let regs: Vec<CellId> = cone
                .dff_sources()
                .filter(|c| nl.net(nl.cell(*c).output()).width == nl.net(g.bin).width)
                .collect();
            Ok(match regs.as_slice() {
                [one] => nl.cell(*one).output(),
                _ => g.bin,
            })
        };
        let wbin = single_bin(gw, &mut cache)?;
        let rbin = single_bin(gr, &mut cache)?;
        let mut gray_encode: Vec<String> = gw.cells.iter().chain(&gr.cells).map(name).collect();
        gray_encode.sort();
        used[gw.chain] = true;
        used[gr.chain] = true;
        out.push(SyncInstance {
            id: String::new(),
            kind: SyncKind::AsyncFifo {
                write_ptr: name(&gw.ptr),
                read_ptr: name(&gr.ptr),
                width: pw.width,
                depth: 1 << (pw.width - 1),
                gray_encode,
                write_domain: pw.src_domain.clone(),
                read_domain: pw.dst_domain.clone(),
            },
            member_names: members.iter().map(name).collect(),
            members,
            protected,
            src_domain: pw.src_domain.clone(),
            dst_domain: pw.dst_domain.clone(),
            chain: chains[gw.chain].cells.clone(),
            outputs: vec![
                nl.cell(*chains[gw.chain].cells.last().unwrap()).output(),
                nl.cell(*chains[gr.chain].cells.last().unwrap()).output(),
            ],
            unrestricted,
            signals: SyncSignals {
                fifo_bins: Some((wbin, rbin)),
                pointer_pairs: vec![pw.id.clone(), pr.id.clone()],
                ..Default::default()
            },
            sort_key: name(&chains[gw.chain].cells[0]),
        });
    }

    // mux / enable synchronizers
    for (ci, ch) in chains.iter().enumerate() {
        if used[ci] {
            continue;
        }
        let last = *ch.cells.last().unwrap();
        let sel = nl.cell(last).output();
        let dst_domain = dm.flop(ch.cells[0]).to_string();
        let mut data_flops: Vec<(CellId, Option<CellId>, NetId)> = Vec::new();
        for r in &nl.net(sel).readers {
            let Reader::Cell { cell: c, pin } = r else { continue };
            match (&nl.cell(*c).kind, pin) {
                (CellKind::Gate(g), Pin::Input(0)) if g.op == GateOp::Mux => {
                    for r2 in &nl.net(g.output).readers {
                        let Reader::Cell { cell: f, pin: Pin::Data } = r2 else { continue };
                        let Some(fd) = nl.cell(*f).as_dff() else { continue };
                        if dm.flop(*f) != dst_domain {
                            continue;
                        }
                        if g.inputs[2] == fd.q {
                            data_flops.push((*f, Some(*c), g.inputs[1]));
                        } else if g.inputs[1] == fd.q {
                            data_flops.push((*f, Some(*c), g.inputs[2]));
                        }
                    }
                }
                (CellKind::Dff(fd), Pin::Enable) if dm.flop(*c) == dst_domain => {
                    data_flops.push((*c, None, fd.data));
                }
                _ => {}
            }
        }
        if data_flops.is_empty() {
            continue;
        }
        data_flops.sort();
        data_flops.dedup();
        used[ci] = true;
        let mut members: BTreeSet<CellId> = ch.cells.iter().copied().collect();
        let mut protected: Vec<String> = ch.pairs.iter().map(|i| pairs[*i].id.clone()).collect();
        let mut data_nets = Vec::new();
        for (f, mux, dnet) in &data_flops {
            members.insert(*f);
            if let Some(m) = mux {
                members.insert(*m);
            }
            data_nets.push(*dnet);
            for p in pairs.iter().filter(|p| p.dst == *f && p.pin == PairPin::Data) {
                protected.push(p.id.clone());
            }
        }
        protected.sort_by_key(|id| id_num(id));
        protected.dedup();
        let select_pair = ch.pairs.first().map(|i| pairs[*i].id.clone());
        out.push(SyncInstance {
            id: String::new(),
            kind: SyncKind::MuxEnable {
                data: data_nets.iter().map(|n| nl.net_name(*n).to_string()).collect(),
                select: nl.net_name(sel).to_string(),
                ndff_depth: ch.cells.len() as u32,
            },
            member_names: members.iter().map(name).collect(),
            members,
            protected,
            src_domain: pairs[ch.pairs[0]].src_domain.clone(),
            dst_domain,
            chain: ch.cells.clone(),
            outputs: data_flops.iter().map(|(f, _, _)| nl.cell(*f).output()).collect(),
            unrestricted: BTreeSet::new(),
            signals: SyncSignals {
                select: Some(sel),
                data: data_nets,
                select_pair,
                ..Default::default()
            },
            sort_key: name(&ch.cells[0]),
        });
    }

    // remaining chains are plain N-flop synchronizers
    for (ci, ch) in chains.iter().enumerate() {
        if used[ci] {
            continue;
        }
        let p0 = &pairs[ch.pairs[0]];
        let members: BTreeSet<CellId> = ch.cells.iter().copied().collect();
        out.push(SyncInstance {
            id: String::new(),
            kind: SyncKind::Ndff {
                depth: ch.cells.len() as u32,
            },
            member_names: ch.cells.iter().map(name).collect(),
            members,
            protected: ch.pairs.iter().map(|i| pairs[*i].id.clone()).collect(),
            src_domain: p0.src_domain.clone(),
            dst_domain: p0.dst_domain.clone(),
            chain: ch.cells.clone(),
            outputs: vec![nl.cell(*ch.cells.last().unwrap()).output()],
            unrestricted: BTreeSet::new(),
            signals: SyncSignals::default(),
            sort_key: name(&ch.cells[0]),
        });
    }

    out.sort_by(|a, b| a.sort_key.cmp(&b.sort_key));
    for (i, s) in out.iter_mut().enumerate() {
        s.id = format!("S{}", i + 1);
    }
    let mut seen = BTreeSet::new();
    for s in out.iter().filter(|s| matches!(s.kind, SyncKind::Ndff { .. })) {
        for m in &s.members {
            assert!(seen.insert(*m), "cell in two N-flop synchronizers");
        }
    }
    Ok(out)
}

fn is_single_input(nl: &Netlist, c: CellId) -> bool {
    nl.cell(c).as_gate().is_some_and(|g| g.op.is_single_input())
}

/// Numeric part of a `P<n>` / `S<n>` id for natural ordering.
pub fn id_num(id: &str) -> u64 {
    id[1..].parse().unwrap_or(u64::MAX)
}

pub fn classify_pairs(
    nl: &Netlist,
    pairs: &[CdcPair],
    syncs: &[SyncInstance],
) -> BTreeMap<String, PairStatus> {
    let mut out = BTreeMap::new();
    for p in pairs {
        let status = if let Some(reason) = p.suppressed {
            PairStatus::Suppressed { reason }
        } else {
            syncs
                .iter()
                .find(|s| {
                    s.protected.contains(&p.id)
                        && (s.unrestricted.contains(&p.id)
                            || p.path.iter().all(|c| {
                                is_single_input(nl, *c)
                                    || (matches!(s.kind, SyncKind::MuxEnable { .. }) && s.members.contains(c))
                            }))
                })
                .map(|s| PairStatus::Synchronized {
                    kind: s.kind.name().to_string(),
                    sync: s.id.clone(),
                })
                .unwrap_or(PairStatus::Unsynchronized)
        };
        out.insert(p.id.clone(), status);
    }
    out
}
