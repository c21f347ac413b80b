// SPDX-License-Identifier: Apache-2.0

//! A deliberately plain two-valued simulator without injection, used as
//! the reference the injecting engine must reproduce when injection is
//! off. It walks every tick and evaluates nets recursively from their
//! drivers.

use std::collections::BTreeMap;

use super::checkers::{instantiate_checkers, latency_checkers, CheckerState};
use super::engine::{resolve_schedule, SimError, SimTrace, Wave};
use super::stimulus::Stimulus;
use crate::analysis::Analysis;
use crate::netlist::{eval_gate, CellKind, Driver, NetId, Netlist};

struct Eval<'a> {
    nl: &'a Netlist,
    /// Values of ports and flop outputs.
    held: &'a [u64],
    memo: Vec<Option<u64>>,
}

impl Eval<'_> {
    fn net(&mut self, n: NetId) -> u64 {
        if let Some(v) = self.memo[n.index()] {
            return v;
        }
        let nl = self.nl;
        let v = match nl.net(n).driver() {
            None | Some(Driver::Blackbox { .. }) => 0,
            Some(Driver::Port { .. }) => self.held[n.index()],
            Some(Driver::Cell { cell }) => match &nl.cell(*cell).kind {
                CellKind::Dff(_) => self.held[n.index()],
                CellKind::Const(k) => k.value & nl.net(n).mask(),
                CellKind::Gate(g) => {
                    let ins: Vec<u64> = g.inputs.iter().map(|i| self.net(*i)).collect();
                    let widths: Vec<u32> = g.inputs.iter().map(|i| nl.net(*i).width).collect();
                    eval_gate(g.op, &ins, &widths, nl.net(n).width)
                }
            },
        };
        self.memo[n.index()] = Some(v);
        v
    }
}

fn all_values(nl: &Netlist, held: &[u64]) -> Vec<u64> {
    let mut e = Eval {
        nl,
        held,
        memo: vec![None; nl.nets.len()],
    };
    (0..nl.nets.len()).map(|i| e.net(NetId(i as u32))).collect()
}

fn asserted(nl: &Netlist, vals: &[u64], r: Option<crate::netlist::ResetPin>) -> bool {
    let _ = nl;
    r.is_some_and(|r| (vals[r.net.index()] & 1 == 1) != r.active_low)
}

/// Simulates `stim` without injection, recording every net.
pub fn reference_simulate(a: &Analysis, stim: &Stimulus) -> Result<SimTrace, SimError> {
    let nl = &a.netlist;
    let cs = &a.constraints;
    let schedule = resolve_schedule(nl, cs, stim)?;
    let mut checkers = instantiate_checkers(a);
    checkers.extend(latency_checkers(a, &stim.latency)?);
    let mut states: Vec<CheckerState> = checkers.iter().map(CheckerState::new).collect();
    let clock_nets: Vec<NetId> = cs.clocks.iter().map(|c| nl.port(&c.name).expect("clock").net).collect();

    let mut held = vec![0u64; nl.nets.len()];
    for (_, d) in nl.dffs() {
        held[d.q.index()] = d.reset_value;
    }
    let settle = |held: &mut Vec<u64>| -> Vec<u64> {
        loop {
            let vals = all_values(nl, held);
            let mut changed = false;
            for (_, d) in nl.dffs() {
                if asserted(nl, &vals, d.reset) && held[d.q.index()] != d.reset_value {
                    held[d.q.index()] = d.reset_value;
                    changed = true;
                }
            }
            if !changed {
                return vals;
            }
        }
    };
    let mut vals = settle(&mut held);
    let mut waves: Vec<Wave> = nl
        .nets
        .iter()
        .zip(&vals)
        .map(|(n, v)| Wave {
            width: n.width,
            init: *v,
            changes: vec![],
        })
        .collect();
    let mut edges = vec![0u64; cs.clocks.len()];
    for t in 0..=schedule.end_tick {
        let firing: Vec<usize> = cs
            .clocks
            .iter()
            .enumerate()
            .filter(|(_, c)| t >= c.phase && (t - c.phase) % c.period == 0)
            .map(|(i, _)| i)
            .collect();
        let sets = schedule.sets.get(&t);
        if firing.is_empty() && sets.is_none() {
            continue;
        }
        for c in &firing {
            edges[*c] += 1;
            for (k, spec) in checkers.iter().enumerate() {
                if spec.clock == cs.clocks[*c].name {
                    states[k].sample(spec, t, |n| vals[n.index()]);
                }
            }
        }
        let mut clocked = held.clone();
        for c in &firing {
            clocked[clock_nets[*c].index()] = 1;
        }
        let clock_vals = all_values(nl, &clocked);
        let mut updates = Vec::new();
        for (id, d) in nl.dffs() {
            let root = &a.domains.flop_clock_root[&id];
            let root_idx = cs.clocks.iter().position(|c| &c.name == root).expect("root");
            if !firing.contains(&root_idx) || clock_vals[d.clock.index()] & 1 == 0 {
                continue;
            }
            let v = if asserted(nl, &vals, d.reset) {
                d.reset_value
            } else if d.enable.is_some_and(|e| vals[e.index()] & 1 == 0) {
                vals[d.q.index()]
            } else {
                vals[d.data.index()]
            };
            updates.push((d.q, v));
        }
        for (q, v) in updates {
            held[q.index()] = v;
        }
        for (net, v) in sets.into_iter().flatten() {
            held[net.index()] = *v;
        }
        vals = settle(&mut held);
        for (i, w) in waves.iter_mut().enumerate() {
            let last = w.changes.last().map_or(w.init, |c| c.1);
            if vals[i] != last {
                w.changes.push((t, vals[i]));
            }
        }
    }
    Ok(SimTrace {
        end_tick: schedule.end_tick,
        edges: cs.clocks.iter().zip(edges).map(|(c, e)| (c.name.clone(), e)).collect(),
        waves: nl.nets.iter().map(|n| n.name.clone()).zip(waves).collect::<BTreeMap<_, _>>(),
        verdicts: states.iter().zip(&checkers).map(|(s, c)| s.verdict(c)).collect(),
        msi_log: vec![],
        decisions: vec![],
    })
}
