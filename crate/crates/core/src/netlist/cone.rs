// SPDX-License-Identifier: Apache-2.0

//! Backward (fan-in) cone traversal.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use serde::Serialize;

use super::{CellId, CellKind, Driver, NetId, Netlist, StructuralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "type", content = "index", rename_all = "lowercase")]
pub enum ConeSource {
    Dff(CellId),
    Port(usize),
    Blackbox(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Cone {
    pub sequential_sources: BTreeSet<ConeSource>,
    pub comb_cells: BTreeSet<CellId>,
    pub consts: BTreeSet<CellId>,
}

impl Cone {
    fn absorb(&mut self, other: &Cone) {
        self.sequential_sources
            .extend(other.sequential_sources.iter().copied());
        self.comb_cells.extend(other.comb_cells.iter().copied());
        self.consts.extend(other.consts.iter().copied());
    }

    pub fn dff_sources(&self) -> impl Iterator<Item = CellId> + '_ {
        self.sequential_sources.iter().filter_map(|s| match s {
            ConeSource::Dff(c) => Some(*c),
            _ => None,
        })
    }
}

/// Memoizes sequential-stopping cones for one netlist. Owned by a single
/// analysis; not shared across threads.
#[derive(Debug, Default)]
pub struct ConeCache {
    memo: HashMap<NetId, Arc<Cone>>,
}

impl ConeCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fan-in cone of `start`, stopping at flop outputs and ports.
    pub fn cone(&mut self, nl: &Netlist, start: NetId) -> Result<Arc<Cone>, StructuralError> {
        let mut active = HashSet::new();
        self.cone_rec(nl, start, &mut active)
    }

    fn cone_rec(
        &mut self,
        nl: &Netlist,
        net: NetId,
        active: &mut HashSet<CellId>,
    ) -> Result<Arc<Cone>, StructuralError> {
        if let Some(c) = self.memo.get(&net) {
            return Ok(c.clone());
        }
        let mut cone = Cone::default();
        match nl.net(net).driver() {
            Some(Driver::Port { port }) => {
                cone.sequential_sources.insert(ConeSource::Port(*port));
            }
            Some(Driver::Blackbox { instance, .. }) => {
                cone.sequential_sources
                    .insert(ConeSource::Blackbox(*instance));
            }
            Some(Driver::Cell { cell }) => match &nl.cell(*cell).kind {
                CellKind::Dff(_) => {
                    cone.sequential_sources.insert(ConeSource::Dff(*cell));
                }
                CellKind::Const(_) => {
                    cone.consts.insert(*cell);
                }
                CellKind::Gate(g) => {
                    if !active.insert(*cell) {
                        return Err(StructuralError::CombinationalLoop {
                            cell: nl.cell(*cell).name.clone(),
                        });
                    }
                    cone.comb_cells.insert(*cell);
                    for input in &g.inputs {
                        let sub = self.cone_rec(nl, *input, active)?;
                        cone.absorb(&sub);
                    }
                    active.remove(cell);
                }
            },
            None => {}
        }
        let cone = Arc::new(cone);
        self.memo.insert(net, cone.clone());
        Ok(cone)
    }
}

/// Uncached fan-in cone. With `stop_at_sequential` unset the traversal also
/// walks through every flop input, collecting the full transitive fan-in.
pub fn fanin_cone(
    nl: &Netlist,
    start: NetId,
    stop_at_sequential: bool,
) -> Result<Cone, StructuralError> {
    let mut cone = Cone::default();
    let mut visited_nets = HashSet::new();
    let mut on_stack = HashSet::new();
    walk(
        nl,
        start,
        stop_at_sequential,
        &mut cone,
        &mut visited_nets,
        &mut on_stack,
    )?;
    Ok(cone)
}

fn walk(
    nl: &Netlist,
    net: NetId,
    stop: bool,
    cone: &mut Cone,
    visited: &mut HashSet<NetId>,
    on_stack: &mut HashSet<CellId>,
) -> Result<(), StructuralError> {
    if let Some(Driver::Cell { cell }) = nl.net(net).driver() {
        if on_stack.contains(cell) && nl.cell(*cell).as_gate().is_some() {
            return Err(StructuralError::CombinationalLoop {
                cell: nl.cell(*cell).name.clone(),
            });
        }
    }
    if !visited.insert(net) {
        return Ok(());
    }
    match nl.net(net).driver() {
        Some(Driver::Port { port }) => {
            cone.sequential_sources.insert(ConeSource::Port(*port));
        }
        Some(Driver::Blackbox { instance, .. }) => {
            cone.sequential_sources
                .insert(ConeSource::Blackbox(*instance));
        }
        Some(Driver::Cell { cell }) => match &nl.cell(*cell).kind {
            CellKind::Const(_) => {
                cone.consts.insert(*cell);
            }
            CellKind::Dff(_) => {
                cone.sequential_sources.insert(ConeSource::Dff(*cell));
                if !stop {
                    // flops break combinational loops, so a fresh stack
                    let mut fresh = HashSet::new();
                    for (_, input) in nl.cell(*cell).inputs() {
                        walk(nl, input, stop, cone, visited, &mut fresh)?;
                    }
                }
            }
            CellKind::Gate(g) => {
                on_stack.insert(*cell);
                cone.comb_cells.insert(*cell);
                for input in &g.inputs {
                    walk(nl, *input, stop, cone, visited, on_stack)?;
                }
                on_stack.remove(cell);
            }
        },
        None => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{Dff, GateOp, NetlistBuilder};

    fn flop(b: &mut NetlistBuilder, name: &str, clk: NetId, d: NetId) -> NetId {
        let q = b.add_net(name, 1);
        b.add_dff(
            name,
            Dff {
                clock: clk,
                reset: None,
                enable: None,
                data: d,
                q,
                reset_value: 0,
            },
        );
        q
    }

    #[test]
    fn cone_of_flop_output_is_the_flop() {
        let mut b = NetlistBuilder::new("t");
        let clk = b.add_input("clk", 1);
        let d = b.add_input("d", 1);
        let q = flop(&mut b, "ff", clk, d);
        let nl = b.finish().unwrap();
        let c = fanin_cone(&nl, q, true).unwrap();
        assert_eq!(
            c.sequential_sources,
            BTreeSet::from([ConeSource::Dff(CellId(0))])
        );
        assert!(c.comb_cells.is_empty());
    }

    #[test]
    fn xor_of_two_flops() {
        let mut b = NetlistBuilder::new("t");
        let clk = b.add_input("clk", 1);
        let d = b.add_input("d", 1);
        let q1 = flop(&mut b, "ff1", clk, d);
        let q2 = flop(&mut b, "ff2", clk, d);
        let x = b.add_net("x", 1);
        let xor = b.add_gate("xor", GateOp::Xor, vec![q1, q2], x);
        let nl = b.finish().unwrap();
        let c = fanin_cone(&nl, x, true).unwrap();
        assert_eq!(
            c.sequential_sources,
            BTreeSet::from([ConeSource::Dff(CellId(0)), ConeSource::Dff(CellId(1))])
        );
        assert_eq!(c.comb_cells, BTreeSet::from([xor]));
        let mut cache = ConeCache::new();
        assert_eq!(*cache.cone(&nl, x).unwrap(), c);
    }

    #[test]
    fn non_stopping_cone_walks_through_flops() {
        let mut b = NetlistBuilder::new("t");
        let clk = b.add_input("clk", 1);
        let d = b.add_input("d", 1);
        let q1 = flop(&mut b, "ff1", clk, d);
        let q2 = flop(&mut b, "ff2", clk, q1);
        let nl = b.finish().unwrap();
        let c = fanin_cone(&nl, q2, false).unwrap();
        assert!(c.sequential_sources.contains(&ConeSource::Dff(CellId(0))));
        assert!(c.sequential_sources.contains(&ConeSource::Port(0)));
        assert!(c.sequential_sources.contains(&ConeSource::Port(1)));
    }

    #[test]
    fn loop_detected() {
        let mut b = NetlistBuilder::new("loop");
        let a = b.add_net("a", 1);
        let c = b.add_net("c", 1);
        b.add_gate("g1", GateOp::Not, vec![a], c);
        b.add_gate("g2", GateOp::Buf, vec![c], a);
        let nl = b.finish_unchecked();
        assert!(matches!(
            fanin_cone(&nl, c, true),
            Err(StructuralError::CombinationalLoop { .. })
        ));
        assert!(ConeCache::new().cone(&nl, c).is_err());
    }
}
