// SPDX-License-Identifier: Apache-2.0

//! Flattened gate-level netlist.
//!
//! A [`Netlist`] is a graph of cells (flops, gates, constants) connected by
//! nets. Every net has exactly one driver: a cell output, a top-level input
//! port or the output of a black-boxed instance. The netlist is immutable once
//! built; [`NetlistBuilder::finish`] checks the structural invariants and
//! computes a topological order of the combinational cells.

pub mod cone;

pub use cone::{fanin_cone, Cone, ConeCache, ConeSource};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct NetId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, Serialize)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
    pub net: NetId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResetPin {
    pub net: NetId,
    pub active_low: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dff {
    pub clock: NetId,
    pub reset: Option<ResetPin>,
    pub enable: Option<NetId>,
    pub data: NetId,
    pub q: NetId,
    pub reset_value: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "op", rename_all = "UPPERCASE")]
pub enum GateOp {
    And,
    Or,
    Xor,
    Not,
    Buf,
    /// Inputs are `[select, when_one, when_zero]`.
    Mux,
    /// Inputs are listed most-significant first.
    Concat,
    Slice { msb: u32, lsb: u32 },
}

impl GateOp {
    pub fn name(&self) -> &'static str {
        match self {
            GateOp::And => "and",
            GateOp::Or => "or",
            GateOp::Xor => "xor",
            GateOp::Not => "not",
            GateOp::Buf => "buf",
            GateOp::Mux => "mux",
            GateOp::Concat => "concat",
            GateOp::Slice { .. } => "slice",
        }
    }

    /// Single-input ops that cannot glitch by merging signals.
    pub fn is_single_input(&self) -> bool {
        matches!(self, GateOp::Not | GateOp::Buf | GateOp::Slice { .. })
    }

    fn arity_ok(&self, n: usize) -> bool {
        match self {
            GateOp::Not | GateOp::Buf | GateOp::Slice { .. } => n == 1,
            GateOp::Mux => n == 3,
            GateOp::And | GateOp::Or | GateOp::Xor | GateOp::Concat => n >= 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gate {
    #[serde(flatten)]
    pub op: GateOp,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Const {
    pub value: u64,
    pub output: NetId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum CellKind {
    Dff(Dff),
    Gate(Gate),
    Const(Const),
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub name: String,
    #[serde(flatten)]
    pub kind: CellKind,
}

impl Cell {
    pub fn as_dff(&self) -> Option<&Dff> {
        match &self.kind {
            CellKind::Dff(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_gate(&self) -> Option<&Gate> {
        match &self.kind {
            CellKind::Gate(g) => Some(g),
            _ => None,
        }
    }

    pub fn output(&self) -> NetId {
        match &self.kind {
            CellKind::Dff(d) => d.q,
            CellKind::Gate(g) => g.output,
            CellKind::Const(c) => c.output,
        }
    }

    /// Input nets with their pin roles.
    pub fn inputs(&self) -> Vec<(Pin, NetId)> {
        match &self.kind {
            CellKind::Dff(d) => {
                let mut v = vec![(Pin::Clock, d.clock), (Pin::Data, d.data)];
                if let Some(r) = d.reset {
                    v.push((Pin::Reset, r.net));
                }
                if let Some(e) = d.enable {
                    v.push((Pin::Enable, e));
                }
                v
            }
            CellKind::Gate(g) => g
                .inputs
                .iter()
                .enumerate()
                .map(|(i, n)| (Pin::Input(i as u8), *n))
                .collect(),
            CellKind::Const(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pin {
    Clock,
    Reset,
    Enable,
    Data,
    Input(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Driver {
    Cell { cell: CellId },
    Port { port: usize },
    Blackbox { instance: usize, port: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Reader {
    Cell { cell: CellId, pin: Pin },
    Port { port: usize },
    Blackbox { instance: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct Net {
    pub name: String,
    pub width: u32,
    pub drivers: Vec<Driver>,
    pub readers: Vec<Reader>,
    /// Other hierarchical names merged into this net during elaboration.
    pub aliases: Vec<String>,
}

impl Net {
    pub fn driver(&self) -> Option<&Driver> {
        self.drivers.first()
    }

    pub fn mask(&self) -> u64 {
        width_mask(self.width)
    }
}

pub fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// A submodule instance as it appeared before flattening.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceRecord {
    pub path: String,
    pub module: String,
    pub cells: Vec<CellId>,
    pub ports: Vec<(String, Direction, NetId)>,
}

/// An instance of a module that has no body.
#[derive(Debug, Clone, Serialize)]
pub struct BlackboxRecord {
    pub path: String,
    pub module: String,
    pub outputs: Vec<(String, NetId)>,
    pub inputs: Vec<(String, NetId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum StructuralError {
    #[error("net `{net}` has {count} drivers")]
    MultipleDrivers { net: String, count: usize },
    #[error("net `{net}` has no driver")]
    NoDriver { net: String },
    #[error("cell `{cell}`: {message}")]
    BadArity { cell: String, message: String },
    #[error("cell `{cell}`: width mismatch: {message}")]
    WidthMismatch { cell: String, message: String },
    #[error("duplicate {what} identifier `{name}`")]
    DuplicateName { what: String, name: String },
    #[error("net `{net}`: reader/driver index disagreement")]
    IndexMismatch { net: String },
    #[error("net `{net}` has duplicate readers")]
    DuplicateReader { net: String },
    #[error("net `{net}` has zero width")]
    ZeroWidth { net: String },
    #[error("combinational loop through `{cell}`")]
    CombinationalLoop { cell: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct Netlist {
    pub name: String,
    pub cells: Vec<Cell>,
    pub nets: Vec<Net>,
    pub ports: Vec<Port>,
    pub instances: Vec<InstanceRecord>,
    pub blackboxes: Vec<BlackboxRecord>,
    #[serde(skip)]
    comb_order: Vec<CellId>,
    #[serde(skip)]
    net_index: HashMap<String, NetId>,
    #[serde(skip)]
    cell_index: HashMap<String, CellId>,
}

impl Netlist {
    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id.index()]
    }

    /// Looks a net up by canonical name or alias.
    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.net_index.get(name).copied()
    }

    pub fn find_cell(&self, name: &str) -> Option<CellId> {
        self.cell_index.get(name).copied()
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.cells.len() as u32).map(CellId)
    }

    pub fn net_ids(&self) -> impl Iterator<Item = NetId> + '_ {
        (0..self.nets.len() as u32).map(NetId)
    }

    pub fn dffs(&self) -> impl Iterator<Item = (CellId, &Dff)> + '_ {
        self.cell_ids()
            .filter_map(move |id| self.cell(id).as_dff().map(|d| (id, d)))
    }

    /// Gates and constants in dependency order.
    pub fn comb_order(&self) -> &[CellId] {
        &self.comb_order
    }

    /// The cell driving `net`, if the driver is a cell.
    pub fn driver_cell(&self, net: NetId) -> Option<CellId> {
        match self.net(net).driver() {
            Some(Driver::Cell { cell }) => Some(*cell),
            _ => None,
        }
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.net(id).name
    }

    pub fn cell_name(&self, id: CellId) -> &str {
        &self.cell(id).name
    }

    /// Every name (canonical or alias) that resolves to a net.
    pub fn alias_table(&self) -> BTreeMap<&str, NetId> {
        self.net_index.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }

    /// JSON dump with stable key order, used by `--dump-ir`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("netlist serializes")
    }
}

/// Incremental netlist construction.
#[derive(Debug, Default)]
pub struct NetlistBuilder {
    name: String,
    cells: Vec<Cell>,
    nets: Vec<Net>,
    ports: Vec<Port>,
    instances: Vec<InstanceRecord>,
    blackboxes: Vec<BlackboxRecord>,
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_net(&mut self, name: impl Into<String>, width: u32) -> NetId {
        let id = NetId(self.nets.len() as u32);
        self.nets.push(Net {
            name: name.into(),
            width,
            drivers: Vec::new(),
            readers: Vec::new(),
            aliases: Vec::new(),
        });
        id
    }

    pub fn net_width(&self, net: NetId) -> u32 {
        self.nets[net.index()].width
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.nets[net.index()].name
    }

    pub fn add_alias(&mut self, net: NetId, alias: impl Into<String>) {
        let alias = alias.into();
        let n = &mut self.nets[net.index()];
        if n.name != alias && !n.aliases.contains(&alias) {
            n.aliases.push(alias);
        }
    }

    pub fn add_input(&mut self, name: impl Into<String>, width: u32) -> NetId {
        let name = name.into();
        let net = self.add_net(name.clone(), width);
        let port = self.ports.len();
        self.ports.push(Port {
            name,
            direction: Direction::In,
            width,
            net,
        });
        self.nets[net.index()].drivers.push(Driver::Port { port });
        net
    }

    pub fn add_output(&mut self, name: impl Into<String>, net: NetId) {
        let width = self.net_width(net);
        self.ports.push(Port {
            name: name.into(),
            direction: Direction::Out,
            width,
            net,
        });
    }

    fn push_cell(&mut self, name: String, kind: CellKind) -> CellId {
        let id = CellId(self.cells.len() as u32);
        let out = match &kind {
            CellKind::Dff(d) => d.q,
            CellKind::Gate(g) => g.output,
            CellKind::Const(c) => c.output,
        };
        self.nets[out.index()].drivers.push(Driver::Cell { cell: id });
        self.cells.push(Cell { name, kind });
        id
    }

    pub fn add_dff(&mut self, name: impl Into<String>, dff: Dff) -> CellId {
        self.push_cell(name.into(), CellKind::Dff(dff))
    }

    pub fn add_gate(
        &mut self,
        name: impl Into<String>,
        op: GateOp,
        inputs: Vec<NetId>,
        output: NetId,
    ) -> CellId {
        self.push_cell(name.into(), CellKind::Gate(Gate { op, inputs, output }))
    }

    pub fn add_const(&mut self, name: impl Into<String>, value: u64, output: NetId) -> CellId {
        self.push_cell(name.into(), CellKind::Const(Const { value, output }))
    }

    pub fn add_instance(&mut self, record: InstanceRecord) {
        self.instances.push(record);
    }

    pub fn add_blackbox(&mut self, record: BlackboxRecord) {
        let idx = self.blackboxes.len();
        for (port, net) in &record.outputs {
            self.nets[net.index()].drivers.push(Driver::Blackbox {
                instance: idx,
                port: port.clone(),
            });
        }
        self.blackboxes.push(record);
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Builds without checking invariants. The result may violate them;
    /// [`validate`] reports what is wrong.
    pub fn finish_unchecked(self) -> Netlist {
        let NetlistBuilder {
            name,
            cells,
            mut nets,
            ports,
            instances,
            blackboxes,
        } = self;
        for n in nets.iter_mut() {
            n.readers.clear();
        }
        for (ci, cell) in cells.iter().enumerate() {
            for (pin, net) in cell.inputs() {
                let r = Reader::Cell {
                    cell: CellId(ci as u32),
                    pin,
                };
                let readers = &mut nets[net.index()].readers;
                if !readers.contains(&r) {
                    readers.push(r);
                }
            }
        }
        for (pi, port) in ports.iter().enumerate() {
            if port.direction == Direction::Out {
                nets[port.net.index()].readers.push(Reader::Port { port: pi });
            }
        }
        for (bi, bb) in blackboxes.iter().enumerate() {
            for (_, net) in &bb.inputs {
                let r = Reader::Blackbox { instance: bi };
                if !nets[net.index()].readers.contains(&r) {
                    nets[net.index()].readers.push(r);
                }
            }
        }
        let mut net_index = HashMap::new();
        for (i, n) in nets.iter().enumerate() {
            net_index.entry(n.name.clone()).or_insert(NetId(i as u32));
        }
        for (i, n) in nets.iter().enumerate() {
            for a in &n.aliases {
                net_index.entry(a.clone()).or_insert(NetId(i as u32));
            }
        }
        let mut cell_index = HashMap::new();
        for (i, c) in cells.iter().enumerate() {
            cell_index.entry(c.name.clone()).or_insert(CellId(i as u32));
        }
        let mut nl = Netlist {
            name,
            cells,
            nets,
            ports,
            instances,
            blackboxes,
            comb_order: Vec::new(),
            net_index,
            cell_index,
        };
        if let Ok(order) = topo_order(&nl) {
            nl.comb_order = order;
        }
        nl
    }

    /// Builds and checks every invariant.
    pub fn finish(self) -> Result<Netlist, Vec<StructuralError>> {
        let nl = self.finish_unchecked();
        let errors = validate(&nl);
        if errors.is_empty() {
            Ok(nl)
        } else {
            Err(errors)
        }
    }
}

/// Orders gates and constants so every cell comes after the cells driving
/// its inputs. Flops break the dependency.
fn topo_order(nl: &Netlist) -> Result<Vec<CellId>, StructuralError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        None,
        Active,
        Done,
    }
    let mut mark = vec![Mark::None; nl.cells.len()];
    let mut order = Vec::new();
    for root in nl.cell_ids() {
        if matches!(nl.cell(root).kind, CellKind::Dff(_)) || mark[root.index()] != Mark::None {
            continue;
        }
        // iterative DFS: (cell, next input index)
        let mut stack = vec![(root, 0usize)];
        mark[root.index()] = Mark::Active;
        while let Some(&mut (cell, ref mut next)) = stack.last_mut() {
            let inputs = match &nl.cell(cell).kind {
                CellKind::Gate(g) => g.inputs.as_slice(),
                _ => &[],
            };
            if *next < inputs.len() {
                let net = inputs[*next];
                *next += 1;
                if let Some(Driver::Cell { cell: src }) = nl.net(net).driver() {
                    if matches!(nl.cell(*src).kind, CellKind::Dff(_)) {
                        continue;
                    }
                    match mark[src.index()] {
                        Mark::Active => {
                            return Err(StructuralError::CombinationalLoop {
                                cell: nl.cell(*src).name.clone(),
                            })
                        }
                        Mark::None => {
                            mark[src.index()] = Mark::Active;
                            stack.push((*src, 0));
                        }
                        Mark::Done => {}
                    }
                }
            } else {
                mark[cell.index()] = Mark::Done;
                order.push(cell);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Checks every netlist invariant; an empty result means the netlist is
/// well formed.
pub fn validate(nl: &Netlist) -> Vec<StructuralError> {
    let mut errors = Vec::new();

    let mut seen = HashSet::new();
    for n in &nl.nets {
        if !seen.insert(n.name.as_str()) {
            errors.push(StructuralError::DuplicateName {
                what: "net".into(),
                name: n.name.clone(),
            });
        }
    }
    let mut seen = HashSet::new();
    for c in &nl.cells {
        if !seen.insert(c.name.as_str()) {
            errors.push(StructuralError::DuplicateName {
                what: "cell".into(),
                name: c.name.clone(),
            });
        }
    }

    for (ni, n) in nl.nets.iter().enumerate() {
        let id = NetId(ni as u32);
        if n.width == 0 {
            errors.push(StructuralError::ZeroWidth {
                net: n.name.clone(),
            });
        }
        match n.drivers.len() {
            0 => {
                // undriven nets nobody reads are harmless leftovers
                if !n.readers.is_empty() {
                    errors.push(StructuralError::NoDriver {
                        net: n.name.clone(),
                    });
                }
            }
            1 => {}
            count => errors.push(StructuralError::MultipleDrivers {
                net: n.name.clone(),
                count,
            }),
        }
        let mut rs = HashSet::new();
        for r in &n.readers {
            if !rs.insert(format!("{r:?}")) {
                errors.push(StructuralError::DuplicateReader {
                    net: n.name.clone(),
                });
            }
            let agrees = match r {
                Reader::Cell { cell, pin } => nl
                    .cells
                    .get(cell.index())
                    .map(|c| c.inputs().contains(&(*pin, id)))
                    .unwrap_or(false),
                Reader::Port { port } => nl.ports.get(*port).map(|p| p.net) == Some(id),
                Reader::Blackbox { instance } => nl
                    .blackboxes
                    .get(*instance)
                    .map(|b| b.inputs.iter().any(|(_, n)| *n == id))
                    .unwrap_or(false),
            };
            if !agrees {
                errors.push(StructuralError::IndexMismatch {
                    net: n.name.clone(),
                });
            }
        }
        for d in &n.drivers {
            let agrees = match d {
                Driver::Cell { cell } => {
                    nl.cells.get(cell.index()).map(|c| c.output()) == Some(id)
                }
                Driver::Port { port } => nl.ports.get(*port).map(|p| p.net) == Some(id),
                Driver::Blackbox { instance, port } => nl
                    .blackboxes
                    .get(*instance)
                    .map(|b| b.outputs.iter().any(|(p, n)| p == port && *n == id))
                    .unwrap_or(false),
            };
            if !agrees {
                errors.push(StructuralError::IndexMismatch {
                    net: n.name.clone(),
                });
            }
        }
    }

    for c in &nl.cells {
        check_cell(nl, c, &mut errors);
    }

    if let Err(e) = topo_order(nl) {
        errors.push(e);
    }
    errors
}

fn check_cell(nl: &Netlist, c: &Cell, errors: &mut Vec<StructuralError>) {
    let w = |n: NetId| nl.net(n).width;
    match &c.kind {
        CellKind::Dff(d) => {
            if w(d.clock) != 1 {
                errors.push(StructuralError::WidthMismatch {
                    cell: c.name.clone(),
                    message: "clock must be 1 bit".into(),
                });
            }
            if w(d.data) != w(d.q) {
                errors.push(StructuralError::WidthMismatch {
                    cell: c.name.clone(),
                    message: format!("data is {} bits, q is {}", w(d.data), w(d.q)),
                });
            }
            if d.enable.is_some_and(|e| w(e) != 1) || d.reset.is_some_and(|r| w(r.net) != 1) {
                errors.push(StructuralError::WidthMismatch {
                    cell: c.name.clone(),
                    message: "enable and reset must be 1 bit".into(),
                });
            }
        }
        CellKind::Gate(g) => {
            if !g.op.arity_ok(g.inputs.len()) {
                errors.push(StructuralError::BadArity {
                    cell: c.name.clone(),
                    message: format!("{} with {} inputs", g.op.name(), g.inputs.len()),
                });
                return;
            }
            let out = w(g.output);
            let ok = match g.op {
                GateOp::And | GateOp::Or | GateOp::Xor | GateOp::Not | GateOp::Buf => {
                    g.inputs.iter().all(|i| w(*i) == out)
                }
                GateOp::Mux => w(g.inputs[0]) == 1 && w(g.inputs[1]) == out && w(g.inputs[2]) == out,
                GateOp::Concat => g.inputs.iter().map(|i| w(*i)).sum::<u32>() == out,
                GateOp::Slice { msb, lsb } => {
                    msb >= lsb && msb < w(g.inputs[0]) && msb - lsb + 1 == out
                }
            };
            if !ok {
                errors.push(StructuralError::WidthMismatch {
                    cell: c.name.clone(),
                    message: format!("{} operand widths", g.op.name()),
                });
            }
        }
        CellKind::Const(_) => {}
    }
}

/// Evaluates a gate from input values.
pub fn eval_gate(op: GateOp, inputs: &[u64], in_widths: &[u32], out_width: u32) -> u64 {
    let mask = width_mask(out_width);
    match op {
        GateOp::And => inputs.iter().fold(mask, |a, b| a & b),
        GateOp::Or => inputs.iter().fold(0, |a, b| a | b),
        GateOp::Xor => inputs.iter().fold(0, |a, b| a ^ b),
        GateOp::Not => !inputs[0] & mask,
        GateOp::Buf => inputs[0] & mask,
        GateOp::Mux => {
            if inputs[0] & 1 == 1 {
                inputs[1]
            } else {
                inputs[2]
            }
        }
        GateOp::Concat => {
            let mut v = 0u64;
            for (x, w) in inputs.iter().zip(in_widths) {
                v = (v << *w) | (x & width_mask(*w));
            }
            v & mask
        }
        GateOp::Slice { lsb, .. } => (inputs[0] >> lsb) & mask,
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "netlist {} ({} cells, {} nets, {} ports)",
            self.name,
            self.cells.len(),
            self.nets.len(),
            self.ports.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_flop() -> NetlistBuilder {
        let mut b = NetlistBuilder::new("t");
        let clk = b.add_input("clk", 1);
        let d = b.add_input("d", 1);
        let q1 = b.add_net("q1", 1);
        let q2 = b.add_net("q2", 1);
        for (name, data, q) in [("q1", d, q1), ("q2", q1, q2)] {
            b.add_dff(
                name,
                Dff {
                    clock: clk,
                    reset: None,
                    enable: None,
                    data,
                    q,
                    reset_value: 0,
                },
            );
        }
        b.add_output("q", q2);
        b
    }

    #[test]
    fn well_formed_two_flop_validates() {
        let nl = two_flop().finish().unwrap();
        assert!(validate(&nl).is_empty());
        assert_eq!(nl.dffs().count(), 2);
    }

    #[test]
    fn multiple_drivers_reported() {
        let mut b = two_flop();
        let q1 = NetId(2);
        let c = b.add_net("c", 1);
        b.add_gate("buf", GateOp::Buf, vec![c], q1);
        b.add_const("k", 0, c);
        let errs = validate(&b.finish_unchecked());
        assert_eq!(
            errs,
            vec![StructuralError::MultipleDrivers {
                net: "q1".into(),
                count: 2
            }]
        );
    }

    #[test]
    fn floating_gate_input_reported() {
        let mut b = two_flop();
        let f = b.add_net("floating", 1);
        let o = b.add_net("o", 1);
        b.add_gate("inv", GateOp::Not, vec![f], o);
        let errs = validate(&b.finish_unchecked());
        assert_eq!(
            errs,
            vec![StructuralError::NoDriver {
                net: "floating".into()
            }]
        );
    }

    #[test]
    fn comb_loop_is_an_error() {
        let mut b = NetlistBuilder::new("loop");
        let a = b.add_net("a", 1);
        let c = b.add_net("c", 1);
        b.add_gate("g1", GateOp::Not, vec![a], c);
        b.add_gate("g2", GateOp::Buf, vec![c], a);
        let errs = b.finish().unwrap_err();
        assert!(matches!(
            errs.last(),
            Some(StructuralError::CombinationalLoop { .. })
        ));
    }

    #[test]
    fn gate_arity_checked() {
        let mut b = NetlistBuilder::new("arity");
        let a = b.add_input("a", 1);
        let o = b.add_net("o", 1);
        b.add_gate("g", GateOp::And, vec![a], o);
        let errs = validate(&b.finish_unchecked());
        assert!(matches!(errs[0], StructuralError::BadArity { .. }));
    }

    #[test]
    fn eval_concat_and_slice() {
        assert_eq!(eval_gate(GateOp::Concat, &[1, 0b10], &[1, 2], 3), 0b110);
        assert_eq!(
            eval_gate(GateOp::Slice { msb: 2, lsb: 1 }, &[0b110], &[3], 2),
            0b11
        );
        assert_eq!(eval_gate(GateOp::Not, &[0b01], &[2], 2), 0b10);
    }
}
