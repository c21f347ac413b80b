// SPDX-License-Identifier: Apache-2.0

//! Event-driven multi-clock simulation.
//!
//! Time is an integer tick. At a tick with clock edges every flop's next
//! value is computed from the pre-edge state, metastability injection
//! rewrites the captured bits of crossing destinations, then flops and
//! stimulus-driven ports update and asynchronous resets settle.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::checkers::{instantiate_checkers, latency_checkers, CheckerSpec, CheckerState, Verdict};
use super::stimulus::{Stimulus, StimulusError};
use super::{MsiConfig, MsiMode};
use crate::analysis::Analysis;
use crate::coverage::CoverageDb;
use crate::netlist::cone::ConeSource;
use crate::netlist::{eval_gate, CellId, CellKind, Direction, NetId, Netlist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    Setup,
    Hold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsiEvent {
    pub tick: u64,
    pub pair: String,
    pub bit: u32,
    pub kind: ViolationKind,
    pub resolved: u8,
}

/// Change-compressed waveform of one net.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wave {
    pub width: u32,
    pub init: u64,
    /// (tick, value) pairs; a change at tick `t` happens after the edges
    /// at `t`.
    pub changes: Vec<(u64, u64)>,
}

impl Wave {
    /// Value sampled just before the edges at `tick`.
    pub fn before(&self, tick: u64) -> u64 {
        let i = self.changes.partition_point(|(t, _)| *t < tick);
        if i == 0 {
            self.init
        } else {
            self.changes[i - 1].1
        }
    }

    /// Value after everything at `tick` settled.
    pub fn after(&self, tick: u64) -> u64 {
        let i = self.changes.partition_point(|(t, _)| *t <= tick);
        if i == 0 {
            self.init
        } else {
            self.changes[i - 1].1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTrace {
    pub end_tick: u64,
    /// Edges simulated per clock.
    pub edges: BTreeMap<String, u64>,
    /// Every net by name; empty unless recording was requested.
    pub waves: BTreeMap<String, Wave>,
    pub verdicts: Vec<Verdict>,
    pub msi_log: Vec<MsiEvent>,
    /// Injection decisions in the order they were taken.
    pub decisions: Vec<bool>,
}

impl SimTrace {
    pub fn failing(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed())
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(Verdict::passed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum SimError {
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error("net `{net}` is {width} bits wide; simulation supports at most 64")]
    TooWide { net: String, width: u32 },
    #[error("internal inconsistency at tick {tick}: {message}")]
    SimDivergence { tick: u64, message: String },
    #[error("{count} injection decisions exceed the budget of {max}")]
    DecisionBudgetExceeded { count: usize, max: u32 },
    #[error("exhaustive budget {max} is above the cap of {cap}")]
    BudgetTooLarge { max: u32, cap: u32 },
}

/// Port value changes in tick order, derived from a stimulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub end_tick: u64,
    /// tick -> (port net, value), applied in order after the edges.
    pub sets: BTreeMap<u64, Vec<(NetId, u64)>>,
}

/// Ticks of every clock edge up to `end`, with the indices of the clocks
/// firing there.
pub fn edge_ticks(clocks: &[crate::frontend::ClockSpec], end: u64) -> BTreeMap<u64, Vec<usize>> {
    let mut m: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, c) in clocks.iter().enumerate() {
        let mut t = c.phase;
        while t <= end {
            m.entry(t).or_default().push(i);
            t += c.period;
        }
    }
    m
}

pub fn resolve_schedule(nl: &Netlist, cs: &crate::frontend::ConstraintSet, stim: &Stimulus) -> Result<Schedule, StimulusError> {
    let last = stim.sets.last().map_or(0, |s| s.line);
    let run = cs.clock(&stim.run_clock).ok_or_else(|| StimulusError::UnknownClock {
        line: last,
        name: stim.run_clock.clone(),
    })?;
    if stim.run_edges == 0 {
        return Err(StimulusError::Syntax {
            line: last,
            message: "`run` needs at least one edge".into(),
        });
    }
    let end_tick = run.phase + (stim.run_edges - 1) * run.period;
    let input = |line: u32, name: &str| -> Result<(NetId, u32), StimulusError> {
        nl.port(name)
            .filter(|p| p.direction == Direction::In && cs.clock(name).is_none())
            .map(|p| (p.net, p.width))
            .ok_or_else(|| StimulusError::UnknownPort {
                line,
                name: name.to_string(),
            })
    };
    let mut at: BTreeMap<u64, Vec<(NetId, u64)>> = BTreeMap::new();
    for s in &stim.sets {
        let c = cs.clock(&s.clock).ok_or_else(|| StimulusError::UnknownClock {
            line: s.line,
            name: s.clock.clone(),
        })?;
        let (net, width) = input(s.line, &s.port)?;
        if s.value & !crate::netlist::width_mask(width) != 0 {
            return Err(StimulusError::StimulusOutOfRange {
                line: s.line,
                port: s.port.clone(),
                value: s.value,
                width,
            });
        }
        let tick = c.phase + s.edge * c.period;
        if tick <= end_tick {
            at.entry(tick).or_default().push((net, s.value));
        }
    }
    let mut drivers = Vec::new();
    for r in &stim.random {
        let ports = r
            .ports
            .iter()
            .map(|p| input(r.line, p))
            .collect::<Result<Vec<_>, _>>()?;
        drivers.push((ports, r.probability, ChaCha8Rng::seed_from_u64(r.seed)));
    }
    let mut ticks: Vec<u64> = at.keys().copied().collect();
    if !drivers.is_empty() {
        ticks.extend((0..stim.run_edges).map(|k| run.phase + k * run.period));
        ticks.sort_unstable();
        ticks.dedup();
    }
    let run_ticks: std::collections::BTreeSet<u64> =
        (0..stim.run_edges).map(|k| run.phase + k * run.period).collect();
    let mut cur: BTreeMap<NetId, u64> = BTreeMap::new();
    let mut sets: BTreeMap<u64, Vec<(NetId, u64)>> = BTreeMap::new();
    for t in ticks {
        let mut here = Vec::new();
        if run_ticks.contains(&t) {
            for (ports, p, rng) in drivers.iter_mut() {
                for (net, width) in ports.iter() {
                    let mut v = cur.get(net).copied().unwrap_or(0);
                    for b in 0..*width {
                        if p.draw(rng) {
                            v ^= 1 << b;
                        }
                    }
                    cur.insert(*net, v);
                    here.push((*net, v));
                }
            }
        }
        for (net, v) in at.get(&t).into_iter().flatten() {
            cur.insert(*net, *v);
            here.push((*net, *v));
        }
        if !here.is_empty() {
            sets.insert(t, here);
        }
    }
    Ok(Schedule { end_tick, sets })
}

/// Where a crossing's source value comes from.
#[derive(Debug, Clone, Copy)]
enum Src {
    Flop { cell: CellId, clock: usize },
    Port,
}

#[derive(Debug, Clone)]
struct Crossing {
    id: String,
    src: Src,
    src_net: NetId,
    path: Vec<CellId>,
}

/// Injection sites of one destination flop, per pin.
#[derive(Debug, Clone)]
struct Site {
    dst: CellId,
    data: Vec<usize>,
    enable: Vec<usize>,
}

#[derive(Debug, Clone)]
struct FlopInfo {
    cell: CellId,
    clock: usize,
    gated: bool,
}

pub struct Simulator<'a> {
    nl: &'a Netlist,
    a: &'a Analysis,
    clocks: Vec<crate::frontend::ClockSpec>,
    clock_ports: Vec<NetId>,
    ticks: BTreeMap<u64, Vec<usize>>,
    schedule: Schedule,
    flops: Vec<FlopInfo>,
    flop_index: BTreeMap<CellId, usize>,
    any_gated: bool,
    crossings: Vec<Crossing>,
    sites: Vec<Site>,
    checkers: Vec<CheckerSpec>,
    sampled_by: Vec<Vec<usize>>,
}

enum Decider {
    Random(ChaCha8Rng),
    Script(Vec<bool>),
}

struct RunState {
    vals: Vec<u64>,
    prev: Vec<u64>,
    changed_at: Vec<Option<u64>>,
    checkers: Vec<CheckerState>,
    log: Vec<MsiEvent>,
    decisions: Vec<bool>,
    waves: Vec<Wave>,
    recorded: Vec<u64>,
}

impl<'a> Simulator<'a> {
    /// A simulator running the checkers implied by `a` plus the stimulus's
    /// latency expectations.
    pub fn new(a: &'a Analysis, stim: &Stimulus) -> Result<Self, SimError> {
        let mut checkers = instantiate_checkers(a);
        checkers.extend(latency_checkers(a, &stim.latency)?);
        Self::with_checkers(a, stim, checkers)
    }

    pub fn with_checkers(a: &'a Analysis, stim: &Stimulus, checkers: Vec<CheckerSpec>) -> Result<Self, SimError> {
        let nl = &a.netlist;
        for n in &nl.nets {
            if n.width > 64 {
                return Err(SimError::TooWide {
                    net: n.name.clone(),
                    width: n.width,
                });
            }
        }
        let clocks = a.constraints.clocks.clone();
        let clock_ports: Vec<NetId> = clocks
            .iter()
            .map(|c| nl.port(&c.name).map(|p| p.net).expect("clock ports exist after domain analysis"))
            .collect();
        let schedule = resolve_schedule(nl, &a.constraints, stim)?;
        let ticks = edge_ticks(&clocks, schedule.end_tick);
        let clock_idx = |name: &str| clocks.iter().position(|c| c.name == name).expect("declared clock");
        let gated: std::collections::BTreeSet<CellId> = a
            .domains
            .notes
            .iter()
            .filter_map(|n| match n {
                crate::domains::DomainNote::ClockGate { flop, .. } => Some(*flop),
                _ => None,
            })
            .collect();
        let mut flops = Vec::new();
        let mut flop_index = BTreeMap::new();
        for (id, _) in nl.dffs() {
            flop_index.insert(id, flops.len());
            flops.push(FlopInfo {
                cell: id,
                clock: clock_idx(&a.domains.flop_clock_root[&id]),
                gated: gated.contains(&id),
            });
        }
        let mut crossings = Vec::new();
        let mut sites: BTreeMap<CellId, Site> = BTreeMap::new();
        for p in a.pairs.iter().filter(|p| p.suppressed.is_none()) {
            let src = match p.src {
                ConeSource::Dff(c) => Src::Flop {
                    cell: c,
                    clock: flops[flop_index[&c]].clock,
                },
                ConeSource::Port(_) => Src::Port,
                ConeSource::Blackbox(_) => continue,
            };
            let site = sites.entry(p.dst).or_insert_with(|| Site {
                dst: p.dst,
                data: vec![],
                enable: vec![],
            });
            match p.pin {
                crate::pairs::PairPin::Data => site.data.push(crossings.len()),
                crate::pairs::PairPin::Enable => site.enable.push(crossings.len()),
            }
            crossings.push(Crossing {
                id: p.id.clone(),
                src,
                src_net: p.src_net,
                path: p.path.clone(),
            });
        }
        for s in sites.values_mut() {
            let key = |i: &usize| crate::sync::id_num(&crossings[*i].id);
            s.data.sort_by_key(key);
            s.enable.sort_by_key(key);
        }
        let mut sampled_by = vec![Vec::new(); clocks.len()];
        for (i, c) in checkers.iter().enumerate() {
            sampled_by[clock_idx(&c.clock)].push(i);
        }
        Ok(Simulator {
            nl,
            a,
            clocks,
            clock_ports,
            ticks,
            schedule,
            any_gated: flops.iter().any(|f| f.gated),
            flops,
            flop_index,
            crossings,
            sites: sites.into_values().collect(),
            checkers,
            sampled_by,
        })
    }

    pub fn checkers(&self) -> &[CheckerSpec] {
        &self.checkers
    }

    pub fn analysis(&self) -> &Analysis {
        self.a
    }

    pub fn end_tick(&self) -> u64 {
        self.schedule.end_tick
    }

    /// Runs with the injection mode of `msi`; exhaustive mode behaves like
    /// an all-skip decision script.
    pub fn run(&self, msi: &MsiConfig, record: bool) -> Result<SimTrace, SimError> {
        let decider = match msi.mode {
            MsiMode::Random { seed } => Decider::Random(ChaCha8Rng::seed_from_u64(seed)),
            MsiMode::Exhaustive { .. } => Decider::Script(Vec::new()),
        };
        self.execute(msi, decider, record)
    }

    /// Runs with injection decisions taken from `script`; decisions past
    /// its end skip the violation.
    pub fn run_script(&self, msi: &MsiConfig, script: &[bool], record: bool) -> Result<SimTrace, SimError> {
        self.execute(msi, Decider::Script(script.to_vec()), record)
    }

    fn eval_comb(&self, vals: &mut [u64]) {
        let nl = self.nl;
        let mut ins = Vec::with_capacity(4);
        let mut widths = Vec::with_capacity(4);
        for c in nl.comb_order() {
            match &nl.cell(*c).kind {
                CellKind::Gate(g) => {
                    ins.clear();
                    widths.clear();
                    for i in &g.inputs {
                        ins.push(vals[i.index()]);
                        widths.push(nl.net(*i).width);
                    }
                    vals[g.output.index()] = eval_gate(g.op, &ins, &widths, nl.net(g.output).width);
                }
                CellKind::Const(k) => vals[k.output.index()] = k.value & nl.net(k.output).mask(),
                CellKind::Dff(_) => {}
            }
        }
    }

    fn in_reset(&self, cell: CellId, vals: &[u64]) -> bool {
        let d = self.nl.cell(cell).as_dff().expect("flop");
        d.reset.is_some_and(|r| (vals[r.net.index()] & 1 == 1) != r.active_low)
    }

    /// Next value of a flop from `vals`, ignoring injection.
    fn flop_next(&self, cell: CellId, vals: &[u64]) -> u64 {
        let d = self.nl.cell(cell).as_dff().expect("flop");
        if self.in_reset(cell, vals) {
            return d.reset_value;
        }
        match d.enable {
            Some(e) if vals[e.index()] & 1 == 0 => vals[d.q.index()],
            _ => vals[d.data.index()],
        }
    }

    /// Flops clocked at a tick where `firing` clocks rise. A gated clock
    /// fires when its cone evaluates to 1 with the root high and every
    /// other input at its current value.
    fn triggered(&self, firing: &[usize], vals: &[u64]) -> Vec<bool> {
        let mut on = vec![false; self.clocks.len()];
        for c in firing {
            on[*c] = true;
        }
        let gv = if self.any_gated {
            let mut g = vals.to_vec();
            for c in firing {
                g[self.clock_ports[*c].index()] = 1;
            }
            self.eval_comb(&mut g);
            Some(g)
        } else {
            None
        };
        self.flops
            .iter()
            .map(|f| {
                on[f.clock]
                    && (!f.gated || {
                        let d = self.nl.cell(f.cell).as_dff().expect("flop");
                        gv.as_ref().expect("gated values")[d.clock.index()] & 1 == 1
                    })
            })
            .collect()
    }

    /// Settles asynchronous resets; returns false if they never settle.
    fn settle_resets(&self, st: &mut RunState, tick: u64) -> bool {
        for _ in 0..=self.flops.len() {
            let mut changed = false;
            for f in &self.flops {
                let d = self.nl.cell(f.cell).as_dff().expect("flop");
                if self.in_reset(f.cell, &st.vals) && st.vals[d.q.index()] != d.reset_value {
                    set(st, d.q, d.reset_value, tick);
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
            self.eval_comb(&mut st.vals);
        }
        false
    }

    /// Value the sink of crossing `x` takes when its source is `src_value`.
    fn eval_path(&self, x: &Crossing, sink: NetId, src_value: u64, vals: &[u64]) -> u64 {
        if sink == x.src_net {
            return src_value;
        }
        let nl = self.nl;
        let mut local: BTreeMap<NetId, u64> = BTreeMap::new();
        local.insert(x.src_net, src_value);
        let get = |local: &BTreeMap<NetId, u64>, n: NetId| local.get(&n).copied().unwrap_or(vals[n.index()]);
        for c in &x.path {
            let g = nl.cell(*c).as_gate().expect("path cells are gates");
            let ins: Vec<u64> = g.inputs.iter().map(|i| get(&local, *i)).collect();
            let widths: Vec<u32> = g.inputs.iter().map(|i| nl.net(*i).width).collect();
            local.insert(g.output, eval_gate(g.op, &ins, &widths, nl.net(g.output).width));
        }
        get(&local, sink)
    }

    fn execute(&self, msi: &MsiConfig, mut decider: Decider, record: bool) -> Result<SimTrace, SimError> {
        let nl = self.nl;
        let n = nl.nets.len();
        let mut st = RunState {
            vals: vec![0; n],
            prev: vec![0; n],
            changed_at: vec![None; n],
            checkers: self.checkers.iter().map(CheckerState::new).collect(),
            log: Vec::new(),
            decisions: Vec::new(),
            waves: Vec::new(),
            recorded: Vec::new(),
        };
        for f in &self.flops {
            let d = nl.cell(f.cell).as_dff().expect("flop");
            st.vals[d.q.index()] = d.reset_value;
        }
        self.eval_comb(&mut st.vals);
        if !self.settle_resets(&mut st, 0) {
            return Err(SimError::SimDivergence {
                tick: 0,
                message: "asynchronous resets do not settle".into(),
            });
        }
        st.changed_at.iter_mut().for_each(|c| *c = None);
        if record {
            st.waves = nl
                .nets
                .iter()
                .zip(&st.vals)
                .map(|(net, v)| Wave {
                    width: net.width,
                    init: *v,
                    changes: vec![],
                })
                .collect();
            st.recorded = st.vals.clone();
        }
        let mut edges = vec![0u64; self.clocks.len()];
        let ticks: Vec<(u64, &Vec<usize>)> = self.ticks.iter().map(|(t, c)| (*t, c)).collect();
        for (t, firing) in &ticks {
            let t = *t;
            for c in firing.iter() {
                edges[*c] += 1;
                for k in &self.sampled_by[*c] {
                    let vals = &st.vals;
                    st.checkers[*k].sample(&self.checkers[*k], t, |net| vals[net.index()]);
                }
            }
            let trig = self.triggered(firing, &st.vals);
            let mut next: Vec<Option<u64>> = vec![None; self.flops.len()];
            for (i, f) in self.flops.iter().enumerate() {
                if trig[i] {
                    next[i] = Some(self.flop_next(f.cell, &st.vals));
                }
            }
            if msi.enabled {
                self.inject(msi, &mut decider, &mut st, t, &trig, &mut next);
            }
            for (i, f) in self.flops.iter().enumerate() {
                if let Some(v) = next[i] {
                    let q = nl.cell(f.cell).output();
                    set(&mut st, q, v, t);
                }
            }
            if let Some(sets) = self.schedule.sets.get(&t) {
                for (net, v) in sets {
                    set(&mut st, *net, *v, t);
                }
            }
            self.eval_comb(&mut st.vals);
            if !self.settle_resets(&mut st, t) {
                return Err(SimError::SimDivergence {
                    tick: t,
                    message: "asynchronous resets do not settle".into(),
                });
            }
            if record {
                for i in 0..n {
                    if st.vals[i] != st.recorded[i] {
                        st.waves[i].changes.push((t, st.vals[i]));
                        st.recorded[i] = st.vals[i];
                    }
                }
            }
        }
        let verdicts = st
            .checkers
            .iter()
            .zip(&self.checkers)
            .map(|(s, spec)| s.verdict(spec))
            .collect();
        let waves = if record {
            nl.nets.iter().map(|net| net.name.clone()).zip(st.waves).collect()
        } else {
            BTreeMap::new()
        };
        Ok(SimTrace {
            end_tick: self.schedule.end_tick,
            edges: self
                .clocks
                .iter()
                .zip(edges)
                .map(|(c, e)| (c.name.clone(), e))
                .collect(),
            waves,
            verdicts,
            msi_log: st.log,
            decisions: st.decisions,
        })
    }

    /// Value the source of `x` is about to take within the hold window, if
    /// it changes.
    fn upcoming(
        &self,
        x: &Crossing,
        t: u64,
        hold: u64,
        vals: &[u64],
        trig: &[bool],
        next: &[Option<u64>],
        lookahead: &mut Option<Vec<u64>>,
    ) -> Option<u64> {
        let cur = vals[x.src_net.index()];
        match x.src {
            Src::Flop { cell, clock } => {
                let fi = self.flop_index[&cell];
                if trig[fi] {
                    let v = next[fi].expect("triggered flops have a next value");
                    if v != cur {
                        return Some(v);
                    }
                }
                let c = &self.clocks[clock];
                let after = t + 1;
                let first = if after <= c.phase {
                    c.phase
                } else {
                    c.phase + (after - c.phase).div_ceil(c.period) * c.period
                };
                if first > t + hold || hold == 0 {
                    return None;
                }
                let la = lookahead.get_or_insert_with(|| {
                    let mut l = vals.to_vec();
                    for (i, f) in self.flops.iter().enumerate() {
                        if let Some(v) = next[i] {
                            l[self.nl.cell(f.cell).output().index()] = v;
                        }
                    }
                    if let Some(sets) = self.schedule.sets.get(&t) {
                        for (net, v) in sets {
                            l[net.index()] = *v;
                        }
                    }
                    self.eval_comb(&mut l);
                    l
                });
                let fires = {
                    let firing: Vec<usize> = self.ticks.get(&first).cloned().unwrap_or_default();
                    self.triggered(&firing, la)[fi]
                };
                if !fires {
                    return None;
                }
                let v = self.flop_next(cell, la);
                (v != cur).then_some(v)
            }
            Src::Port => self
                .schedule
                .sets
                .range(t..=t + hold)
                .flat_map(|(_, s)| s.iter())
                .filter(|(net, _)| *net == x.src_net)
                .map(|(_, v)| *v)
                .find(|v| *v != cur),
        }
    }

    fn inject(
        &self,
        msi: &MsiConfig,
        decider: &mut Decider,
        st: &mut RunState,
        t: u64,
        trig: &[bool],
        next: &mut [Option<u64>],
    ) {
        let nl = self.nl;
        let mut lookahead: Option<Vec<u64>> = None;
        for site in &self.sites {
            let fi = self.flop_index[&site.dst];
            if !trig[fi] || self.in_reset(site.dst, &st.vals) {
                continue;
            }
            let d = nl.cell(site.dst).as_dff().expect("flop");
            let mut pin_vals = [st.vals[d.data.index()], d.enable.map_or(1, |e| st.vals[e.index()])];
            let mut touched = false;
            for (pin_i, (pin_net, xs)) in [(Some(d.data), &site.data), (d.enable, &site.enable)]
                .into_iter()
                .enumerate()
            {
                let Some(pin_net) = pin_net else { continue };
                if xs.is_empty() {
                    continue;
                }
                let reference = st.vals[pin_net.index()];
                let mask = nl.net(pin_net).mask();
                let mut decided = 0u64;
                let mut value = reference;
                for kind in [ViolationKind::Setup, ViolationKind::Hold] {
                    for xi in xs.iter() {
                        let x = &self.crossings[*xi];
                        let src_alt = match kind {
                            ViolationKind::Setup => match st.changed_at[x.src_net.index()] {
                                Some(u) if u < t && u + msi.setup_window >= t => Some(st.prev[x.src_net.index()]),
                                _ => None,
                            },
                            ViolationKind::Hold => {
                                self.upcoming(x, t, msi.hold_window, &st.vals, trig, next, &mut lookahead)
                            }
                        };
                        let Some(src_alt) = src_alt else { continue };
                        let alt = self.eval_path(x, pin_net, src_alt, &st.vals);
                        let diff = (alt ^ reference) & mask & !decided;
                        for bit in 0..64u32 {
                            if diff >> bit & 1 == 0 {
                                continue;
                            }
                            decided |= 1 << bit;
                            let take = match decider {
                                Decider::Random(rng) => msi.probability_for(&x.id).draw(rng),
                                Decider::Script(s) => s.get(st.decisions.len()).copied().unwrap_or(false),
                            };
                            st.decisions.push(take);
                            if take {
                                let b = alt >> bit & 1;
                                value = (value & !(1 << bit)) | (b << bit);
                                st.log.push(MsiEvent {
                                    tick: t,
                                    pair: x.id.clone(),
                                    bit,
                                    kind,
                                    resolved: b as u8,
                                });
                                touched = true;
                            }
                        }
                    }
                }
                pin_vals[pin_i] = value;
            }
            if touched {
                next[fi] = Some(if pin_vals[1] & 1 == 1 {
                    pin_vals[0]
                } else {
                    st.vals[d.q.index()]
                });
            }
        }
    }
}

fn set(st: &mut RunState, net: NetId, v: u64, tick: u64) {
    let i = net.index();
    if st.vals[i] != v {
        st.prev[i] = st.vals[i];
        st.vals[i] = v;
        st.changed_at[i] = Some(tick);
    }
}

/// Simulates with metastability injection in random mode and returns the
/// trace with the coverage it produced.
pub fn simulate(a: &Analysis, stim: &Stimulus, msi: &MsiConfig, record: bool) -> Result<(SimTrace, CoverageDb), SimError> {
    let sim = Simulator::new(a, stim)?;
    let trace = sim.run(msi, record)?;
    let mut db = CoverageDb::new(a, "");
    if let MsiMode::Random { seed } = msi.mode {
        db.seeds.push(seed);
    }
    for e in &trace.msi_log {
        db.record(&e.pair, e.bit, e.kind, e.resolved).map_err(|m| SimError::SimDivergence {
            tick: e.tick,
            message: m.to_string(),
        })?;
    }
    db.edges = trace.edges.values().sum();
    Ok((trace, db))
}
