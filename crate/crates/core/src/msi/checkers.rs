// SPDX-License-Identifier: Apache-2.0

//! Runtime protocol checkers. Every checker samples net values just before
//! the edges of one clock and is disabled while its domain reset is
//! asserted.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::stimulus::{LatencyExpect, StimulusError};
use crate::analysis::Analysis;
use crate::netlist::cone::ConeSource;
use crate::netlist::{NetId, Netlist};
use crate::sync::{PairStatus, SyncKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Signal {
    #[serde(skip)]
    pub net: NetId,
    pub name: String,
    pub width: u32,
}

impl Signal {
    pub fn new(nl: &Netlist, net: NetId) -> Self {
        Signal {
            net,
            name: nl.net_name(net).to_string(),
            width: nl.net(net).width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckKind {
    /// After a change, the signal holds for `cycles` samples.
    Stability { signal: Signal, cycles: u32 },
    /// High for at most one sample in a row.
    PulseWidth { signal: Signal },
    /// Consecutive samples differ in at most one bit.
    GrayCode { signal: Signal },
    /// Never changes.
    Static { signal: Signal },
    /// Data holds whenever the select is high.
    MuxEnable { select: Signal, data: Vec<Signal> },
    /// `(wr - rd) mod 2^width <= depth` on binary pointers.
    Fifo { wr: Signal, rd: Signal, depth: u64 },
    /// The gate enable does not change while `gated_clock` is high.
    ClockGate { gated_clock: String, period: u64, phase: u64, enable: Signal },
    /// A change of `from` shows up on `to` after `min..=max` samples.
    Latency { from: Signal, to: Signal, min: u32, max: u32 },
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Stability { .. } => "stability",
            CheckKind::PulseWidth { .. } => "pulse_width",
            CheckKind::GrayCode { .. } => "gray_code",
            CheckKind::Static { .. } => "static",
            CheckKind::MuxEnable { .. } => "mux_enable",
            CheckKind::Fifo { .. } => "fifo",
            CheckKind::ClockGate { .. } => "clock_gate",
            CheckKind::Latency { .. } => "latency",
        }
    }

    pub fn signals(&self) -> Vec<&Signal> {
        match self {
            CheckKind::Stability { signal, .. }
            | CheckKind::PulseWidth { signal }
            | CheckKind::GrayCode { signal }
            | CheckKind::Static { signal } => vec![signal],
            CheckKind::MuxEnable { select, data } => std::iter::once(select).chain(data).collect(),
            CheckKind::Fifo { wr, rd, .. } => vec![wr, rd],
            CheckKind::ClockGate { enable, .. } => vec![enable],
            CheckKind::Latency { from, to, .. } => vec![from, to],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResetRef {
    pub name: String,
    #[serde(skip)]
    pub net: NetId,
    pub active_low: bool,
}

impl ResetRef {
    pub fn asserted(&self, value: u64) -> bool {
        (value & 1 == 1) != self.active_low
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckerSpec {
    pub id: String,
    /// Generator class used for the matching SystemVerilog checker.
    pub class: String,
    /// Sync instance, pair or signal the check belongs to.
    pub subject: String,
    pub clock: String,
    pub reset: Option<ResetRef>,
    pub kind: CheckKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub tick: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub checker: String,
    pub kind: String,
    pub samples: u64,
    pub failure: Option<Failure>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn domain_clock<'a>(a: &'a Analysis, domain: &str) -> Option<&'a crate::frontend::ClockSpec> {
    a.constraints.clocks.iter().find(|c| c.domain == domain)
}

fn domain_reset(a: &Analysis, domain: &str) -> Option<ResetRef> {
    let r = a.constraints.resets.iter().find(|r| r.domain == domain)?;
    let net = a.netlist.find_net(&r.net)?;
    Some(ResetRef {
        name: r.net.clone(),
        net,
        active_low: r.active_low,
    })
}

/// `ceil(n * dst_period / src_period)`: source-clock samples covering `n`
/// destination cycles.
pub fn stability_samples(n: u32, src_period: u64, dst_period: u64) -> u32 {
    let num = u64::from(n) * dst_period;
    num.div_ceil(src_period).max(1) as u32
}

/// Checkers implied by the recognized synchronizers, static declarations
/// and clock gates of `a`.
pub fn instantiate_checkers(a: &Analysis) -> Vec<CheckerSpec> {
    let nl = &a.netlist;
    let mut out = Vec::new();
    let mut push = |id: String, class: &str, subject: &str, domain: &str, kind: CheckKind| {
        if let Some(clk) = domain_clock(a, domain) {
            out.push(CheckerSpec {
                id,
                class: class.to_string(),
                subject: subject.to_string(),
                clock: clk.name.clone(),
                reset: domain_reset(a, domain),
                kind,
            });
        }
    };
    let synced = |id: &str| matches!(a.status.get(id), Some(PairStatus::Synchronized { .. }));
    let stability = |pair: &crate::pairs::CdcPair| -> Option<CheckKind> {
        let s = domain_clock(a, &pair.src_domain)?;
        let d = domain_clock(a, &pair.dst_domain)?;
        Some(CheckKind::Stability {
            signal: Signal::new(nl, pair.src_net),
            cycles: stability_samples(a.constraints.options.stability_cycles, s.period, d.period),
        })
    };

    for s in &a.syncs {
        let class = match s.kind {
            SyncKind::Ndff { .. } | SyncKind::UserDefined { .. } => "ndff_sync_check",
            SyncKind::PulseToggle { .. } => "pulse_sync_check",
            SyncKind::MuxEnable { .. } => "mux_sync_check",
            SyncKind::AsyncFifo { .. } => "async_fifo_check",
        };
        match &s.kind {
            SyncKind::Ndff { .. } | SyncKind::UserDefined { .. } => {
                for pid in s.protected.iter().filter(|p| synced(p)) {
                    let p = a.pair(pid).expect("protected pair");
                    if let Some(k) = stability(p) {
                        push(format!("stability:{pid}"), class, &s.id, &p.src_domain, k);
                    }
                    if nl.net(p.src_net).width > 1 {
                        push(
                            format!("gray_code:{pid}"),
                            class,
                            &s.id,
                            &p.src_domain,
                            CheckKind::GrayCode {
                                signal: Signal::new(nl, p.src_net),
                            },
                        );
                    }
                }
            }
            SyncKind::PulseToggle { .. } => {
                if let Some(p) = s.signals.pulse {
                    push(
                        format!("pulse_width:{}", s.id),
                        class,
                        &s.id,
                        &s.src_domain,
                        CheckKind::PulseWidth {
                            signal: Signal::new(nl, p),
                        },
                    );
                }
            }
            SyncKind::MuxEnable { .. } => {
                if let Some(sel) = s.signals.select {
                    push(
                        format!("mux_enable:{}", s.id),
                        class,
                        &s.id,
                        &s.dst_domain,
                        CheckKind::MuxEnable {
                            select: Signal::new(nl, sel),
                            data: s.signals.data.iter().map(|d| Signal::new(nl, *d)).collect(),
                        },
                    );
                }
                if let Some(pid) = s.signals.select_pair.as_deref().filter(|p| synced(p)) {
                    let p = a.pair(pid).expect("select pair");
                    if let Some(k) = stability(p) {
                        push(format!("stability:{pid}"), class, &s.id, &p.src_domain, k);
                    }
                }
            }
            SyncKind::AsyncFifo {
                depth,
                write_domain,
                read_domain,
                ..
            } => {
                if let Some((w, r)) = s.signals.fifo_bins {
                    for dom in [write_domain, read_domain] {
                        let clk = domain_clock(a, dom).map(|c| c.name.clone()).unwrap_or_default();
                        push(
                            format!("fifo:{}@{clk}", s.id),
                            class,
                            &s.id,
                            dom,
                            CheckKind::Fifo {
                                wr: Signal::new(nl, w),
                                rd: Signal::new(nl, r),
                                depth: u64::from(*depth),
                            },
                        );
                    }
                }
                for pid in &s.signals.pointer_pairs {
                    let p = a.pair(pid).expect("pointer pair");
                    push(
                        format!("gray_code:{pid}"),
                        class,
                        &s.id,
                        &p.src_domain,
                        CheckKind::GrayCode {
                            signal: Signal::new(nl, p.src_net),
                        },
                    );
                }
            }
        }
    }

    for name in &a.constraints.static_signals {
        let Some(net) = nl.find_net(name) else { continue };
        let Some(dom) = a.domains.net(net).single().map(str::to_string) else {
            continue;
        };
        push(
            format!("static:{name}"),
            "signal_config_check",
            name,
            &dom,
            CheckKind::Static {
                signal: Signal::new(nl, net),
            },
        );
    }

    for (gate, root, enable, domains) in clock_gates(a) {
        let clk = a.constraints.clock(&root).expect("root clock").clone();
        for dom in domains {
            let sample = domain_clock(a, &dom).map(|c| c.name.clone()).unwrap_or_default();
            push(
                format!("clock_gate:{gate}@{sample}"),
                "clock_gate_check",
                &gate,
                &dom,
                CheckKind::ClockGate {
                    gated_clock: clk.name.clone(),
                    period: clk.period,
                    phase: clk.phase,
                    enable: Signal::new(nl, enable),
                },
            );
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Multi-input clock gates: (gate cell name, root clock, enable net,
/// domains driving the enable).
pub fn clock_gates(a: &Analysis) -> Vec<(String, String, NetId, BTreeSet<String>)> {
    let nl = &a.netlist;
    let mut cache = crate::netlist::cone::ConeCache::new();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for note in &a.domains.notes {
        let crate::domains::DomainNote::ClockGate { flop, gates } = note else { continue };
        let root = a.domains.flop_clock_root[flop].clone();
        let root_net = nl.port(&root).expect("clock port").net;
        for g in gates {
            let Some(gate) = nl.cell(*g).as_gate() else { continue };
            if gate.op.is_single_input() || !seen.insert(*g) {
                continue;
            }
            for i in &gate.inputs {
                let Ok(cone) = cache.cone(nl, *i) else { continue };
                let is_clock = *i == root_net
                    || cone
                        .sequential_sources
                        .iter()
                        .any(|s| matches!(s, ConeSource::Port(p) if nl.ports[*p].net == root_net));
                if is_clock {
                    continue;
                }
                let mut doms = BTreeSet::new();
                for s in cone.sequential_sources.iter() {
                    if let Some(d) =
                        crate::domains::source_domain(nl, &a.constraints, &a.domains.flop_domain, *s)
                    {
                        doms.insert(d);
                    }
                }
                if let Some(d) = a.domains.net(*i).single() {
                    doms.insert(d.to_string());
                }
                out.push((nl.cell_name(*g).to_string(), root.clone(), *i, doms));
            }
        }
    }
    out
}

pub fn latency_checkers(a: &Analysis, expects: &[LatencyExpect]) -> Result<Vec<CheckerSpec>, StimulusError> {
    let nl = &a.netlist;
    let mut out = Vec::new();
    for e in expects {
        let find = |n: &str| {
            nl.find_net(n).ok_or_else(|| StimulusError::UnknownNet {
                line: e.line,
                name: n.to_string(),
            })
        };
        let (from, to) = (find(&e.from)?, find(&e.to)?);
        let Some(dom) = a.domains.net(to).single() else {
            return Err(StimulusError::UnknownNet {
                line: e.line,
                name: e.to.clone(),
            });
        };
        let clk = domain_clock(a, dom).ok_or_else(|| StimulusError::UnknownClock {
            line: e.line,
            name: dom.to_string(),
        })?;
        out.push(CheckerSpec {
            id: format!("latency:{}->{}", e.from, e.to),
            class: "latency".to_string(),
            subject: e.to.clone(),
            clock: clk.name.clone(),
            reset: domain_reset(a, dom),
            kind: CheckKind::Latency {
                from: Signal::new(nl, from),
                to: Signal::new(nl, to),
                min: e.min,
                max: e.max,
            },
        });
    }
    Ok(out)
}

/// Pre-edge level of a clock with the given period and phase: rising at
/// `phase + k*period`, falling `period / 2` ticks later.
pub fn clock_level(period: u64, phase: u64, tick: u64) -> bool {
    if tick <= phase {
        return false;
    }
    let r = (tick - phase) % period;
    r > 0 && r <= period / 2
}

/// Online evaluation state of one checker.
#[derive(Debug, Clone)]
pub struct CheckerState {
    /// Most recent sample first; each sample holds the values of
    /// `kind.signals()` plus, for clock gates, the gated clock level.
    /// Checks that look back start once enough samples exist.
    history: Vec<Vec<u64>>,
    depth: usize,
    /// Open latency obligations: (sample index, expected value).
    pending: Vec<(u64, u64)>,
    pub samples: u64,
    pub failure: Option<Failure>,
}

impl CheckerState {
    pub fn new(spec: &CheckerSpec) -> Self {
        let depth = match &spec.kind {
            CheckKind::Stability { cycles, .. } => *cycles as usize + 1,
            _ => 2,
        };
        CheckerState {
            history: Vec::with_capacity(depth),
            depth,
            pending: Vec::new(),
            samples: 0,
            failure: None,
        }
    }

    fn fail(&mut self, tick: u64, message: String) {
        if self.failure.is_none() {
            self.failure = Some(Failure { tick, message });
        }
    }

    /// Takes one sample at `tick`; `value` reads a net's pre-edge value.
    pub fn sample(&mut self, spec: &CheckerSpec, tick: u64, value: impl Fn(NetId) -> u64) {
        let mut now: Vec<u64> = spec.kind.signals().iter().map(|s| value(s.net)).collect();
        if let CheckKind::ClockGate { period, phase, .. } = &spec.kind {
            now.push(u64::from(clock_level(*period, *phase, tick)));
        }
        self.history.insert(0, now);
        self.history.truncate(self.depth);
        let n = self.samples;
        self.samples += 1;
        if spec.reset.as_ref().is_some_and(|r| r.asserted(value(r.net))) {
            self.pending.clear();
            return;
        }
        let h = &self.history;
        let msg = match &spec.kind {
            CheckKind::Stability { signal, cycles } => {
                let k = *cycles as usize;
                let full = h.len() == self.depth;
                let changed_now = full && h[0] != h[1];
                let recent = full && (1..k).any(|i| h[i] != h[i + 1]);
                (changed_now && recent).then(|| {
                    format!(
                        "`{}` changed to {:#x} less than {k} samples after its previous change",
                        signal.name, h[0][0]
                    )
                })
            }
            CheckKind::PulseWidth { signal } => (h.len() >= 2 && h[0][0] != 0 && h[1][0] != 0)
                .then(|| format!("pulse `{}` high for more than one cycle", signal.name)),
            CheckKind::GrayCode { signal } => (h.len() >= 2 && (h[0][0] ^ h[1][0]).count_ones() > 1).then(|| {
                format!(
                    "`{}` moved {:#x} -> {:#x}, more than one bit",
                    signal.name, h[1][0], h[0][0]
                )
            }),
            CheckKind::Static { signal } => (h.len() >= 2 && h[0][0] != h[1][0]).then(|| {
                format!(
                    "static `{}` changed {:#x} -> {:#x}",
                    signal.name, h[1][0], h[0][0]
                )
            }),
            CheckKind::MuxEnable { select, data } => {
                if h.len() >= 2 && h[0][0] & 1 == 1 {
                    data.iter()
                        .enumerate()
                        .find(|(i, _)| h[0][i + 1] != h[1][i + 1])
                        .map(|(_, d)| format!("`{}` changed while select `{}` is high", d.name, select.name))
                } else {
                    None
                }
            }
            CheckKind::Fifo { wr, rd, depth } => {
                let m = crate::netlist::width_mask(wr.width);
                let occ = h[0][0].wrapping_sub(h[0][1]) & m;
                (occ > *depth).then(|| {
                    format!(
                        "occupancy {occ} exceeds depth {depth} (`{}`={:#x}, `{}`={:#x})",
                        wr.name, h[0][0], rd.name, h[0][1]
                    )
                })
            }
            CheckKind::ClockGate { gated_clock, enable, .. } => (h.len() >= 2 && h[1][1] == 1 && h[0][0] != h[1][0])
                .then(|| format!("gate enable `{}` changed while `{gated_clock}` was high", enable.name)),
            CheckKind::Latency { from, to, min, max } => {
                let (s, d) = (h[0][0], h[0][1]);
                let mut err = None;
                self.pending.retain(|&(k, v)| {
                    let j = n - k;
                    if d == v {
                        if j < u64::from(*min) && err.is_none() {
                            err = Some(format!(
                                "`{}` reflected `{}` after {j} samples, expected at least {min}",
                                to.name, from.name
                            ));
                        }
                        false
                    } else if j >= u64::from(*max) {
                        if err.is_none() {
                            err = Some(format!(
                                "`{}` did not reflect `{}` = {v:#x} within {max} samples",
                                to.name, from.name
                            ));
                        }
                        false
                    } else {
                        true
                    }
                });
                if h.len() >= 2 && s != h[1][0] {
                    self.pending.push((n, s));
                }
                err
            }
        };
        if let Some(m) = msg {
            self.fail(tick, m);
        }
    }

    pub fn verdict(&self, spec: &CheckerSpec) -> Verdict {
        Verdict {
            checker: spec.id.clone(),
            kind: spec.kind.name().to_string(),
            samples: self.samples,
            failure: self.failure.clone(),
        }
    }
}
