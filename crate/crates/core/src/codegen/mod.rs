// SPDX-License-Identifier: Apache-2.0

//! SystemVerilog checker, coverage and bind generation.
//!
//! Checkers use a fixed template vocabulary: `property`/`endproperty`,
//! `assert property`, `$stable`, `$rose`, `$past` and `disable iff`. The
//! [`interp`] module evaluates exactly that vocabulary over simulation
//! traces and [`lint`] checks the generated text.

pub mod interp;
pub mod lint;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::Analysis;
use crate::msi::checkers::{instantiate_checkers, CheckKind, CheckerSpec, Signal};
use crate::netlist::width_mask;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn header() -> String {
    format!("// -- generated-by cdcv {VERSION}\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneratedFile {
    /// Path relative to the output directory.
    pub path: String,
    pub class: String,
    pub content: String,
    /// Sync ids, pair ids or constraint lines the file was built from.
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum CodegenError {
    #[error("two generated modules are named `{name}`")]
    NameCollision { name: String },
    #[error("signal `{name}` is not in the netlist")]
    UnresolvedSignal { name: String },
}

/// SystemVerilog-safe identifier for a net or checker id.
pub fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert_str(0, "n_");
    }
    s
}

/// Property name of a checker id.
pub fn property_name(checker_id: &str) -> String {
    sanitize(&checker_id.to_ascii_lowercase())
}

/// A checker module: its ports (name, width, connected netlist name) and
/// properties.
struct ModuleText {
    name: String,
    ports: BTreeMap<String, (u32, String)>,
    body: String,
}

impl ModuleText {
    fn new(name: String) -> Self {
        ModuleText {
            name,
            ports: BTreeMap::new(),
            body: String::new(),
        }
    }

    fn port(&mut self, net_name: &str, width: u32) -> Result<String, CodegenError> {
        let p = sanitize(net_name);
        match self.ports.get(&p) {
            Some((_, existing)) if existing != net_name => Err(CodegenError::NameCollision { name: p }),
            _ => {
                self.ports.insert(p.clone(), (width, net_name.to_string()));
                Ok(p)
            }
        }
    }

    fn signal(&mut self, s: &Signal) -> Result<String, CodegenError> {
        self.port(&s.name, s.width)
    }

    fn render(&self, comment: &str) -> String {
        let mut out = header();
        for line in comment.lines() {
            let _ = writeln!(out, "// {line}");
        }
        let _ = writeln!(out, "module {} (", self.name);
        let n = self.ports.len();
        for (i, (p, (w, _))) in self.ports.iter().enumerate() {
            let range = if *w > 1 { format!("[{}:0] ", w - 1) } else { String::new() };
            let sep = if i + 1 == n { "" } else { "," };
            let _ = writeln!(out, "  input logic {range}{p}{sep}");
        }
        out.push_str(");\n");
        out.push_str(&self.body);
        out.push_str("endmodule\n");
        out
    }
}

/// Appends the property and assertion for one checker.
fn emit_checker(m: &mut ModuleText, c: &CheckerSpec) -> Result<(), CodegenError> {
    let clk = m.port(&c.clock, 1)?;
    let disable = match &c.reset {
        Some(r) => {
            let p = m.port(&r.name, 1)?;
            format!(" disable iff ({}{p})", if r.active_low { "!" } else { "" })
        }
        None => String::new(),
    };
    let expr = match &c.kind {
        CheckKind::Stability { signal, cycles } => {
            if *cycles < 2 {
                return Ok(());
            }
            let s = m.signal(signal)?;
            let terms: Vec<String> = (1..*cycles)
                .map(|i| format!("($past({s}, {i}) != $past({s}, {}))", i + 1))
                .collect();
            format!("({}) |-> $stable({s})", terms.join(" || "))
        }
        CheckKind::PulseWidth { signal } => {
            let s = m.signal(signal)?;
            format!("$past({s}) |-> !{s}")
        }
        CheckKind::GrayCode { signal } => {
            let s = m.signal(signal)?;
            format!("((({s} ^ $past({s})) & (({s} ^ $past({s})) - 1)) == 0)")
        }
        CheckKind::Static { signal } => {
            let s = m.signal(signal)?;
            format!("$stable({s})")
        }
        CheckKind::MuxEnable { select, data } => {
            let sel = m.signal(select)?;
            let mut terms = Vec::new();
            for d in data {
                terms.push(format!("$stable({})", m.signal(d)?));
            }
            format!("{sel} |-> ({})", terms.join(" && "))
        }
        CheckKind::Fifo { wr, rd, depth } => {
            let w = m.signal(wr)?;
            let r = m.signal(rd)?;
            format!("((({w} - {r}) & {}) <= {depth})", width_mask(wr.width))
        }
        CheckKind::ClockGate { gated_clock, enable, .. } => {
            let g = m.port(gated_clock, 1)?;
            let e = m.signal(enable)?;
            format!("$past({g}) |-> $stable({e})")
        }
        CheckKind::Latency { .. } => return Ok(()),
    };
    let pname = property_name(&c.id);
    let _ = writeln!(m.body, "  // {}", c.id);
    let _ = writeln!(m.body, "  property {pname};");
    let _ = writeln!(m.body, "    @(posedge {clk}){disable}");
    let _ = writeln!(m.body, "      {expr};");
    let _ = writeln!(m.body, "  endproperty");
    let _ = writeln!(m.body, "  assert property ({pname});");
    Ok(())
}

fn class_prefix(class: &str) -> &str {
    class.strip_suffix("_check").unwrap_or(class)
}

struct Planned {
    file: GeneratedFile,
    module: String,
    connections: BTreeMap<String, String>,
}

fn plan_checks(a: &Analysis) -> Result<Vec<Planned>, CodegenError> {
    let checkers = instantiate_checkers(a);
    let mut out = Vec::new();

    let mut by_sync: BTreeMap<&str, Vec<&CheckerSpec>> = BTreeMap::new();
    for c in &checkers {
        by_sync.entry(c.subject.as_str()).or_default().push(c);
    }
    for s in &a.syncs {
        let class = match s.kind {
            crate::sync::SyncKind::Ndff { .. } | crate::sync::SyncKind::UserDefined { .. } => "ndff_sync_check",
            crate::sync::SyncKind::PulseToggle { .. } => "pulse_sync_check",
            crate::sync::SyncKind::MuxEnable { .. } => "mux_sync_check",
            crate::sync::SyncKind::AsyncFifo { .. } => "async_fifo_check",
        };
        let inst = s.id.to_ascii_lowercase();
        let mut m = ModuleText::new(format!("{}_{inst}_checker", class_prefix(class)));
        for c in by_sync.get(s.id.as_str()).into_iter().flatten() {
            emit_checker(&mut m, c)?;
        }
        let mut comment = format!(
            "{class} for {}: {} {} -> {}\nmembers: {}",
            s.id,
            s.kind.name(),
            s.src_domain,
            s.dst_domain,
            s.member_names.join(" ")
        );
        if let crate::sync::SyncKind::Ndff { depth } = s.kind {
            let _ = write!(comment, "\ndepth: {depth}");
        }
        let mut sources = vec![s.id.clone()];
        sources.extend(s.protected.iter().cloned());
        out.push(Planned {
            connections: m.ports.iter().map(|(p, (_, n))| (p.clone(), n.clone())).collect(),
            module: m.name.clone(),
            file: GeneratedFile {
                path: format!("checks/{class}/{inst}.sv"),
                class: class.to_string(),
                content: m.render(&comment),
                sources,
            },
        });
    }

    let statics: Vec<&CheckerSpec> = checkers.iter().filter(|c| c.class == "signal_config_check").collect();
    if !statics.is_empty() || !a.constraints.false_paths.is_empty() {
        let mut m = ModuleText::new("signal_config_checker".to_string());
        let mut sources = Vec::new();
        for c in &statics {
            emit_checker(&mut m, c)?;
            sources.push(format!("static {}", c.subject));
        }
        let mut comment = String::from("signal_config_check: declared static signals");
        for f in &a.constraints.false_paths {
            let _ = write!(comment, "\nfalse_path {} -> {} (exempt, not checked)", f.from, f.to);
            sources.push(format!("false_path {} {}", f.from, f.to));
        }
        for s in &a.constraints.static_signals {
            if !statics.iter().any(|c| &c.subject == s) {
                let _ = write!(comment, "\nstatic {s}: no sampling clock, not checked");
            }
        }
        out.push(Planned {
            connections: m.ports.iter().map(|(p, (_, n))| (p.clone(), n.clone())).collect(),
            module: m.name.clone(),
            file: GeneratedFile {
                path: "checks/signal_config_check/signal_config.sv".into(),
                class: "signal_config_check".into(),
                content: m.render(&comment),
                sources,
            },
        });
    }

    let mut gates: BTreeMap<&str, Vec<&CheckerSpec>> = BTreeMap::new();
    for c in checkers.iter().filter(|c| c.class == "clock_gate_check") {
        gates.entry(c.subject.as_str()).or_default().push(c);
    }
    for (gate, cs) in gates {
        let inst = sanitize(&gate.to_ascii_lowercase());
        let mut m = ModuleText::new(format!("clock_gate_{inst}_checker"));
        for c in &cs {
            emit_checker(&mut m, c)?;
        }
        out.push(Planned {
            connections: m.ports.iter().map(|(p, (_, n))| (p.clone(), n.clone())).collect(),
            module: m.name.clone(),
            file: GeneratedFile {
                path: format!("checks/clock_gate_check/{inst}.sv"),
                class: "clock_gate_check".into(),
                content: m.render(&format!("clock_gate_check for gate {gate}")),
                sources: vec![gate.to_string()],
            },
        });
    }
    Ok(out)
}

/// Covergroups for every unsuppressed pair, fed by per-pair injection hooks.
fn plan_coverage(a: &Analysis) -> Option<Planned> {
    let pairs: Vec<&crate::pairs::CdcPair> = a.unsuppressed().collect();
    if pairs.is_empty() {
        return None;
    }
    let mut out = header();
    out.push_str("// coverage: four injection bins per crossing\n");
    out.push_str("// Hook encoding: {valid, kind (0 setup, 1 hold), resolved value}.\n");
    out.push_str("module cdc_msi_hooks;\n");
    for p in &pairs {
        let _ = writeln!(out, "  logic [2:0] evt_{} = 3'b000; // {} -> {}", p.id.to_ascii_lowercase(), p.src_name, p.dst_name);
    }
    out.push_str("endmodule\n\n");
    let clocks: BTreeSet<String> = pairs
        .iter()
        .filter_map(|p| a.constraints.clocks.iter().find(|c| c.domain == p.dst_domain))
        .map(|c| c.name.clone())
        .collect();
    let mut connections = BTreeMap::new();
    let mut ports = Vec::new();
    for c in &clocks {
        ports.push(format!("input logic {}", sanitize(c)));
        connections.insert(sanitize(c), c.clone());
    }
    for p in &pairs {
        let id = p.id.to_ascii_lowercase();
        ports.push(format!("input logic [2:0] evt_{id}"));
        connections.insert(format!("evt_{id}"), format!("u_cdc_msi_hooks.evt_{id}"));
    }
    let _ = writeln!(out, "module cdc_cov (\n  {}\n);", ports.join(",\n  "));
    for p in &pairs {
        let id = p.id.to_ascii_lowercase();
        let Some(clk) = a.constraints.clocks.iter().find(|c| c.domain == p.dst_domain) else {
            continue;
        };
        let _ = writeln!(out, "  covergroup cg_{id} @(posedge {});", sanitize(&clk.name));
        let _ = writeln!(out, "    coverpoint evt_{id} {{");
        for (bin, code) in [("setup_to_0", "3'b100"), ("setup_to_1", "3'b101"), ("hold_to_0", "3'b110"), ("hold_to_1", "3'b111")] {
            let _ = writeln!(out, "      bins {bin} = {{{code}}};");
        }
        out.push_str("    }\n  endgroup\n");
        let _ = writeln!(out, "  cg_{id} cg_{id}_i = new();");
    }
    out.push_str("endmodule\n");
    Some(Planned {
        file: GeneratedFile {
            path: "coverage/cdc_cov.sv".into(),
            class: "coverage".into(),
            content: out,
            sources: pairs.iter().map(|p| p.id.clone()).collect(),
        },
        module: "cdc_cov".into(),
        connections,
    })
}

/// Checker files for every synchronizer, static declaration and clock gate.
pub fn generate_checks(a: &Analysis) -> Result<Vec<GeneratedFile>, CodegenError> {
    Ok(plan_checks(a)?.into_iter().map(|p| p.file).collect())
}

pub fn generate_coverage_model(a: &Analysis) -> Option<GeneratedFile> {
    plan_coverage(a).map(|p| p.file)
}

/// Every output file, including `bind_all.sv`, sorted by path.
pub fn generate_all(a: &Analysis) -> Result<Vec<GeneratedFile>, CodegenError> {
    let mut planned = plan_checks(a)?;
    let cov = plan_coverage(a);
    let mut names = BTreeSet::new();
    for p in planned.iter().chain(cov.iter()) {
        if !names.insert(p.module.clone()) {
            return Err(CodegenError::NameCollision { name: p.module.clone() });
        }
        for net in p.connections.values() {
            if !net.starts_with("u_cdc_msi_hooks.") && a.netlist.find_net(net).is_none() {
                return Err(CodegenError::UnresolvedSignal { name: net.clone() });
            }
        }
    }
    if planned.is_empty() && cov.is_none() {
        return Ok(vec![]);
    }
    let top = &a.netlist.name;
    let mut bind = header();
    if cov.is_some() {
        let _ = writeln!(bind, "bind {top} cdc_msi_hooks u_cdc_msi_hooks ();");
    }
    let mut sources = Vec::new();
    for p in planned.iter().chain(cov.iter()) {
        let conns: Vec<String> = p.connections.iter().map(|(port, net)| format!("    .{port}({net})")).collect();
        let _ = writeln!(bind, "bind {top} {} u_{} (\n{}\n);", p.module, p.module, conns.join(",\n"));
        sources.push(p.module.clone());
    }
    let mut files: Vec<GeneratedFile> = planned.drain(..).map(|p| p.file).collect();
    files.extend(cov.map(|p| p.file));
    files.push(GeneratedFile {
        path: "bind_all.sv".into(),
        class: "bind".into(),
        content: bind,
        sources,
    });
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(files)
}
