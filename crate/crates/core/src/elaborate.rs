// SPDX-License-Identifier: Apache-2.0

//! Flattens parsed modules into a [`Netlist`].

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::frontend::ast::{BinaryOp, Edge, Expr, ParsedModule, PortDir, UnaryOp};
use crate::netlist::{
    BlackboxRecord, CellId, Dff, Direction, GateOp, InstanceRecord, NetId, Netlist, NetlistBuilder,
    ResetPin, StructuralError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum ElabError {
    #[error("top module `{name}` not found")]
    UnknownTop { name: String },
    #[error("no unique top module (candidates: {candidates:?})")]
    AmbiguousTop { candidates: Vec<String> },
    #[error("instance `{instance}` of unknown module `{module}`")]
    UnresolvedModule { module: String, instance: String },
    #[error("recursive instantiation: {}", chain.join(" -> "))]
    RecursiveInstantiation { chain: Vec<String> },
    #[error("instance `{instance}` port `{port}`: expected {expected} bits, connected {found}")]
    PortWidthMismatch {
        instance: String,
        port: String,
        expected: u32,
        found: u32,
    },
    #[error("instance `{instance}`: {message}")]
    BadConnection { instance: String, message: String },
    #[error("net `{net}` has {count} drivers")]
    MultipleDrivers { net: String, count: usize },
    #[error("{context}: width mismatch: {message}")]
    WidthMismatch { context: String, message: String },
    #[error("combinational loop through `{cell}`")]
    CombinationalLoop { cell: String },
    #[error("{context}: {message}")]
    Unsupported { context: String, message: String },
    #[error("structural errors: {0:?}")]
    Structural(Vec<StructuralError>),
}

/// Picks the module that no other module instantiates.
pub fn find_top(modules: &[ParsedModule]) -> Result<String, ElabError> {
    let used: BTreeSet<&str> = modules
        .iter()
        .flat_map(|m| m.instances.iter().map(|i| i.module.as_str()))
        .collect();
    let candidates: Vec<String> = modules
        .iter()
        .filter(|m| !used.contains(m.name.as_str()) && !m.is_blackbox())
        .map(|m| m.name.clone())
        .collect();
    if candidates.len() == 1 {
        Ok(candidates[0].clone())
    } else {
        Err(ElabError::AmbiguousTop { candidates })
    }
}

pub fn elaborate(modules: &[ParsedModule], top: &str) -> Result<Netlist, ElabError> {
    let defs: HashMap<&str, &ParsedModule> = modules.iter().map(|m| (m.name.as_str(), m)).collect();
    let top_mod = *defs.get(top).ok_or_else(|| ElabError::UnknownTop { name: top.into() })?;
    let mut e = Elab {
        defs,
        b: NetlistBuilder::new(top),
        stack: vec![top.to_string()],
    };
    let mut bound = HashMap::new();
    for p in &top_mod.ports {
        if p.dir == PortDir::Input {
            bound.insert(p.name.clone(), e.b.add_input(p.name.clone(), p.width()));
        }
    }
    // output ports are registered after the body so their nets exist
    let scope_nets = e.module(top_mod, "", bound)?;
    for p in &top_mod.ports {
        if p.dir == PortDir::Output {
            e.b.add_output(p.name.clone(), scope_nets[&p.name]);
        }
    }
    match e.b.finish() {
        Ok(nl) => Ok(nl),
        Err(errs) => {
            for err in &errs {
                match err {
                    StructuralError::MultipleDrivers { net, count } => {
                        return Err(ElabError::MultipleDrivers {
                            net: net.clone(),
                            count: *count,
                        })
                    }
                    StructuralError::CombinationalLoop { cell } => {
                        return Err(ElabError::CombinationalLoop { cell: cell.clone() })
                    }
                    _ => {}
                }
            }
            Err(ElabError::Structural(errs))
        }
    }
}

struct Elab<'a> {
    defs: HashMap<&'a str, &'a ParsedModule>,
    b: NetlistBuilder,
    stack: Vec<String>,
}

struct Scope {
    prefix: String,
    nets: HashMap<String, NetId>,
    counter: usize,
    context: String,
}

impl Scope {
    fn name(&self, local: &str) -> String {
        if self.prefix.is_empty() {
            local.to_string()
        } else {
            format!("{}.{local}", self.prefix)
        }
    }
}

impl<'a> Elab<'a> {
    fn module(
        &mut self,
        m: &'a ParsedModule,
        prefix: &str,
        bound: HashMap<String, NetId>,
    ) -> Result<HashMap<String, NetId>, ElabError> {
        let mut sc = Scope {
            prefix: prefix.to_string(),
            nets: HashMap::new(),
            counter: 0,
            context: if prefix.is_empty() {
                m.name.clone()
            } else {
                format!("{prefix} ({})", m.name)
            },
        };
        for p in &m.ports {
            let net = match bound.get(&p.name) {
                Some(n) => {
                    let n = *n;
                    self.b.add_alias(n, sc.name(&p.name));
                    n
                }
                None => self.b.add_net(sc.name(&p.name), p.width()),
            };
            sc.nets.insert(p.name.clone(), net);
        }
        for d in &m.decls {
            let w = crate::frontend::ast::range_width(d.range);
            let n = self.b.add_net(sc.name(&d.name), w);
            sc.nets.insert(d.name.clone(), n);
        }

        for a in &m.assigns {
            let target = sc.nets[&a.target];
            let tw = self.b.net_width(target);
            self.expr_into(&mut sc, m, &a.expr, tw, Some(target), &a.target)?;
        }

        for blk in &m.seq_blocks {
            let clock = sc.nets[&blk.clock];
            if self.b.net_width(clock) != 1 {
                return Err(ElabError::WidthMismatch {
                    context: sc.context.clone(),
                    message: format!("clock `{}` must be 1 bit", blk.clock),
                });
            }
            let reset = match &blk.reset {
                Some(r) => {
                    let net = sc.nets[&r.signal];
                    if self.b.net_width(net) != 1 {
                        return Err(ElabError::WidthMismatch {
                            context: sc.context.clone(),
                            message: format!("reset `{}` must be 1 bit", r.signal),
                        });
                    }
                    Some(ResetPin {
                        net,
                        active_low: r.edge == Edge::Neg,
                    })
                }
                None => None,
            };
            let enable = match &blk.enable {
                Some(en) => Some(self.expr_into(&mut sc, m, en, 1, None, "enable")?),
                None => None,
            };
            for asg in &blk.assigns {
                let q = sc.nets[&asg.target];
                let w = self.b.net_width(q);
                let data = self.expr_into(&mut sc, m, &asg.expr, w, None, &asg.target)?;
                let reset_value = match blk.reset_assigns.iter().find(|r| r.target == asg.target) {
                    Some(r) => match &r.expr {
                        Expr::Literal { width, value } => {
                            if width.is_some_and(|lw| lw != w) || *value & !crate::netlist::width_mask(w) != 0 {
                                return Err(ElabError::WidthMismatch {
                                    context: sc.context.clone(),
                                    message: format!("reset value of `{}`", asg.target),
                                });
                            }
                            *value
                        }
                        _ => {
                            return Err(ElabError::Unsupported {
                                context: sc.context.clone(),
                                message: format!("non-constant reset value for `{}`", asg.target),
                            })
                        }
                    },
                    None => 0,
                };
                self.b.add_dff(
                    sc.name(&asg.target),
                    Dff {
                        clock,
                        reset,
                        enable,
                        data,
                        q,
                        reset_value,
                    },
                );
            }
            for r in &blk.reset_assigns {
                if !blk.assigns.iter().any(|a| a.target == r.target) {
                    return Err(ElabError::Unsupported {
                        context: sc.context.clone(),
                        message: format!("`{}` is assigned only in the reset arm", r.target),
                    });
                }
            }
        }

        for inst in &m.instances {
            self.instance(&mut sc, m, inst)?;
        }
        Ok(sc.nets)
    }

    fn instance(
        &mut self,
        sc: &mut Scope,
        m: &'a ParsedModule,
        inst: &'a crate::frontend::ast::Instance,
    ) -> Result<(), ElabError> {
        let path = sc.name(&inst.name);
        let child = *self
            .defs
            .get(inst.module.as_str())
            .ok_or_else(|| ElabError::UnresolvedModule {
                module: inst.module.clone(),
                instance: path.clone(),
            })?;
        if self.stack.contains(&child.name) {
            let mut chain = self.stack.clone();
            chain.push(child.name.clone());
            return Err(ElabError::RecursiveInstantiation { chain });
        }
        for (p, _) in &inst.connections {
            if child.port(p).is_none() {
                return Err(ElabError::BadConnection {
                    instance: path.clone(),
                    message: format!("module `{}` has no port `{p}`", child.name),
                });
            }
        }
        let mut bound = HashMap::new();
        for p in &child.ports {
            let conn = inst
                .connections
                .iter()
                .find(|(n, _)| *n == p.name)
                .and_then(|(_, e)| e.as_ref());
            let w = p.width();
            match (p.dir, conn) {
                (PortDir::Input, None) => {
                    return Err(ElabError::BadConnection {
                        instance: path.clone(),
                        message: format!("input port `{}` is unconnected", p.name),
                    })
                }
                (PortDir::Input, Some(e)) => {
                    if let Expr::Ident(n) = e {
                        let net = sc.nets[n];
                        let found = self.b.net_width(net);
                        if found != w {
                            return Err(ElabError::PortWidthMismatch {
                                instance: path.clone(),
                                port: p.name.clone(),
                                expected: w,
                                found,
                            });
                        }
                    }
                    let net = self
                        .expr_into(sc, m, e, w, None, &format!("{}.{}", inst.name, p.name))
                        .map_err(|err| match err {
                            ElabError::WidthMismatch { .. } => ElabError::PortWidthMismatch {
                                instance: path.clone(),
                                port: p.name.clone(),
                                expected: w,
                                found: self.width_hint(sc, m, e),
                            },
                            other => other,
                        })?;
                    bound.insert(p.name.clone(), net);
                }
                (PortDir::Output, None) => {}
                (PortDir::Output, Some(Expr::Ident(n))) => {
                    let net = sc.nets[n];
                    let found = self.b.net_width(net);
                    if found != w {
                        return Err(ElabError::PortWidthMismatch {
                            instance: path.clone(),
                            port: p.name.clone(),
                            expected: w,
                            found,
                        });
                    }
                    bound.insert(p.name.clone(), net);
                }
                (PortDir::Output, Some(_)) => {
                    return Err(ElabError::BadConnection {
                        instance: path.clone(),
                        message: format!("output port `{}` must connect to a plain identifier", p.name),
                    })
                }
            }
        }
        if child.is_blackbox() {
            let mut outputs = Vec::new();
            let mut inputs = Vec::new();
            for p in &child.ports {
                match p.dir {
                    PortDir::Input => inputs.push((p.name.clone(), bound[&p.name])),
                    PortDir::Output => {
                        let net = match bound.get(&p.name) {
                            Some(n) => {
                                self.b.add_alias(*n, format!("{path}.{}", p.name));
                                *n
                            }
                            None => self.b.add_net(format!("{path}.{}", p.name), p.width()),
                        };
                        outputs.push((p.name.clone(), net));
                    }
                }
            }
            self.b.add_blackbox(BlackboxRecord {
                path,
                module: child.name.clone(),
                outputs,
                inputs,
            });
            return Ok(());
        }
        let first_cell = self.b.cell_count();
        self.stack.push(child.name.clone());
        let child_nets = self.module(child, &path, bound)?;
        self.stack.pop();
        let cells: Vec<CellId> = (first_cell..self.b.cell_count()).map(|i| CellId(i as u32)).collect();
        let ports = child
            .ports
            .iter()
            .map(|p| {
                let d = match p.dir {
                    PortDir::Input => Direction::In,
                    PortDir::Output => Direction::Out,
                };
                (p.name.clone(), d, child_nets[&p.name])
            })
            .collect();
        self.b.add_instance(InstanceRecord {
            path,
            module: child.name.clone(),
            cells,
            ports,
        });
        Ok(())
    }

    fn fresh(&mut self, sc: &mut Scope, op: &str, width: u32) -> (String, NetId) {
        let name = sc.name(&format!("{op}${}", sc.counter));
        sc.counter += 1;
        let net = self.b.add_net(name.clone(), width);
        (name, net)
    }

    /// Best-effort width of an expression for error messages.
    fn width_hint(&self, sc: &Scope, m: &ParsedModule, e: &Expr) -> u32 {
        self.width_of(sc, m, e, None).unwrap_or(0)
    }

    /// Self-determined width; unsized literals take `ctx`.
    fn width_of(&self, sc: &Scope, m: &ParsedModule, e: &Expr, ctx: Option<u32>) -> Result<u32, ElabError> {
        let mismatch = |msg: String| ElabError::WidthMismatch {
            context: sc.context.clone(),
            message: msg,
        };
        Ok(match e {
            Expr::Ident(n) => self.b.net_width(sc.nets[n]),
            Expr::Slice { name, msb, lsb } => {
                let w = self.b.net_width(sc.nets[name]);
                if *msb >= w {
                    return Err(mismatch(format!("`{name}[{msb}]` is out of range for {w} bits")));
                }
                msb - lsb + 1
            }
            Expr::Literal { width: Some(w), .. } => *w,
            Expr::Literal { width: None, value } => match ctx {
                Some(w) => {
                    if *value & !crate::netlist::width_mask(w) != 0 {
                        return Err(mismatch(format!("literal {value} does not fit in {w} bits")));
                    }
                    w
                }
                None => return Err(mismatch("unsized literal without a width context".into())),
            },
            Expr::Unary(UnaryOp::BitNot, a) => self.width_of(sc, m, a, ctx)?,
            Expr::Unary(UnaryOp::LogicNot, a) => {
                let w = self.width_of(sc, m, a, Some(1))?;
                if w != 1 {
                    return Err(ElabError::Unsupported {
                        context: sc.context.clone(),
                        message: "logical negation of a vector".into(),
                    });
                }
                1
            }
            Expr::Binary(_, a, b) | Expr::Ternary(_, a, b) => {
                let wa = self.width_of(sc, m, a, None).ok();
                let wb = self.width_of(sc, m, b, None).ok();
                let w = match (wa, wb) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(mismatch(format!("operands of {x} and {y} bits")))
                    }
                    (Some(x), _) | (_, Some(x)) => x,
                    (None, None) => ctx.ok_or_else(|| mismatch("operand widths undetermined".into()))?,
                };
                self.width_of(sc, m, a, Some(w))?;
                self.width_of(sc, m, b, Some(w))?;
                if let Expr::Ternary(c, _, _) = e {
                    if self.width_of(sc, m, c, Some(1))? != 1 {
                        return Err(mismatch("condition must be 1 bit".into()));
                    }
                }
                w
            }
            Expr::Concat(v) => {
                let mut total = 0;
                for x in v {
                    if matches!(x, Expr::Literal { width: None, .. }) {
                        return Err(mismatch("unsized literal in concatenation".into()));
                    }
                    total += self.width_of(sc, m, x, None)?;
                }
                if total > 64 {
                    return Err(ElabError::Unsupported {
                        context: sc.context.clone(),
                        message: "vectors wider than 64 bits".into(),
                    });
                }
                total
            }
        })
    }

    /// Elaborates `e` at width `w`. With `target` set, the top-level operator
    /// drives that net; otherwise the result net is returned (an identifier
    /// returns its own net without a buffer).
    fn expr_into(
        &mut self,
        sc: &mut Scope,
        m: &ParsedModule,
        e: &Expr,
        w: u32,
        target: Option<NetId>,
        what: &str,
    ) -> Result<NetId, ElabError> {
        let actual = self.width_of(sc, m, e, Some(w))?;
        if actual != w {
            return Err(ElabError::WidthMismatch {
                context: sc.context.clone(),
                message: format!("`{what}` is {w} bits, expression is {actual}"),
            });
        }
        self.build(sc, m, e, w, target)
    }

    fn build(
        &mut self,
        sc: &mut Scope,
        m: &ParsedModule,
        e: &Expr,
        w: u32,
        target: Option<NetId>,
    ) -> Result<NetId, ElabError> {
        let out = |this: &mut Self, sc: &mut Scope, op: &str| -> (String, NetId) {
            match target {
                Some(t) => {
                    let name = sc.name(&format!("{op}${}", sc.counter));
                    sc.counter += 1;
                    (name, t)
                }
                None => this.fresh(sc, op, w),
            }
        };
        match e {
            Expr::Ident(n) => {
                let src = sc.nets[n];
                match target {
                    None => Ok(src),
                    Some(t) => {
                        let (name, _) = out(self, sc, "buf");
                        self.b.add_gate(name, GateOp::Buf, vec![src], t);
                        Ok(t)
                    }
                }
            }
            Expr::Slice { name, msb, lsb } => {
                let src = sc.nets[name];
                let (cname, o) = out(self, sc, "slice");
                self.b.add_gate(cname, GateOp::Slice { msb: *msb, lsb: *lsb }, vec![src], o);
                Ok(o)
            }
            Expr::Literal { value, .. } => {
                let (cname, o) = out(self, sc, "const");
                self.b.add_const(cname, *value, o);
                Ok(o)
            }
            Expr::Unary(op, a) => {
                let ia = self.build(sc, m, a, w, None)?;
                let (cname, o) = out(self, sc, "not");
                let _ = op;
                self.b.add_gate(cname, GateOp::Not, vec![ia], o);
                Ok(o)
            }
            Expr::Binary(op, a, b) => {
                let ia = self.build(sc, m, a, w, None)?;
                let ib = self.build(sc, m, b, w, None)?;
                let gop = match op {
                    BinaryOp::And => GateOp::And,
                    BinaryOp::Or => GateOp::Or,
                    BinaryOp::Xor => GateOp::Xor,
                };
                let (cname, o) = out(self, sc, gop.name());
                self.b.add_gate(cname, gop, vec![ia, ib], o);
                Ok(o)
            }
            Expr::Ternary(c, a, b) => {
                let ic = self.build(sc, m, c, 1, None)?;
                let ia = self.build(sc, m, a, w, None)?;
                let ib = self.build(sc, m, b, w, None)?;
                let (cname, o) = out(self, sc, "mux");
                self.b.add_gate(cname, GateOp::Mux, vec![ic, ia, ib], o);
                Ok(o)
            }
            Expr::Concat(v) => {
                let mut ins = Vec::new();
                for x in v {
                    let xw = self.width_of(sc, m, x, None)?;
                    ins.push(self.build(sc, m, x, xw, None)?);
                }
                let (cname, o) = out(self, sc, "concat");
                self.b.add_gate(cname, GateOp::Concat, ins, o);
                Ok(o)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_verilog;

    const SYNC: &str = "module s(input clk, input rst_n, input d, output q);
        reg ff1, ff2;
        always @(posedge clk or negedge rst_n)
          if (!rst_n) begin ff1 <= 1'b0; ff2 <= 1'b0; end
          else begin ff1 <= d; ff2 <= ff1; end
        assign q = ff2;
        endmodule\n";

    fn build(src: &str, top: &str) -> Result<Netlist, ElabError> {
        elaborate(&parse_verilog(src, "t.v").unwrap(), top)
    }

    #[test]
    fn single_flop() {
        let nl = build(
            "module m(input clk, input d, output reg q); always @(posedge clk) q <= d; endmodule",
            "m",
        )
        .unwrap();
        assert_eq!(nl.cells.len(), 1);
        for n in ["clk", "d", "q"] {
            assert!(nl.find_net(n).is_some(), "{n}");
        }
    }

    #[test]
    fn two_instances_of_a_sync() {
        let src = format!(
            "{SYNC}module a(input clk, input rst_n, input x, input y, output p, output r);
             s s0(.clk(clk), .rst_n(rst_n), .d(x), .q(p));
             s s1(.clk(clk), .rst_n(rst_n), .d(y), .q(r));
             endmodule"
        );
        let nl = build(&src, "a").unwrap();
        let dffs: Vec<&str> = nl.dffs().map(|(c, _)| nl.cell_name(c)).collect();
        assert_eq!(dffs, ["s0.ff1", "s0.ff2", "s1.ff1", "s1.ff2"]);
        // port connections merge nets; the parent name stays canonical
        assert_eq!(nl.find_net("s0.d"), nl.find_net("x"));
        assert_eq!(nl.net_name(nl.find_net("s1.q").unwrap()), "r");
        assert_eq!(nl.instances.len(), 2);
        assert_eq!(find_top(&parse_verilog(&src, "t.v").unwrap()).unwrap(), "a");
    }

    #[test]
    fn unresolved_and_recursive() {
        let e = build("module a(input x); b u(.x(x)); endmodule", "a").unwrap_err();
        assert!(matches!(e, ElabError::UnresolvedModule { .. }));
        let e = build(
            "module a(input x); b u(.x(x)); endmodule module b(input x); a v(.x(x)); endmodule",
            "a",
        )
        .unwrap_err();
        assert!(matches!(e, ElabError::RecursiveInstantiation { .. }));
    }

    #[test]
    fn port_width_mismatch() {
        let src = format!(
            "{SYNC}module a(input clk, input rst_n, input [1:0] x, output p);
             s s0(.clk(clk), .rst_n(rst_n), .d(x), .q(p)); endmodule"
        );
        assert!(matches!(
            build(&src, "a").unwrap_err(),
            ElabError::PortWidthMismatch { expected: 1, found: 2, .. }
        ));
    }

    #[test]
    fn multiple_drivers() {
        let e = build(
            "module a(input x, input y, output z); assign z = x; assign z = y; endmodule",
            "a",
        )
        .unwrap_err();
        assert!(matches!(e, ElabError::MultipleDrivers { .. }));
    }

    #[test]
    fn combinational_loop() {
        let e = build(
            "module a(input x, output z); wire w; assign w = z ^ x; assign z = ~w; endmodule",
            "a",
        )
        .unwrap_err();
        assert!(matches!(e, ElabError::CombinationalLoop { .. }));
    }

    #[test]
    fn expressions_become_gates() {
        let nl = build(
            "module a(input [2:0] b, input s, output [2:0] g, output [2:0] m);
             assign g = b ^ {1'b0, b[2:1]};
             assign m = s ? b : 3'd5;
             endmodule",
            "a",
        )
        .unwrap();
        let ops: Vec<&str> = nl
            .cells
            .iter()
            .filter_map(|c| c.as_gate().map(|g| g.op.name()))
            .collect();
        assert_eq!(ops, ["slice", "concat", "xor", "mux"]);
        assert_eq!(nl.cells.iter().filter(|c| c.as_gate().is_none()).count(), 2);
    }

    #[test]
    fn blackbox_outputs_are_driven_by_the_box() {
        let nl = build(
            "module bb(input i, output o); endmodule
             module a(input clk, input x, output reg q); wire w; bb u(.i(x), .o(w));
             always @(posedge clk) q <= w; endmodule",
            "a",
        )
        .unwrap();
        assert_eq!(nl.blackboxes.len(), 1);
        let w = nl.find_net("w").unwrap();
        assert!(matches!(nl.net(w).driver(), Some(crate::netlist::Driver::Blackbox { .. })));
    }
}
