// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::ast::*;

fn range(r: Option<(u32, u32)>) -> String {
    match r {
        Some((m, l)) => format!("[{m}:{l}] "),
        None => String::new(),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Ident(n) => n.clone(),
        Expr::Slice { name, msb, lsb } if msb == lsb => format!("{name}[{msb}]"),
        Expr::Slice { name, msb, lsb } => format!("{name}[{msb}:{lsb}]"),
        Expr::Literal { width: Some(w), value } => format!("{w}'h{value:x}"),
        Expr::Literal { width: None, value } => format!("{value}"),
        Expr::Unary(UnaryOp::BitNot, a) => format!("~{}", print_atom(a)),
        Expr::Unary(UnaryOp::LogicNot, a) => format!("!{}", print_atom(a)),
        Expr::Binary(op, a, b) => format!("({} {} {})", print_expr(a), op.symbol(), print_expr(b)),
        Expr::Ternary(c, a, b) => {
            format!("({} ? {} : {})", print_expr(c), print_expr(a), print_expr(b))
        }
        Expr::Concat(v) => {
            let parts: Vec<String> = v.iter().map(print_expr).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

fn print_atom(e: &Expr) -> String {
    match e {
        Expr::Ident(_) | Expr::Slice { .. } | Expr::Literal { .. } | Expr::Concat(_) => print_expr(e),
        Expr::Binary(..) | Expr::Ternary(..) => print_expr(e),
        Expr::Unary(..) => format!("({})", print_expr(e)),
    }
}

/// Renders a module back to subset text. Reparsing the result yields an
/// equal `ParsedModule`.
pub fn print_module(m: &ParsedModule) -> String {
    let mut s = String::new();
    let ports: Vec<String> = m
        .ports
        .iter()
        .map(|p| {
            let dir = match p.dir {
                PortDir::Input => "input",
                PortDir::Output => "output",
            };
            let reg = if p.is_reg { "reg " } else { "" };
            format!("  {dir} {reg}{}{}", range(p.range), p.name)
        })
        .collect();
    if ports.is_empty() {
        let _ = writeln!(s, "module {}();", m.name);
    } else {
        let _ = writeln!(s, "module {}(\n{}\n);", m.name, ports.join(",\n"));
    }
    for d in &m.decls {
        let kind = match d.kind {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
        };
        let _ = writeln!(s, "  {kind} {}{};", range(d.range), d.name);
    }
    for a in &m.assigns {
        let _ = writeln!(s, "  assign {} = {};", a.target, print_expr(&a.expr));
    }
    for b in &m.seq_blocks {
        let sens = match &b.reset {
            None => format!("posedge {}", b.clock),
            Some(r) => {
                let e = match r.edge {
                    Edge::Pos => "posedge",
                    Edge::Neg => "negedge",
                };
                format!("posedge {} or {e} {}", b.clock, r.signal)
            }
        };
        let _ = writeln!(s, "  always @({sens}) begin");
        let mut indent = "    ";
        if let Some(r) = &b.reset {
            let cond = match r.edge {
                Edge::Pos => r.signal.clone(),
                Edge::Neg => format!("!{}", r.signal),
            };
            let _ = writeln!(s, "    if ({cond}) begin");
            for a in &b.reset_assigns {
                let _ = writeln!(s, "      {} <= {};", a.target, print_expr(&a.expr));
            }
            let _ = writeln!(s, "    end else begin");
            indent = "      ";
        }
        if let Some(en) = &b.enable {
            let _ = writeln!(s, "{indent}if ({}) begin", print_expr(en));
        }
        for a in &b.assigns {
            let _ = writeln!(s, "{indent}  {} <= {};", a.target, print_expr(&a.expr));
        }
        if b.enable.is_some() {
            let _ = writeln!(s, "{indent}end");
        }
        if b.reset.is_some() {
            let _ = writeln!(s, "    end");
        }
        let _ = writeln!(s, "  end");
    }
    for i in &m.instances {
        let conns: Vec<String> = i
            .connections
            .iter()
            .map(|(p, e)| match e {
                Some(e) => format!("    .{p}({})", print_expr(e)),
                None => format!("    .{p}()"),
            })
            .collect();
        if conns.is_empty() {
            let _ = writeln!(s, "  {} {} ();", i.module, i.name);
        } else {
            let _ = writeln!(s, "  {} {} (\n{}\n  );", i.module, i.name, conns.join(",\n"));
        }
    }
    s.push_str("endmodule\n");
    s
}
