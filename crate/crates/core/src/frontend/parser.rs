// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for the Verilog subset.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::FrontendError;

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "initial",
    "task",
    "function",
    "generate",
    "genvar",
    "parameter",
    "localparam",
    "integer",
    "always_ff",
    "always_comb",
    "always_latch",
    "case",
    "casez",
    "for",
    "while",
    "logic",
    "tri",
    "supply0",
    "supply1",
    "specify",
    "defparam",
];

const KEYWORDS: &[&str] = &[
    "module", "endmodule", "input", "output", "inout", "wire", "reg", "assign", "always",
    "posedge", "negedge", "or", "if", "else", "begin", "end",
];

enum Stmt {
    Block(Vec<Stmt>),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    Assign(String, Expr),
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    origin: &'a str,
    /// identifiers referenced in the current module with their lines
    uses: Vec<(String, u32)>,
}

/// Parses every module in `text`.
pub fn parse_verilog(text: &str, origin: &str) -> Result<Vec<ParsedModule>, FrontendError> {
    let toks = lex(text, origin)?;
    let mut p = Parser {
        toks,
        pos: 0,
        origin,
        uses: Vec::new(),
    };
    let mut modules: Vec<ParsedModule> = Vec::new();
    let mut names = HashSet::new();
    while !p.at_end() {
        let line = p.line();
        let m = p.module()?;
        if !names.insert(m.name.clone()) {
            return Err(FrontendError::DuplicateModule {
                origin: origin.into(),
                line,
                name: m.name,
            });
        }
        modules.push(m);
    }
    Ok(modules)
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn line(&self) -> u32 {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.line)
            .unwrap_or(1)
    }

    fn col(&self) -> u32 {
        match self.toks.get(self.pos) {
            Some(t) => t.col,
            None => self.toks.last().map(|t| t.col + 1).unwrap_or(1),
        }
    }

    fn err(&self, expected: &str) -> FrontendError {
        if let Some(Tok::Unsupported(s)) = self.peek() {
            return self.unsupported(s.clone());
        }
        FrontendError::Syntax {
            origin: self.origin.into(),
            line: self.line(),
            column: self.col(),
            expected: expected.into(),
        }
    }

    fn unsupported(&self, construct: impl Into<String>) -> FrontendError {
        FrontendError::Unsupported {
            origin: self.origin.into(),
            line: self.line(),
            construct: construct.into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(&format!("`{s}`")))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            Err(self.err(&format!("`{s}`")))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                    return Err(self.unsupported(s.clone()));
                }
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("identifier")),
        }
    }

    fn use_ident(&mut self) -> Result<String, FrontendError> {
        let line = self.line();
        let s = self.ident()?;
        self.uses.push((s.clone(), line));
        Ok(s)
    }

    fn number(&mut self) -> Result<u32, FrontendError> {
        match self.peek() {
            Some(Tok::Number(None, v)) if *v <= u32::MAX as u64 => {
                let v = *v as u32;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("unsized integer")),
        }
    }

    fn range(&mut self) -> Result<Option<(u32, u32)>, FrontendError> {
        if !self.eat_sym("[") {
            return Ok(None);
        }
        let msb = self.number()?;
        self.expect_sym(":")?;
        let lsb = self.number()?;
        self.expect_sym("]")?;
        if lsb != 0 || msb >= 64 {
            return Err(self.unsupported("range other than [n:0] with n < 64"));
        }
        Ok(Some((msb, lsb)))
    }

    fn module(&mut self) -> Result<ParsedModule, FrontendError> {
        self.uses.clear();
        if let Some(Tok::Ident(s)) = self.peek() {
            if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                return Err(self.unsupported(s.clone()));
            }
        }
        self.expect_kw("module")?;
        let name = self.ident()?;
        let mut m = ParsedModule {
            name,
            ports: Vec::new(),
            decls: Vec::new(),
            assigns: Vec::new(),
            seq_blocks: Vec::new(),
            instances: Vec::new(),
        };
        if self.is_sym("#") {
            return Err(self.unsupported("module parameters"));
        }
        self.expect_sym("(")?;
        if !self.eat_sym(")") {
            let mut last: Option<(PortDir, bool, Option<(u32, u32)>)> = None;
            loop {
                let dir = if self.eat_kw("input") {
                    Some(PortDir::Input)
                } else if self.eat_kw("output") {
                    Some(PortDir::Output)
                } else if self.is_kw("inout") {
                    return Err(self.unsupported("inout port"));
                } else {
                    None
                };
                let (dir, is_reg, range) = match dir {
                    Some(d) => {
                        let is_reg = if self.eat_kw("reg") {
                            true
                        } else {
                            self.eat_kw("wire");
                            false
                        };
                        if is_reg && d == PortDir::Input {
                            return Err(self.err("`wire` or nothing for an input port"));
                        }
                        let r = self.range()?;
                        (d, is_reg, r)
                    }
                    None => match last {
                        Some(l) => l,
                        None => return Err(self.unsupported("non-ANSI port list")),
                    },
                };
                last = Some((dir, is_reg, range));
                let pname = self.ident()?;
                if m.ports.iter().any(|p| p.name == pname) {
                    return Err(self.err("unique port name"));
                }
                m.ports.push(PortDecl {
                    name: pname,
                    dir,
                    is_reg,
                    range,
                });
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        self.expect_sym(";")?;
        loop {
            if self.at_end() {
                return Err(self.err("`endmodule`"));
            }
            if self.eat_kw("endmodule") {
                break;
            }
            self.item(&mut m)?;
        }
        self.check_declared(&m)?;
        Ok(m)
    }

    fn check_declared(&self, m: &ParsedModule) -> Result<(), FrontendError> {
        for (name, line) in &self.uses {
            if m.signal_range(name).is_none() {
                return Err(FrontendError::Undeclared {
                    origin: self.origin.into(),
                    line: *line,
                    name: name.clone(),
                });
            }
        }
        for b in &m.seq_blocks {
            for a in b.assigns.iter().chain(&b.reset_assigns) {
                if !m.is_reg(&a.target) {
                    return Err(FrontendError::NotReg {
                        origin: self.origin.into(),
                        name: a.target.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn item(&mut self, m: &mut ParsedModule) -> Result<(), FrontendError> {
        let kind = if self.eat_kw("wire") {
            Some(NetKind::Wire)
        } else if self.eat_kw("reg") {
            Some(NetKind::Reg)
        } else {
            None
        };
        if let Some(kind) = kind {
            let range = self.range()?;
            loop {
                let name = self.ident()?;
                if m.signal_range(&name).is_some() {
                    return Err(self.err("a name not declared before"));
                }
                m.decls.push(NetDecl { kind, name, range });
                if self.is_sym("=") {
                    return Err(self.unsupported("net declaration assignment"));
                }
                if self.eat_sym(";") {
                    return Ok(());
                }
                self.expect_sym(",")?;
            }
        }
        if self.eat_kw("assign") {
            if self.is_sym("#") {
                return Err(self.unsupported("delay"));
            }
            let target = self.use_ident()?;
            if self.is_sym("[") {
                return Err(self.unsupported("part-select assignment target"));
            }
            self.expect_sym("=")?;
            let expr = self.expr()?;
            self.expect_sym(";")?;
            m.assigns.push(Assign { target, expr });
            return Ok(());
        }
        if self.is_kw("always") {
            let b = self.always()?;
            m.seq_blocks.push(b);
            return Ok(());
        }
        if self.is_kw("input") || self.is_kw("output") || self.is_kw("inout") {
            return Err(self.unsupported("port declaration in module body"));
        }
        if let (Some(Tok::Ident(_)), Some(Tok::Ident(_))) = (self.peek(), self.peek_at(1)) {
            let module = self.ident()?;
            let name = self.ident()?;
            let inst = self.instance(module, name)?;
            if m.instances.iter().any(|i| i.name == inst.name) || m.signal_range(&inst.name).is_some() {
                return Err(self.err("a unique instance name"));
            }
            m.instances.push(inst);
            return Ok(());
        }
        if let (Some(Tok::Ident(_)), Some(Tok::Sym("#"))) = (self.peek(), self.peek_at(1)) {
            return Err(self.unsupported("parameterized instance"));
        }
        match self.peek() {
            Some(Tok::Ident(s)) if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) => {
                Err(self.unsupported(s.clone()))
            }
            _ => Err(self.err("module item")),
        }
    }

    fn instance(&mut self, module: String, name: String) -> Result<Instance, FrontendError> {
        self.expect_sym("(")?;
        let mut connections = Vec::new();
        if !self.eat_sym(")") {
            loop {
                if !self.eat_sym(".") {
                    return Err(if matches!(self.peek(), Some(Tok::Ident(_))) {
                        self.unsupported("positional port connection")
                    } else {
                        self.err("`.port(...)`")
                    });
                }
                let port = self.ident()?;
                self.expect_sym("(")?;
                let e = if self.is_sym(")") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_sym(")")?;
                if connections.iter().any(|(p, _): &(String, _)| *p == port) {
                    return Err(self.err("each port connected once"));
                }
                connections.push((port, e));
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        self.expect_sym(";")?;
        Ok(Instance {
            module,
            name,
            connections,
        })
    }

    fn always(&mut self) -> Result<SeqBlock, FrontendError> {
        let start_line = self.line();
        self.expect_kw("always")?;
        self.expect_sym("@")?;
        if self.is_sym("*") {
            return Err(self.unsupported("combinational always block"));
        }
        self.expect_sym("(")?;
        if self.is_sym("*") {
            return Err(self.unsupported("combinational always block"));
        }
        if self.is_kw("negedge") {
            return Err(self.unsupported("negedge clock"));
        }
        if !self.eat_kw("posedge") {
            return Err(self.unsupported("level-sensitive always block"));
        }
        let clock = self.use_ident()?;
        let mut reset = None;
        if self.eat_kw("or") || self.eat_sym(",") {
            let edge = if self.eat_kw("posedge") {
                Edge::Pos
            } else if self.eat_kw("negedge") {
                Edge::Neg
            } else {
                return Err(self.err("`posedge` or `negedge`"));
            };
            let signal = self.use_ident()?;
            reset = Some(AsyncReset { edge, signal });
            if self.is_kw("or") || self.is_sym(",") {
                return Err(self.unsupported("more than two events in sensitivity list"));
            }
        }
        self.expect_sym(")")?;
        let body = self.stmt()?;
        self.normalize(clock, reset, body, start_line)
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        if self.eat_kw("begin") {
            if self.is_sym(":") {
                return Err(self.unsupported("named block"));
            }
            let mut v = Vec::new();
            while !self.eat_kw("end") {
                if self.at_end() {
                    return Err(self.err("`end`"));
                }
                v.push(self.stmt()?);
            }
            return Ok(Stmt::Block(v));
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let c = self.expr()?;
            self.expect_sym(")")?;
            let t = self.stmt()?;
            let e = if self.eat_kw("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(Stmt::If(c, Box::new(t), e));
        }
        let target = self.use_ident()?;
        if self.is_sym("[") {
            return Err(self.unsupported("part-select assignment target"));
        }
        if self.is_sym("=") {
            return Err(self.unsupported("blocking assignment in sequential block"));
        }
        self.expect_sym("<=")?;
        if self.is_sym("#") {
            return Err(self.unsupported("delay"));
        }
        let e = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::Assign(target, e))
    }

    fn flat_assigns(&self, s: Stmt, out: &mut Vec<NonBlocking>) -> Result<(), FrontendError> {
        match s {
            Stmt::Assign(target, expr) => {
                if out.iter().any(|a| a.target == target) {
                    return Err(self.unsupported(format!("multiple assignments to `{target}`")));
                }
                out.push(NonBlocking { target, expr });
                Ok(())
            }
            Stmt::Block(v) => v.into_iter().try_for_each(|s| self.flat_assigns(s, out)),
            Stmt::If(..) => Err(self.unsupported("nested if in sequential block")),
        }
    }

    /// Normal (non-reset) arm: plain assignments or a single enable `if`.
    fn normal_arm(&self, s: Stmt) -> Result<(Option<Expr>, Vec<NonBlocking>), FrontendError> {
        let s = match s {
            Stmt::Block(mut v) if v.len() == 1 && matches!(v[0], Stmt::If(..)) => v.pop().unwrap(),
            s => s,
        };
        match s {
            Stmt::If(cond, then, None) => {
                let mut v = Vec::new();
                self.flat_assigns(*then, &mut v)?;
                Ok((Some(cond), v))
            }
            Stmt::If(_, _, Some(_)) => {
                Err(self.unsupported("if/else in sequential block (synchronous reset or data mux)"))
            }
            s => {
                let mut v = Vec::new();
                self.flat_assigns(s, &mut v)?;
                Ok((None, v))
            }
        }
    }

    fn normalize(
        &self,
        clock: String,
        reset: Option<AsyncReset>,
        body: Stmt,
        line: u32,
    ) -> Result<SeqBlock, FrontendError> {
        let body = match body {
            Stmt::Block(mut v) if v.len() == 1 => v.pop().unwrap(),
            b => b,
        };
        let Some(reset) = reset else {
            let (enable, assigns) = self.normal_arm(body)?;
            return Ok(SeqBlock {
                clock,
                reset: None,
                reset_assigns: Vec::new(),
                enable,
                assigns,
            });
        };
        let Stmt::If(cond, rst_arm, Some(else_arm)) = body else {
            return Err(FrontendError::Unsupported {
                origin: self.origin.into(),
                line,
                construct: "async-reset block without `if (reset) ... else ...`".into(),
            });
        };
        let cond_ok = match (&cond, reset.edge) {
            (Expr::Unary(_, inner), Edge::Neg) => **inner == Expr::Ident(reset.signal.clone()),
            (Expr::Ident(n), Edge::Pos) => *n == reset.signal,
            _ => false,
        };
        if !cond_ok {
            return Err(FrontendError::Unsupported {
                origin: self.origin.into(),
                line,
                construct: "reset condition that does not match the sensitivity edge".into(),
            });
        }
        let mut reset_assigns = Vec::new();
        self.flat_assigns(*rst_arm, &mut reset_assigns)?;
        let (enable, assigns) = self.normal_arm(*else_arm)?;
        for a in &assigns {
            if !reset_assigns.iter().any(|r| r.target == a.target) {
                return Err(FrontendError::Unsupported {
                    origin: self.origin.into(),
                    line,
                    construct: format!("register `{}` without a reset value", a.target),
                });
            }
        }
        Ok(SeqBlock {
            clock,
            reset: Some(reset),
            reset_assigns,
            enable,
            assigns,
        })
    }

    // expr := or_expr ['?' expr ':' expr]
    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let c = self.or_expr()?;
        if self.eat_sym("?") {
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(Expr::Ternary(Box::new(c), Box::new(a), Box::new(b)));
        }
        Ok(c)
    }

    fn or_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut l = self.xor_expr()?;
        while self.eat_sym("|") {
            let r = self.xor_expr()?;
            l = Expr::Binary(BinaryOp::Or, Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn xor_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut l = self.and_expr()?;
        while self.eat_sym("^") {
            let r = self.and_expr()?;
            l = Expr::Binary(BinaryOp::Xor, Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut l = self.unary()?;
        while self.eat_sym("&") {
            let r = self.unary()?;
            l = Expr::Binary(BinaryOp::And, Box::new(l), Box::new(r));
        }
        if let Some(Tok::Sym(s)) = self.peek() {
            if ["==", "!=", "&&", "||", "+", "-", "*", "/", "<", ">", "%"].contains(s) {
                return Err(self.unsupported(format!("operator `{s}`")));
            }
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_sym("~") {
            if self.is_sym("&") || self.is_sym("|") || self.is_sym("^") {
                return Err(self.unsupported("reduction operator"));
            }
            return Ok(Expr::Unary(UnaryOp::BitNot, Box::new(self.unary()?)));
        }
        if self.eat_sym("!") {
            return Ok(Expr::Unary(UnaryOp::LogicNot, Box::new(self.unary()?)));
        }
        if self.is_sym("&") || self.is_sym("|") || self.is_sym("^") {
            return Err(self.unsupported("reduction operator"));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if self.eat_sym("{") {
            let mut v = vec![self.expr()?];
            if self.is_sym("{") && v.len() == 1 {
                return Err(self.unsupported("replication"));
            }
            while self.eat_sym(",") {
                v.push(self.expr()?);
            }
            self.expect_sym("}")?;
            return Ok(if v.len() == 1 { v.pop().unwrap() } else { Expr::Concat(v) });
        }
        if let Some(Tok::Number(w, v)) = self.peek() {
            let e = Expr::Literal { width: *w, value: *v };
            self.pos += 1;
            return Ok(e);
        }
        let name = self.use_ident()?;
        if self.eat_sym("[") {
            let msb = self.number()?;
            let lsb = if self.eat_sym(":") { self.number()? } else { msb };
            self.expect_sym("]")?;
            if lsb > msb {
                return Err(self.err("msb >= lsb"));
            }
            return Ok(Expr::Slice { name, msb, lsb });
        }
        if self.is_sym("(") {
            return Err(self.unsupported("function call"));
        }
        Ok(Expr::Ident(name))
    }
}
