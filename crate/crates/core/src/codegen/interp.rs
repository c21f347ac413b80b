// SPDX-License-Identifier: Apache-2.0

//! Evaluates generated assertions over recorded simulation traces.
//!
//! Only the template vocabulary is understood. An attempt whose `$past`
//! reaches before the first sample is vacuous; an attempt whose
//! `disable iff` condition holds is skipped.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::lint::{tokenize, Tok};
use super::GeneratedFile;
use crate::frontend::ConstraintSet;
use crate::msi::checkers::clock_level;
use crate::msi::engine::edge_ticks;
use crate::msi::SimTrace;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum InterpError {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("no bind for module `{module}`")]
    Unbound { module: String },
    #[error("property `{property}` is clocked by `{net}`, which is not a declared clock")]
    NotAClock { property: String, net: String },
    #[error("trace has no waveform for `{net}`")]
    MissingWave { net: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    BitOr,
    BitXor,
    BitAnd,
    Eq,
    Ne,
    Le,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Sig(String),
    Num(u64),
    Past(String, u32),
    Stable(String),
    Rose(String),
    Not(Box<Expr>),
    BitNot(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub module: String,
    pub name: String,
    pub clock: String,
    pub disable: Option<Expr>,
    pub antecedent: Option<Expr>,
    pub consequent: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bind {
    pub line: usize,
    pub module: String,
    pub instance: String,
    pub connections: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterpVerdict {
    pub module: String,
    pub property: String,
    pub samples: u64,
    pub vacuous: u64,
    pub disabled: u64,
    /// Tick of the first failing attempt.
    pub failure: Option<u64>,
}

struct Parser<'t> {
    toks: &'t [(usize, Tok)],
    pos: usize,
    file: &'t str,
}

const LEVELS: &[&[(&str, BinOp)]] = &[
    &[("||", BinOp::Or)],
    &[("&&", BinOp::And)],
    &[("|", BinOp::BitOr)],
    &[("^", BinOp::BitXor)],
    &[("&", BinOp::BitAnd)],
    &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
    &[("<=", BinOp::Le)],
    &[("-", BinOp::Sub)],
];

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, InterpError> {
        let line = self.toks.get(self.pos).or(self.toks.last()).map_or(0, |t| t.0);
        Err(InterpError::Parse {
            file: self.file.to_string(),
            line,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), InterpError> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn ident(&mut self) -> Result<String, InterpError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn keyword(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self, level: usize) -> Result<Expr, InterpError> {
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.expr(level + 1)?;
        'outer: loop {
            for (p, op) in LEVELS[level] {
                if self.eat(p) {
                    let rhs = self.expr(level + 1)?;
                    lhs = Expr::Bin(*op, Box::new(lhs), Box::new(rhs));
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, InterpError> {
        if self.eat("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat("~") {
            return Ok(Expr::BitNot(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let e = self.expr(0)?;
            self.expect(")")?;
            return Ok(e);
        }
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(Expr::Sig(s))
            }
            Some(Tok::Sys(f)) => {
                self.pos += 1;
                self.expect("(")?;
                let s = self.ident()?;
                let e = match f.as_str() {
                    "$past" => {
                        let n = if self.eat(",") {
                            match self.peek() {
                                Some(Tok::Num(n)) => {
                                    let n = *n as u32;
                                    self.pos += 1;
                                    n
                                }
                                _ => return self.err("expected a $past depth"),
                            }
                        } else {
                            1
                        };
                        Expr::Past(s, n)
                    }
                    "$stable" => Expr::Stable(s),
                    "$rose" => Expr::Rose(s),
                    other => return self.err(format!("unsupported system function `{other}`")),
                };
                self.expect(")")?;
                Ok(e)
            }
            _ => self.err("expected an expression"),
        }
    }

    /// After `property NAME ;` up to and including `endproperty`.
    fn property_body(&mut self, module: &str, name: String) -> Result<Property, InterpError> {
        self.expect("@")?;
        self.expect("(")?;
        if !self.keyword("posedge") {
            return self.err("expected `posedge`");
        }
        let clock = self.ident()?;
        self.expect(")")?;
        let disable = if self.keyword("disable") {
            if !self.keyword("iff") {
                return self.err("expected `iff`");
            }
            self.expect("(")?;
            let e = self.expr(0)?;
            self.expect(")")?;
            Some(e)
        } else {
            None
        };
        let first = self.expr(0)?;
        let (antecedent, consequent) = if self.eat("|->") {
            (Some(first), self.expr(0)?)
        } else {
            (None, first)
        };
        self.expect(";")?;
        if !self.keyword("endproperty") {
            return self.err("expected `endproperty`");
        }
        Ok(Property {
            module: module.to_string(),
            name,
            clock,
            disable,
            antecedent,
            consequent,
        })
    }
}

/// Asserted properties of every module in `content`.
pub fn parse_properties(file: &str, content: &str) -> Result<Vec<Property>, InterpError> {
    let toks = tokenize(content).map_err(|(line, message)| InterpError::Parse {
        file: file.to_string(),
        line,
        message,
    })?;
    let mut p = Parser { toks: &toks, pos: 0, file };
    let mut module = String::new();
    let mut props = BTreeMap::new();
    let mut asserted = Vec::new();
    while let Some(t) = p.peek().cloned() {
        p.pos += 1;
        let Tok::Ident(w) = t else { continue };
        match w.as_str() {
            "module" => module = p.ident()?,
            "property" => {
                let name = p.ident()?;
                p.expect(";")?;
                let prop = p.property_body(&module, name.clone())?;
                props.insert(name, prop);
            }
            "assert" => {
                if !p.keyword("property") {
                    return p.err("expected `property`");
                }
                p.expect("(")?;
                asserted.push(p.ident()?);
                p.expect(")")?;
            }
            _ => {}
        }
    }
    asserted
        .into_iter()
        .map(|n| match props.remove(&n) {
            Some(pr) => Ok(pr),
            None => p.err(format!("assertion of undefined property `{n}`")),
        })
        .collect()
}

/// Bind statements of a `bind_all.sv`.
pub fn parse_binds(content: &str) -> Vec<Bind> {
    let Ok(toks) = tokenize(content) else { return vec![] };
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i].1 == Tok::Ident("bind".into()) {
            let line = toks[i].0;
            let name = |j: usize| match toks.get(j) {
                Some((_, Tok::Ident(s))) => s.clone(),
                _ => String::new(),
            };
            let (module, instance) = (name(i + 2), name(i + 3));
            let mut connections = BTreeMap::new();
            let mut j = i + 4;
            while j < toks.len() && toks[j].1 != Tok::Punct(";") {
                if toks[j].1 == Tok::Punct(".") && j + 4 < toks.len() {
                    if let (Tok::Ident(port), Tok::Ident(net)) = (&toks[j + 1].1, &toks[j + 3].1) {
                        connections.insert(port.clone(), net.clone());
                    }
                    j += 4;
                }
                j += 1;
            }
            out.push(Bind {
                line,
                module,
                instance,
                connections,
            });
            i = j;
        }
        i += 1;
    }
    out
}

/// Value history of the ports one property reads, most recent last.
struct History<'h> {
    ports: &'h BTreeMap<String, usize>,
    rows: &'h [Vec<u64>],
}

impl History<'_> {
    /// `None` when the value lies before the first sample.
    fn get(&self, name: &str, back: u32) -> Option<u64> {
        let n = self.rows.len();
        let idx = n.checked_sub(1 + back as usize)?;
        Some(self.rows[idx][self.ports[name]])
    }

    fn eval(&self, e: &Expr) -> Option<u64> {
        Some(match e {
            Expr::Sig(s) => self.get(s, 0)?,
            Expr::Num(v) => *v,
            Expr::Past(s, n) => self.get(s, *n)?,
            Expr::Stable(s) => u64::from(self.get(s, 0)? == self.get(s, 1)?),
            Expr::Rose(s) => u64::from(self.get(s, 0)? & 1 == 1 && self.get(s, 1)? & 1 == 0),
            Expr::Not(x) => u64::from(self.eval(x)? == 0),
            Expr::BitNot(x) => !self.eval(x)?,
            Expr::Bin(op, l, r) => {
                let (a, b) = (self.eval(l)?, self.eval(r)?);
                match op {
                    BinOp::Or => u64::from(a != 0 || b != 0),
                    BinOp::And => u64::from(a != 0 && b != 0),
                    BinOp::BitOr => a | b,
                    BinOp::BitXor => a ^ b,
                    BinOp::BitAnd => a & b,
                    BinOp::Eq => u64::from(a == b),
                    BinOp::Ne => u64::from(a != b),
                    BinOp::Le => u64::from(a <= b),
                    BinOp::Sub => a.wrapping_sub(b),
                }
            }
        })
    }
}

fn signals(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Sig(s) | Expr::Past(s, _) | Expr::Stable(s) | Expr::Rose(s) => out.push(s.clone()),
        Expr::Num(_) => {}
        Expr::Not(x) | Expr::BitNot(x) => signals(x, out),
        Expr::Bin(_, l, r) => {
            signals(l, out);
            signals(r, out);
        }
    }
}

/// Evaluates every asserted property of a generated tree on `trace`.
/// The trace must have been recorded.
pub fn interpret(
    files: &[GeneratedFile],
    cs: &ConstraintSet,
    trace: &SimTrace,
) -> Result<Vec<InterpVerdict>, InterpError> {
    let binds: BTreeMap<String, Bind> = files
        .iter()
        .filter(|f| f.path == "bind_all.sv")
        .flat_map(|f| parse_binds(&f.content))
        .map(|b| (b.module.clone(), b))
        .collect();
    let mut out = Vec::new();
    for f in files.iter().filter(|f| f.path.starts_with("checks/")) {
        for prop in parse_properties(&f.path, &f.content)? {
            let bind = binds.get(&prop.module).ok_or_else(|| InterpError::Unbound {
                module: prop.module.clone(),
            })?;
            let net_of = |port: &str| bind.connections.get(port).cloned().unwrap_or_else(|| port.to_string());
            let clock_net = net_of(&prop.clock);
            let clock = cs.clock(&clock_net).ok_or_else(|| InterpError::NotAClock {
                property: prop.name.clone(),
                net: clock_net.clone(),
            })?;
            let mut names = Vec::new();
            for e in prop.disable.iter().chain(prop.antecedent.iter()).chain([&prop.consequent]) {
                signals(e, &mut names);
            }
            names.sort();
            names.dedup();
            let ports: BTreeMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
            let mut readers = Vec::new();
            for n in &names {
                let net = net_of(n);
                if let Some(c) = cs.clock(&net) {
                    readers.push(Err((c.period, c.phase)));
                } else {
                    let w = trace.waves.get(&net).ok_or(InterpError::MissingWave { net })?;
                    readers.push(Ok(w));
                }
            }
            let ticks = edge_ticks(std::slice::from_ref(clock), trace.end_tick);
            let mut rows: Vec<Vec<u64>> = Vec::new();
            let mut v = InterpVerdict {
                module: prop.module.clone(),
                property: prop.name.clone(),
                samples: 0,
                vacuous: 0,
                disabled: 0,
                failure: None,
            };
            for &t in ticks.keys() {
                rows.push(
                    readers
                        .iter()
                        .map(|r| match r {
                            Ok(w) => w.before(t),
                            Err((p, ph)) => u64::from(clock_level(*p, *ph, t)),
                        })
                        .collect(),
                );
                v.samples += 1;
                let h = History { ports: &ports, rows: &rows };
                if let Some(d) = &prop.disable {
                    if h.eval(d).is_some_and(|x| x != 0) {
                        v.disabled += 1;
                        continue;
                    }
                }
                let ante = match &prop.antecedent {
                    Some(a) => h.eval(a),
                    None => Some(1),
                };
                let cons = h.eval(&prop.consequent);
                match (ante, cons) {
                    (Some(0), _) => {}
                    (Some(_), Some(c)) => {
                        if c == 0 && v.failure.is_none() {
                            v.failure = Some(t);
                        }
                    }
                    _ => v.vacuous += 1,
                }
            }
            out.push(v);
        }
    }
    Ok(out)
}
