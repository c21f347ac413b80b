// SPDX-License-Identifier: Apache-2.0

//! Parsed form of the structural Verilog subset.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortDir {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub dir: PortDir,
    pub is_reg: bool,
    pub range: Option<(u32, u32)>,
}

impl PortDecl {
    pub fn width(&self) -> u32 {
        range_width(self.range)
    }
}

pub fn range_width(range: Option<(u32, u32)>) -> u32 {
    match range {
        Some((msb, lsb)) => msb.abs_diff(lsb) + 1,
        None => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Wire,
    Reg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetDecl {
    pub kind: NetKind,
    pub name: String,
    pub range: Option<(u32, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    /// `~`
    BitNot,
    /// `!`
    LogicNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    And,
    Or,
    Xor,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Ident(String),
    /// `name[msb:lsb]`, or `name[i]` when msb == lsb.
    Slice {
        name: String,
        msb: u32,
        lsb: u32,
    },
    Literal {
        width: Option<u32>,
        value: u64,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
}

impl Expr {
    pub fn idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Ident(n) | Expr::Slice { name: n, .. } => out.push(n),
            Expr::Literal { .. } => {}
            Expr::Unary(_, e) => e.idents(out),
            Expr::Binary(_, a, b) => {
                a.idents(out);
                b.idents(out);
            }
            Expr::Ternary(c, a, b) => {
                c.idents(out);
                a.idents(out);
                b.idents(out);
            }
            Expr::Concat(es) => es.iter().for_each(|e| e.idents(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assign {
    pub target: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Pos,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsyncReset {
    pub edge: Edge,
    pub signal: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonBlocking {
    pub target: String,
    pub expr: Expr,
}

/// One `always @(posedge clk ...)` block in the normalized
/// reset / enable / assignments shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqBlock {
    pub clock: String,
    pub reset: Option<AsyncReset>,
    pub reset_assigns: Vec<NonBlocking>,
    pub enable: Option<Expr>,
    pub assigns: Vec<NonBlocking>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub module: String,
    pub name: String,
    pub connections: Vec<(String, Option<Expr>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedModule {
    pub name: String,
    pub ports: Vec<PortDecl>,
    pub decls: Vec<NetDecl>,
    pub assigns: Vec<Assign>,
    pub seq_blocks: Vec<SeqBlock>,
    pub instances: Vec<Instance>,
}

impl ParsedModule {
    /// A module with ports and nothing else is treated as a black box.
    pub fn is_blackbox(&self) -> bool {
        self.decls.is_empty()
            && self.assigns.is_empty()
            && self.seq_blocks.is_empty()
            && self.instances.is_empty()
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// Declared range of a port or internal signal.
    pub fn signal_range(&self, name: &str) -> Option<Option<(u32, u32)>> {
        self.ports
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.range)
            .or_else(|| self.decls.iter().find(|d| d.name == name).map(|d| d.range))
    }

    pub fn is_reg(&self, name: &str) -> bool {
        self.ports.iter().any(|p| p.name == name && p.is_reg)
            || self
                .decls
                .iter()
                .any(|d| d.name == name && d.kind == NetKind::Reg)
    }
}
