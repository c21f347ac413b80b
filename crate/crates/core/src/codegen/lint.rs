// SPDX-License-Identifier: Apache-2.0

//! Static checks over generated SystemVerilog.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{header, GeneratedFile};
use crate::netlist::Netlist;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Sys(String),
    Num(u64),
    Punct(&'static str),
}

const PUNCT: &[&str] = &[
    "|->", "||", "&&", "==", "!=", "<=", "(", ")", "[", "]", "{", "}", ";", ",", ":", ".", "@", "!", "~", "^",
    "&", "|", "-", "=", "#",
];

pub(crate) fn parse_number(s: &str) -> Option<u64> {
    let s = s.replace('_', "");
    match s.split_once('\'') {
        None => s.parse().ok(),
        Some((_, rest)) => {
            let mut chars = rest.chars();
            let radix = match chars.next()?.to_ascii_lowercase() {
                'b' => 2,
                'o' => 8,
                'd' => 10,
                'h' => 16,
                _ => return None,
            };
            u64::from_str_radix(chars.as_str(), radix).ok()
        }
    }
}

/// Tokens with 1-based line numbers. Comments are dropped.
pub(crate) fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, (usize, String)> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let ln = ln + 1;
        let line = line.split("//").next().unwrap_or("");
        let b = line.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i] as char;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' || c == '$' {
                let start = i;
                i += 1;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || (b[i] == b'.' && c != '$')) {
                    i += 1;
                }
                let w = &line[start..i];
                out.push((ln, if c == '$' { Tok::Sys(w.to_string()) } else { Tok::Ident(w.to_string()) }));
            } else if c.is_ascii_digit() || c == '\'' {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                    i += 1;
                }
                let w = &line[start..i];
                let v = parse_number(w).ok_or((ln, format!("bad number `{w}`")))?;
                out.push((ln, Tok::Num(v)));
            } else if let Some(p) = PUNCT.iter().find(|p| line[i..].starts_with(**p)) {
                out.push((ln, Tok::Punct(p)));
                i += p.len();
            } else {
                return Err((ln, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "module", "endmodule", "input", "logic", "property", "endproperty", "assert", "posedge", "disable", "iff",
    "covergroup", "endgroup", "coverpoint", "bins", "new", "bind",
];

pub const SYSTEM_FUNCTIONS: &[&str] = &["$stable", "$rose", "$past"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintIssue {
    pub file: String,
    pub line: usize,
    pub message: String,
}

/// Ports and hook signals of every module defined in `files`.
fn module_ports(files: &[GeneratedFile]) -> BTreeMap<String, BTreeSet<String>> {
    let mut out = BTreeMap::new();
    for f in files {
        let Ok(toks) = tokenize(&f.content) else { continue };
        let mut cur: Option<String> = None;
        let mut i = 0;
        while i < toks.len() {
            match &toks[i].1 {
                Tok::Ident(k) if k == "module" => {
                    if let Some((_, Tok::Ident(n))) = toks.get(i + 1) {
                        cur = Some(n.clone());
                        out.entry(n.clone()).or_insert_with(BTreeSet::new);
                    }
                }
                Tok::Ident(k) if k == "logic" => {
                    let mut j = i + 1;
                    if toks.get(j).map(|t| &t.1) == Some(&Tok::Punct("[")) {
                        while j < toks.len() && toks[j].1 != Tok::Punct("]") {
                            j += 1;
                        }
                        j += 1;
                    }
                    if let (Some(m), Some((_, Tok::Ident(n)))) = (&cur, toks.get(j)) {
                        out.get_mut(m).expect("module entry").insert(n.clone());
                    }
                }
                _ => {}
            }
            i += 1;
        }
    }
    out
}

/// Checks one file's structure and identifiers.
fn lint_file(f: &GeneratedFile, issues: &mut Vec<LintIssue>) {
    let mut issue = |line: usize, message: String| {
        issues.push(LintIssue {
            file: f.path.clone(),
            line,
            message,
        })
    };
    if !f.content.starts_with(&header()) {
        issue(1, "missing generated-by header".into());
    }
    let toks = match tokenize(&f.content) {
        Ok(t) => t,
        Err((l, m)) => return issue(l, m),
    };
    let mut stack: Vec<(&str, usize)> = Vec::new();
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut i = 0;
    while i < toks.len() {
        let (ln, t) = &toks[i];
        match t {
            Tok::Ident(w) => match w.as_str() {
                "property" if i > 0 && toks[i - 1].1 == Tok::Ident("assert".into()) => {}
                "module" | "property" | "covergroup" => {
                    stack.push((if w == "module" { "endmodule" } else if w == "property" { "endproperty" } else { "endgroup" }, *ln));
                    if w == "module" {
                        declared.clear();
                    }
                    if let Some((_, Tok::Ident(n))) = toks.get(i + 1) {
                        declared.insert(n.clone());
                        i += 1;
                    }
                }
                "endmodule" | "endproperty" | "endgroup" => match stack.pop() {
                    Some((want, _)) if want == w => {}
                    Some((want, open)) => issue(*ln, format!("`{w}` closes a block opened on line {open} that needs `{want}`")),
                    None => issue(*ln, format!("`{w}` without an open block")),
                },
                "logic" => {
                    let mut j = i + 1;
                    if toks.get(j).map(|t| &t.1) == Some(&Tok::Punct("[")) {
                        while j < toks.len() && toks[j].1 != Tok::Punct("]") {
                            j += 1;
                        }
                        j += 1;
                    }
                    if let Some((_, Tok::Ident(n))) = toks.get(j) {
                        declared.insert(n.clone());
                    }
                    i = j;
                }
                "bind" => {
                    // Connections are checked against the netlist separately.
                    while i < toks.len() && toks[i].1 != Tok::Punct(";") {
                        i += 1;
                    }
                }
                "bins" => i += 1,
                k if KEYWORDS.contains(&k) => {}
                name => {
                    // `type instance` declares the instance.
                    if let Some((_, Tok::Ident(n))) = toks.get(i + 1) {
                        if !KEYWORDS.contains(&n.as_str()) && declared.contains(name) {
                            declared.insert(n.clone());
                            i += 1;
                        }
                    }
                    if !declared.contains(name) && toks.get(i.wrapping_sub(1)).map(|t| &t.1) != Some(&Tok::Punct(".")) {
                        issue(*ln, format!("undeclared identifier `{name}`"));
                    }
                }
            },
            Tok::Sys(s) if !SYSTEM_FUNCTIONS.contains(&s.as_str()) => {
                issue(*ln, format!("system function `{s}` is outside the template vocabulary"));
            }
            _ => {}
        }
        i += 1;
    }
    for (want, open) in stack {
        issue(open, format!("block opened here is never closed with `{want}`"));
    }
}

/// Lints a generated tree: block balance, header, vocabulary, declared
/// identifiers, unique module names and bind connections.
pub fn lint(files: &[GeneratedFile], nl: &Netlist) -> Vec<LintIssue> {
    let mut issues = Vec::new();
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    for f in files {
        lint_file(f, &mut issues);
        for (ln, line) in f.content.lines().enumerate() {
            if let Some(rest) = line.trim_start().strip_prefix("module ") {
                let name = rest.split(|c: char| !(c.is_alphanumeric() || c == '_')).next().unwrap_or("");
                if let Some(other) = seen.insert(name.to_string(), f.path.clone()) {
                    issues.push(LintIssue {
                        file: f.path.clone(),
                        line: ln + 1,
                        message: format!("module `{name}` is also defined in {other}"),
                    });
                }
            }
        }
    }
    let ports = module_ports(files);
    for f in files.iter().filter(|f| f.path == "bind_all.sv") {
        for b in super::interp::parse_binds(&f.content) {
            let Some(mports) = ports.get(&b.module) else {
                issues.push(LintIssue {
                    file: f.path.clone(),
                    line: b.line,
                    message: format!("bind names unknown module `{}`", b.module),
                });
                continue;
            };
            for (port, net) in &b.connections {
                if !mports.contains(port) {
                    issues.push(LintIssue {
                        file: f.path.clone(),
                        line: b.line,
                        message: format!("`{}` has no port `{port}`", b.module),
                    });
                }
                let ok = match net.strip_prefix("u_cdc_msi_hooks.") {
                    Some(h) => ports.get("cdc_msi_hooks").is_some_and(|p| p.contains(h)),
                    None => nl.find_net(net).is_some(),
                };
                if !ok {
                    issues.push(LintIssue {
                        file: f.path.clone(),
                        line: b.line,
                        message: format!("connection `{net}` does not resolve"),
                    });
                }
            }
        }
    }
    issues
}
