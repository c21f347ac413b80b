// SPDX-License-Identifier: Apache-2.0

//! Line-oriented CDC constraints format.
//!
//! ```text
//! clock <name> -period <int> [-phase <int>] -domain <id>
//! reset <net> [-active_low] -domain <id>
//! input <port> -domain <id>
//! domain <id>
//! static <net>
//! false_path -from <net> -to <net>
//! sync_cells <module>
//! option <key> <value>
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::{Rule, Severity};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub name: String,
    pub period: u64,
    pub phase: u64,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetSpec {
    pub net: String,
    pub active_low: bool,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalsePath {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Options {
    pub ndff_min_depth: u32,
    pub stability_cycles: u32,
    pub setup_window: u64,
    pub hold_window: u64,
    /// Severity of a flop output found in a clock cone.
    pub data_on_clock_pin: Severity,
    pub severity: BTreeMap<Rule, Severity>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            ndff_min_depth: 2,
            stability_cycles: 2,
            setup_window: 1,
            hold_window: 1,
            data_on_clock_pin: Severity::Warning,
            severity: BTreeMap::new(),
        }
    }
}

impl Options {
    pub fn severity_of(&self, rule: Rule) -> Severity {
        self.severity
            .get(&rule)
            .copied()
            .unwrap_or_else(|| rule.default_severity())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub clocks: Vec<ClockSpec>,
    pub resets: Vec<ResetSpec>,
    /// Input ports given a domain without being clocks: (port, domain).
    pub inputs: Vec<(String, String)>,
    pub domains: BTreeSet<String>,
    pub static_signals: Vec<String>,
    pub false_paths: Vec<FalsePath>,
    pub sync_cells: Vec<String>,
    pub options: Options,
}

impl ConstraintSet {
    pub fn clock(&self, name: &str) -> Option<&ClockSpec> {
        self.clocks.iter().find(|c| c.name == name)
    }

    pub fn reset(&self, net: &str) -> Option<&ResetSpec> {
        self.resets.iter().find(|r| r.net == net)
    }

    pub fn input_domain(&self, port: &str) -> Option<&str> {
        self.inputs
            .iter()
            .find(|(p, _)| p == port)
            .map(|(_, d)| d.as_str())
            .or_else(|| self.reset(port).map(|r| r.domain.as_str()))
    }

    pub fn is_static(&self, net: &str) -> bool {
        self.static_signals.iter().any(|s| s == net)
    }

    pub fn is_false_path(&self, from: &str, to: &str) -> bool {
        self.false_paths.iter().any(|f| f.from == from && f.to == to)
    }

    /// Every known domain: clock domains plus standalone declarations.
    pub fn all_domains(&self) -> BTreeSet<String> {
        let mut d = self.domains.clone();
        d.extend(self.clocks.iter().map(|c| c.domain.clone()));
        d
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum ConstraintError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: u32, message: String },
    #[error("line {line}: clock `{name}` declared twice")]
    DuplicateClock { line: u32, name: String },
    #[error("line {line}: clock period {period} is below the minimum of 2 ticks")]
    BadPeriod { line: u32, period: u64 },
    #[error("line {line}: unknown option `{key}`")]
    UnknownOption { line: u32, key: String },
    #[error("line {line}: domain `{domain}` is neither a clock domain nor declared")]
    UnknownDomain { line: u32, domain: String },
}

fn syntax(line: u32, message: impl Into<String>) -> ConstraintError {
    ConstraintError::Syntax {
        line,
        message: message.into(),
    }
}

fn int(line: u32, s: Option<&str>, what: &str) -> Result<u64, ConstraintError> {
    s.and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| syntax(line, format!("expected integer {what}")))
}

fn ident(line: u32, s: Option<&str>, what: &str) -> Result<String, ConstraintError> {
    match s {
        Some(s) if !s.starts_with('-') => Ok(s.to_string()),
        _ => Err(syntax(line, format!("expected {what}"))),
    }
}

pub fn parse_constraints(text: &str) -> Result<ConstraintSet, ConstraintError> {
    let mut cs = ConstraintSet::default();
    let mut reset_lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u32 + 1;
        let content = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = content.split_whitespace().collect();
        let Some((&head, rest)) = words.split_first() else {
            continue;
        };
        let mut it = rest.iter().copied();
        match head {
            "clock" => {
                let name = ident(line, it.next(), "clock name")?;
                let (mut period, mut phase, mut domain) = (None, 0, None);
                while let Some(flag) = it.next() {
                    match flag {
                        "-period" => period = Some(int(line, it.next(), "period")?),
                        "-phase" => phase = int(line, it.next(), "phase")?,
                        "-domain" => domain = Some(ident(line, it.next(), "domain")?),
                        f => return Err(syntax(line, format!("unknown clock flag `{f}`"))),
                    }
                }
                let period = period.ok_or_else(|| syntax(line, "missing -period"))?;
                if period < 2 {
                    return Err(ConstraintError::BadPeriod { line, period });
                }
                if phase >= period {
                    return Err(syntax(line, "phase must be smaller than period"));
                }
                let domain = domain.ok_or_else(|| syntax(line, "missing -domain"))?;
                if cs.clock(&name).is_some() {
                    return Err(ConstraintError::DuplicateClock { line, name });
                }
                cs.clocks.push(ClockSpec {
                    name,
                    period,
                    phase,
                    domain,
                });
            }
            "reset" => {
                let net = ident(line, it.next(), "reset net")?;
                let (mut active_low, mut domain) = (false, None);
                while let Some(flag) = it.next() {
                    match flag {
                        "-active_low" => active_low = true,
                        "-domain" => domain = Some(ident(line, it.next(), "domain")?),
                        f => return Err(syntax(line, format!("unknown reset flag `{f}`"))),
                    }
                }
                let domain = domain.ok_or_else(|| syntax(line, "missing -domain"))?;
                if cs.reset(&net).is_some() {
                    return Err(syntax(line, format!("reset `{net}` declared twice")));
                }
                reset_lines.push(line);
                cs.resets.push(ResetSpec {
                    net,
                    active_low,
                    domain,
                });
            }
            "input" => {
                let port = ident(line, it.next(), "port name")?;
                if it.next() != Some("-domain") {
                    return Err(syntax(line, "expected -domain"));
                }
                let domain = ident(line, it.next(), "domain")?;
                cs.inputs.push((port, domain));
            }
            "domain" => {
                let d = ident(line, it.next(), "domain")?;
                cs.domains.insert(d);
            }
            "static" => {
                let net = ident(line, it.next(), "net name")?;
                cs.static_signals.push(net);
            }
            "false_path" => {
                if it.next() != Some("-from") {
                    return Err(syntax(line, "expected -from"));
                }
                let from = ident(line, it.next(), "source net")?;
                if it.next() != Some("-to") {
                    return Err(syntax(line, "expected -to"));
                }
                let to = ident(line, it.next(), "destination net")?;
                cs.false_paths.push(FalsePath { from, to });
            }
            "sync_cells" => {
                let m = ident(line, it.next(), "module name")?;
                cs.sync_cells.push(m);
            }
            "option" => {
                let key = ident(line, it.next(), "option key")?;
                let value = it.next().ok_or_else(|| syntax(line, "expected option value"))?;
                set_option(&mut cs.options, line, &key, value)?;
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
        if it.next().is_some() {
            return Err(syntax(line, "unexpected trailing words"));
        }
    }
    let known = cs.all_domains();
    for (r, line) in cs.resets.iter().zip(reset_lines) {
        if !known.contains(&r.domain) {
            return Err(ConstraintError::UnknownDomain {
                line,
                domain: r.domain.clone(),
            });
        }
    }
    Ok(cs)
}

fn set_option(o: &mut Options, line: u32, key: &str, value: &str) -> Result<(), ConstraintError> {
    let num = || {
        value
            .parse::<u64>()
            .map_err(|_| syntax(line, format!("option `{key}` expects an integer")))
    };
    let sev = || {
        Severity::parse(value)
            .ok_or_else(|| syntax(line, "severity must be error, warning or info"))
    };
    match key {
        "ndff_min_depth" => {
            let v = num()?;
            if !(1..=16).contains(&v) {
                return Err(syntax(line, "ndff_min_depth must be between 1 and 16"));
            }
            o.ndff_min_depth = v as u32;
        }
        "stability_cycles" => {
            let v = num()?;
            if !(1..=64).contains(&v) {
                return Err(syntax(line, "stability_cycles must be between 1 and 64"));
            }
            o.stability_cycles = v as u32;
        }
        "setup_window" => o.setup_window = num()?,
        "hold_window" => o.hold_window = num()?,
        "data_on_clock_pin" => o.data_on_clock_pin = sev()?,
        k => match k.strip_prefix("severity.").and_then(Rule::parse) {
            Some(rule) => {
                o.severity.insert(rule, sev()?);
            }
            None => {
                return Err(ConstraintError::UnknownOption {
                    line,
                    key: k.to_string(),
                })
            }
        },
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_directive() {
        let cs = parse_constraints("clock clk_a -period 10 -domain A\n").unwrap();
        assert_eq!(
            cs.clocks,
            vec![ClockSpec {
                name: "clk_a".into(),
                period: 10,
                phase: 0,
                domain: "A".into()
            }]
        );
    }

    #[test]
    fn static_and_false_path() {
        let cs = parse_constraints("static cfg_mode\nfalse_path -from dbg_sig -to snoop_reg # dbg\n")
            .unwrap();
        assert_eq!(cs.static_signals, vec!["cfg_mode".to_string()]);
        assert_eq!(cs.false_paths.len(), 1);
        assert!(cs.is_false_path("dbg_sig", "snoop_reg"));
    }

    #[test]
    fn period_below_two() {
        assert_eq!(
            parse_constraints("clock c -period 1 -domain A"),
            Err(ConstraintError::BadPeriod { line: 1, period: 1 })
        );
    }

    #[test]
    fn duplicate_clock_and_unknown_option() {
        let dup = "clock c -period 4 -domain A\nclock c -period 6 -domain B\n";
        assert!(matches!(
            parse_constraints(dup),
            Err(ConstraintError::DuplicateClock { line: 2, .. })
        ));
        assert!(matches!(
            parse_constraints("option frobnicate 3"),
            Err(ConstraintError::UnknownOption { line: 1, .. })
        ));
    }

    #[test]
    fn reset_domain_must_exist() {
        assert!(matches!(
            parse_constraints("reset rst_n -active_low -domain Z\n"),
            Err(ConstraintError::UnknownDomain { line: 1, .. })
        ));
        let ok = "domain Z\nreset rst_n -active_low -domain Z\n";
        assert!(parse_constraints(ok).is_ok());
    }

    #[test]
    fn options_and_severity_override() {
        let cs = parse_constraints(
            "option stability_cycles 3\noption severity.MISSING_SYNC warning\n",
        )
        .unwrap();
        assert_eq!(cs.options.stability_cycles, 3);
        assert_eq!(cs.options.severity_of(Rule::MissingSync), Severity::Warning);
    }

    #[test]
    fn unknown_directive_is_error() {
        assert!(matches!(
            parse_constraints("\n\nset_input_delay 3"),
            Err(ConstraintError::Syntax { line: 3, .. })
        ));
    }
}
