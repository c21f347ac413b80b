// SPDX-License-Identifier: Apache-2.0

//! Clock-domain assignment for flops and nets.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::checks::Severity;
use crate::frontend::ConstraintSet;
use crate::netlist::cone::{ConeCache, ConeSource};
use crate::netlist::{CellId, NetId, Netlist, StructuralError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", content = "domains", rename_all = "lowercase")]
pub enum NetDomain {
    Single(String),
    Mixed(BTreeSet<String>),
    Constant,
    Unclocked,
}

impl NetDomain {
    pub fn single(&self) -> Option<&str> {
        match self {
            NetDomain::Single(d) => Some(d),
            _ => None,
        }
    }
}

/// Something the structural rules need to know about a clock cone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "note")]
pub enum DomainNote {
    /// The flop's clock passes through gates.
    ClockGate { flop: CellId, gates: Vec<CellId> },
    /// A flop output reaches the clock pin of another flop.
    DataOnClockPin { flop: CellId, source: CellId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum DomainError {
    #[error("flop `{flop}`: clock cone reaches `{port}`, which is not a declared clock")]
    UndeclaredClock { flop: String, port: String },
    #[error("flop `{flop}`: clock cone has several clock roots {roots:?}")]
    MultipleClockRoots { flop: String, roots: Vec<String> },
    #[error("flop `{flop}`: clock cone reaches no declared clock")]
    NoClockRoot { flop: String },
    #[error("flop `{flop}`: clock driven by flop output `{source_flop}`")]
    DataOnClockPin { flop: String, source_flop: String },
    #[error("constraint names clock `{name}`, which is not an input port")]
    UnknownClockPort { name: String },
    #[error(transparent)]
    Structural(#[from] StructuralError),
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainMap {
    pub flop_domain: BTreeMap<CellId, String>,
    /// Clock port at the root of each flop's clock cone.
    pub flop_clock_root: BTreeMap<CellId, String>,
    pub net_domain: Vec<NetDomain>,
    pub clock_nets: BTreeMap<String, BTreeSet<NetId>>,
    pub notes: Vec<DomainNote>,
}

impl DomainMap {
    pub fn net(&self, net: NetId) -> &NetDomain {
        &self.net_domain[net.index()]
    }

    pub fn flop(&self, cell: CellId) -> &str {
        &self.flop_domain[&cell]
    }
}

/// Domain of a cone source: flops by their clock, ports by declaration.
pub fn source_domain(
    nl: &Netlist,
    cs: &ConstraintSet,
    flop_domain: &BTreeMap<CellId, String>,
    src: ConeSource,
) -> Option<String> {
    match src {
        ConeSource::Dff(c) => flop_domain.get(&c).cloned(),
        ConeSource::Port(p) => {
            let name = &nl.ports[p].name;
            cs.clock(name)
                .map(|c| c.domain.clone())
                .or_else(|| cs.input_domain(name).map(str::to_string))
        }
        ConeSource::Blackbox(_) => None,
    }
}

pub fn assign_domains(nl: &Netlist, cs: &ConstraintSet) -> Result<DomainMap, DomainError> {
    for c in &cs.clocks {
        if nl.port(&c.name).is_none() {
            return Err(DomainError::UnknownClockPort { name: c.name.clone() });
        }
    }
    let mut cache = ConeCache::new();
    let mut flop_domain = BTreeMap::new();
    let mut flop_clock_root = BTreeMap::new();
    let mut clock_nets: BTreeMap<String, BTreeSet<NetId>> = BTreeMap::new();
    let mut notes = Vec::new();
    for (id, d) in nl.dffs() {
        let fname = nl.cell_name(id).to_string();
        let cone = cache.cone(nl, d.clock)?;
        let mut roots = BTreeSet::new();
        for src in &cone.sequential_sources {
            match *src {
                ConeSource::Port(p) => {
                    let pname = &nl.ports[p].name;
                    if cs.clock(pname).is_none() {
                        return Err(DomainError::UndeclaredClock {
                            flop: fname,
                            port: pname.clone(),
                        });
                    }
                    roots.insert(pname.clone());
                }
                ConeSource::Dff(s) => {
                    if cs.options.data_on_clock_pin == Severity::Error {
                        return Err(DomainError::DataOnClockPin {
                            flop: fname,
                            source_flop: nl.cell_name(s).to_string(),
                        });
                    }
                    notes.push(DomainNote::DataOnClockPin { flop: id, source: s });
                }
                ConeSource::Blackbox(b) => {
                    return Err(DomainError::UndeclaredClock {
                        flop: fname,
                        port: nl.blackboxes[b].path.clone(),
                    })
                }
            }
        }
        let root = match roots.len() {
            0 => return Err(DomainError::NoClockRoot { flop: fname }),
            1 => roots.into_iter().next().unwrap(),
            _ => {
                return Err(DomainError::MultipleClockRoots {
                    flop: fname,
                    roots: roots.into_iter().collect(),
                })
            }
        };
        if !cone.comb_cells.is_empty() {
            notes.push(DomainNote::ClockGate {
                flop: id,
                gates: cone.comb_cells.iter().copied().collect(),
            });
        }
        let domain = cs.clock(&root).expect("root is a declared clock").domain.clone();
        let nets = clock_nets.entry(domain.clone()).or_default();
        nets.insert(d.clock);
        nets.insert(nl.port(&root).expect("root is a port").net);
        flop_domain.insert(id, domain);
        flop_clock_root.insert(id, root);
    }

    let mut net_domain = Vec::with_capacity(nl.nets.len());
    for net in nl.net_ids() {
        let cone = cache.cone(nl, net)?;
        let mut doms = BTreeSet::new();
        let mut unclocked = false;
        for src in &cone.sequential_sources {
            match source_domain(nl, cs, &flop_domain, *src) {
                Some(d) => {
                    doms.insert(d);
                }
                None => unclocked = true,
            }
        }
        net_domain.push(match doms.len() {
            0 if unclocked => NetDomain::Unclocked,
            0 => NetDomain::Constant,
            1 => NetDomain::Single(doms.into_iter().next().unwrap()),
            _ => NetDomain::Mixed(doms),
        });
    }
    Ok(DomainMap {
        flop_domain,
        flop_clock_root,
        net_domain,
        clock_nets,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elaborate::elaborate;
    use crate::frontend::{parse_constraints, parse_verilog};

    fn setup(rtl: &str, cons: &str) -> (Netlist, Result<DomainMap, DomainError>) {
        let ms = parse_verilog(rtl, "t.v").unwrap();
        let nl = elaborate(&ms, &ms.last().unwrap().name).unwrap();
        let cs = parse_constraints(cons).unwrap();
        let dm = assign_domains(&nl, &cs);
        (nl, dm)
    }

    #[test]
    fn single_flop_gets_its_clock_domain() {
        let (nl, dm) = setup(
            "module m(input clk_a, input d, output reg q); always @(posedge clk_a) q <= d; endmodule",
            "clock clk_a -period 10 -domain A\n",
        );
        let dm = dm.unwrap();
        assert_eq!(dm.flop(nl.find_cell("q").unwrap()), "A");
        assert_eq!(dm.net(nl.find_net("d").unwrap()), &NetDomain::Unclocked);
        assert_eq!(dm.net(nl.find_net("q").unwrap()), &NetDomain::Single("A".into()));
    }

    #[test]
    fn gated_clock_keeps_root_domain() {
        let (nl, dm) = setup(
            "module m(input clk_a, input d, input e, output reg q);
             reg en; wire gclk;
             always @(posedge clk_a) en <= e;
             assign gclk = clk_a & en;
             always @(posedge gclk) q <= d;
             endmodule",
            "clock clk_a -period 10 -domain A\n",
        );
        let dm = dm.unwrap();
        let q = nl.find_cell("q").unwrap();
        assert_eq!(dm.flop(q), "A");
        assert!(dm
            .notes
            .iter()
            .any(|n| matches!(n, DomainNote::ClockGate { flop, .. } if *flop == q)));
        assert!(dm
            .notes
            .iter()
            .any(|n| matches!(n, DomainNote::DataOnClockPin { flop, .. } if *flop == q)));
    }

    #[test]
    fn undeclared_clock() {
        let (_, dm) = setup(
            "module m(input clk_a, input d, output reg q); always @(posedge clk_a) q <= d; endmodule",
            "",
        );
        assert!(matches!(dm, Err(DomainError::UndeclaredClock { .. })));
    }

    #[test]
    fn mixed_and_constant_nets() {
        let (nl, dm) = setup(
            "module m(input ca, input cb, input d, output y, output k);
             reg a, b;
             always @(posedge ca) a <= d;
             always @(posedge cb) b <= d;
             assign y = a ^ b;
             assign k = 1'b1;
             endmodule",
            "clock ca -period 10 -domain A\nclock cb -period 7 -domain B\n",
        );
        let dm = dm.unwrap();
        assert!(matches!(dm.net(nl.find_net("y").unwrap()), NetDomain::Mixed(s) if s.len() == 2));
        assert_eq!(dm.net(nl.find_net("k").unwrap()), &NetDomain::Constant);
    }
}
