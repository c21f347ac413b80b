// SPDX-License-Identifier: Apache-2.0

//! Helpers shared by test targets; each target uses a subset.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random single-bit design: inputs and flops are cone sources, wires
/// are combinational and only read earlier wires.
#[derive(Debug)]
pub struct RandomDesign {
    pub clocks: usize,
    pub inputs: Vec<usize>,
    pub flops: Vec<(usize, Term)>,
    pub wires: Vec<Term>,
}

#[derive(Debug, Clone)]
pub enum Sig {
    Input(usize),
    Flop(usize),
    Wire(usize),
}

#[derive(Debug, Clone)]
pub enum Term {
    Leaf(Sig),
    Not(Sig),
    Bin(&'static str, Sig, Sig),
}

impl RandomDesign {
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clocks = rng.gen_range(1..=3);
        let inputs: Vec<usize> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..clocks)).collect();
        let n_flops = rng.gen_range(2..=20);
        let n_wires = rng.gen_range(0..=20);
        let pick = |rng: &mut ChaCha8Rng, wires_before: usize| -> Sig {
            let k = rng.gen_range(0..3);
            if k == 2 && wires_before > 0 {
                Sig::Wire(rng.gen_range(0..wires_before))
            } else if k == 1 {
                Sig::Input(rng.gen_range(0..inputs.len()))
            } else {
                Sig::Flop(rng.gen_range(0..n_flops))
            }
        };
        let term = |rng: &mut ChaCha8Rng, wires_before: usize| -> Term {
            let a = pick(rng, wires_before);
            match rng.gen_range(0..4) {
                0 => Term::Leaf(a),
                1 => Term::Not(a),
                _ => Term::Bin(["&", "|", "^"][rng.gen_range(0..3)], a, pick(rng, wires_before)),
            }
        };
        let wires: Vec<Term> = (0..n_wires).map(|i| term(&mut rng, i)).collect();
        let flops = (0..n_flops)
            .map(|_| (rng.gen_range(0..clocks), term(&mut rng, n_wires)))
            .collect();
        RandomDesign {
            clocks,
            inputs,
            flops,
            wires,
        }
    }

    fn name(s: &Sig) -> String {
        match s {
            Sig::Input(i) => format!("in{i}"),
            Sig::Flop(i) => format!("f{i}"),
            Sig::Wire(i) => format!("w{i}"),
        }
    }

    fn expr(t: &Term) -> String {
        match t {
            Term::Leaf(a) => Self::name(a),
            Term::Not(a) => format!("~{}", Self::name(a)),
            Term::Bin(op, a, b) => format!("{} {op} {}", Self::name(a), Self::name(b)),
        }
    }

    pub fn verilog(&self) -> String {
        let mut ports: Vec<String> = (0..self.clocks).map(|c| format!("input clk{c}")).collect();
        ports.extend((0..self.inputs.len()).map(|i| format!("input in{i}")));
        ports.push("output q".into());
        let mut s = format!("module top({});\n", ports.join(", "));
        for i in 0..self.flops.len() {
            let _ = writeln!(s, "  reg f{i};");
        }
        for (i, t) in self.wires.iter().enumerate() {
            let _ = writeln!(s, "  wire w{i};\n  assign w{i} = {};", Self::expr(t));
        }
        for (i, (c, t)) in self.flops.iter().enumerate() {
            let _ = writeln!(s, "  always @(posedge clk{c}) f{i} <= {};", Self::expr(t));
        }
        s + "  assign q = f0;\nendmodule\n"
    }

    pub fn constraints(&self) -> String {
        let mut s = String::new();
        for c in 0..self.clocks {
            let _ = writeln!(s, "clock clk{c} -period {} -domain D{c}", 10 + 3 * c);
        }
        for (i, d) in self.inputs.iter().enumerate() {
            let _ = writeln!(s, "input in{i} -domain D{d}");
        }
        s
    }

    /// Cone sources of a term, expanding wires.
    fn leaves(&self, t: &Term, out: &mut BTreeSet<(String, usize)>) {
        let add = |s: &Sig, out: &mut BTreeSet<(String, usize)>| match s {
            Sig::Input(i) => {
                out.insert((Self::name(s), self.inputs[*i]));
            }
            Sig::Flop(i) => {
                out.insert((Self::name(s), self.flops[*i].0));
            }
            Sig::Wire(i) => self.leaves(&self.wires[*i], out),
        };
        match t {
            Term::Leaf(a) | Term::Not(a) => add(a, out),
            Term::Bin(_, a, b) => {
                add(a, out);
                add(b, out);
            }
        }
    }

    /// Brute-force crossings: every cone source whose domain differs from
    /// the capturing flop's.
    pub fn expected_pairs(&self) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        for (i, (c, t)) in self.flops.iter().enumerate() {
            let mut l = BTreeSet::new();
            self.leaves(t, &mut l);
            for (src, d) in l {
                if d != *c {
                    out.insert((src, format!("f{i}")));
                }
            }
        }
        out
    }

    pub fn cells_upper_bound(&self) -> usize {
        self.flops.len() + 2 * (self.flops.len() + self.wires.len())
    }
}

/// Text files under `dir` keyed by `/`-separated relative path; empty when
/// `dir` does not exist.
pub fn read_tree(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let Ok(entries) = fs::read_dir(&d) else { continue };
        for e in entries {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read_to_string(&p).unwrap());
            }
        }
    }
    out
}
