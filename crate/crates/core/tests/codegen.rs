// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use cdcv_core::analysis::{analyze_sources, Analysis};
use cdcv_core::codegen::interp::interpret;
use cdcv_core::codegen::lint::lint;
use cdcv_core::codegen::{generate_all, property_name, GeneratedFile};
use cdcv_core::msi::{parse_stimulus, simulate, MsiConfig};

fn analysis(rtl: &str, cons: &str) -> Analysis {
    analyze_sources(&[("t.v", rtl)], cons, None).unwrap()
}

const CLOCKS: &str = "clock clk_a -period 10 -domain A\nclock clk_b -period 7 -phase 3 -domain B\n";

const PULSE: &str = "module top(input clk_a, input clk_b, input p, output q);
     reg t, s1, s2, s3;
     always @(posedge clk_a) t <= t ^ p;
     always @(posedge clk_b) s1 <= t;
     always @(posedge clk_b) s2 <= s1;
     always @(posedge clk_b) s3 <= s2;
     assign q = s2 ^ s3;
     endmodule";

const MUX: &str = "module top(input clk_a, input clk_b, input [3:0] d, input v, output [3:0] q);
     reg [3:0] data; reg sel, s1, s2; reg [3:0] cap;
     always @(posedge clk_a) data <= d;
     always @(posedge clk_a) sel <= v;
     always @(posedge clk_b) s1 <= sel;
     always @(posedge clk_b) s2 <= s1;
     always @(posedge clk_b) cap <= s2 ? data : cap;
     assign q = cap;
     endmodule";

const BUS: &str = "module top(input clk_a, input clk_b, input rst_n, input [1:0] d, input m, output [1:0] q);
     reg [1:0] src, s1, s2; reg mode, mb;
     always @(posedge clk_a or negedge rst_n) if (!rst_n) src <= 2'b00; else src <= d;
     always @(posedge clk_a) mode <= m;
     always @(posedge clk_b) s1 <= src;
     always @(posedge clk_b) s2 <= s1;
     always @(posedge clk_b) mb <= mode;
     assign q = s2;
     endmodule";

const GATE: &str = "module top(input clk_a, input clk_b, input d, input e, output q);
     reg eb, f; wire gclk;
     always @(posedge clk_b) eb <= e;
     assign gclk = clk_a & eb;
     always @(posedge gclk) f <= d;
     assign q = f;
     endmodule";

fn designs() -> Vec<(&'static str, Analysis, &'static str)> {
    vec![
        ("pulse", analysis(PULSE, &format!("{CLOCKS}input p -domain A\n")), "random -ports p -p 1/3 -seed 9\n"),
        ("mux", analysis(MUX, &format!("{CLOCKS}input d -domain A\ninput v -domain A\n")), "random -ports d v -p 1/4 -seed 9\n"),
        (
            "bus",
            analysis(
                BUS,
                &format!("{CLOCKS}reset rst_n -active_low -domain A\ninput d -domain A\ninput m -domain A\nstatic mode\noption stability_cycles 2\n"),
            ),
            "at clk_a 3 set rst_n 1\nrandom -ports d -p 1/5 -seed 9\nat clk_a 30 set m 1\n",
        ),
        ("gate", analysis(GATE, &format!("{CLOCKS}input e -domain B\ninput d -domain A\n")), "random -ports e -p 1/3 -seed 9\n"),
    ]
}

fn generated(a: &Analysis) -> Vec<GeneratedFile> {
    let files = generate_all(a).unwrap();
    let issues = lint(&files, &a.netlist);
    assert!(issues.is_empty(), "{issues:#?}");
    files
}

#[test]
fn generated_trees_lint_clean() {
    for (name, a, _) in designs() {
        let files = generated(&a);
        assert!(files.iter().any(|f| f.path == "bind_all.sv"), "{name}");
        assert_eq!(
            files.iter().any(|f| f.path == "coverage/cdc_cov.sv"),
            a.unsuppressed().next().is_some(),
            "{name}"
        );
    }
}

#[test]
fn file_layout() {
    let paths = |a: &Analysis| generated(a).into_iter().map(|f| f.path).collect::<Vec<_>>();
    let d = designs();
    assert_eq!(paths(&d[0].1), ["bind_all.sv", "checks/pulse_sync_check/s1.sv", "coverage/cdc_cov.sv"]);
    assert_eq!(
        paths(&d[2].1),
        [
            "bind_all.sv",
            "checks/ndff_sync_check/s1.sv",
            "checks/signal_config_check/signal_config.sv",
            "coverage/cdc_cov.sv"
        ]
    );
    assert_eq!(paths(&d[3].1), ["bind_all.sv", "checks/clock_gate_check/and_0.sv"]);
}

#[test]
fn design_without_crossings_generates_nothing() {
    let a = analysis(
        "module top(input clk_a, input d, output q); reg f; always @(posedge clk_a) f <= d; assign q = f; endmodule",
        "clock clk_a -period 10 -domain A\n",
    );
    assert!(generate_all(&a).unwrap().is_empty());
}

#[test]
fn one_covergroup_with_four_bins_per_pair() {
    let (_, a, _) = designs().swap_remove(1);
    let cov = generated(&a).into_iter().find(|f| f.path == "coverage/cdc_cov.sv").unwrap();
    let n = a.unsuppressed().count();
    assert_eq!(cov.content.matches("covergroup ").count(), n);
    for bin in ["setup_to_0", "setup_to_1", "hold_to_0", "hold_to_1"] {
        assert_eq!(cov.content.matches(bin).count(), n);
    }
}

#[test]
fn lint_rejects_broken_output() {
    let (_, a, _) = designs().swap_remove(0);
    let files = generated(&a);
    let tamper = |from: &str, to: &str| {
        let mut fs = files.clone();
        for f in &mut fs {
            f.content = f.content.replacen(from, to, 1);
        }
        lint(&fs, &a.netlist)
    };
    assert!(!tamper("endproperty", "").is_empty());
    assert!(!tamper("$past", "$fell").is_empty());
    assert!(!tamper(".p(p)", ".p(nope)").is_empty());
    assert!(!tamper("// -- generated-by", "//").is_empty());
}

/// The interpreted assertions fail at exactly the ticks where the
/// simulator's checkers fail.
#[test]
fn interpreted_assertions_agree_with_runtime_checkers() {
    let mut failures = 0;
    for (name, a, stim_text) in designs() {
        let files = generated(&a);
        let stim = parse_stimulus(&format!("{stim_text}run 80 of clk_a\n")).unwrap();
        for seed in 1..=10 {
            let (trace, _) = simulate(&a, &stim, &MsiConfig::random(seed, &a.constraints.options), true).unwrap();
            let interp: BTreeMap<String, Option<u64>> = interpret(&files, &a.constraints, &trace)
                .unwrap()
                .into_iter()
                .map(|v| (v.property, v.failure))
                .collect();
            for v in &trace.verdicts {
                let Some(got) = interp.get(&property_name(&v.checker)) else {
                    assert!(v.passed(), "{name}: {} has no assertion but failed", v.checker);
                    continue;
                };
                assert_eq!(*got, v.failure.as_ref().map(|f| f.tick), "{name} seed {seed}: {}", v.checker);
                failures += usize::from(got.is_some());
            }
        }
    }
    assert!(failures > 0, "the comparison needs failing checkers");
}

