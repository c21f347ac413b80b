// SPDX-License-Identifier: Apache-2.0

use cdcv_core::analysis::{analyze_sources, Analysis};
use cdcv_core::checks::Rule;
use cdcv_core::sync::{PairStatus, SyncKind};

const CLOCKS: &str = "clock clk_a -period 10 -domain A\nclock clk_b -period 7 -domain B\n";

fn run(rtl: &str, extra: &str) -> Analysis {
    analyze_sources(&[("t.v", rtl)], &format!("{CLOCKS}{extra}"), None).unwrap()
}

fn rules(a: &Analysis) -> Vec<Rule> {
    a.findings.iter().map(|f| f.rule).collect()
}

fn status_of<'a>(a: &'a Analysis, dst: &str) -> &'a PairStatus {
    let p = a.pairs.iter().find(|p| p.dst_name == dst).expect("pair");
    &a.status[&p.id]
}

#[test]
fn two_flop_synchronizer() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, output q);
         reg src, s1, s2;
         always @(posedge clk_a) src <= d;
         always @(posedge clk_b) s1 <= src;
         always @(posedge clk_b) s2 <= s1;
         assign q = s2;
         endmodule",
        "",
    );
    assert_eq!(a.syncs.len(), 1);
    assert_eq!(a.syncs[0].kind, SyncKind::Ndff { depth: 2 });
    assert_eq!(a.syncs[0].id, "S1");
    assert!(matches!(status_of(&a, "s1"), PairStatus::Synchronized { .. }));
    assert!(a.findings.is_empty(), "{:?}", a.findings);
}

#[test]
fn three_stage_chain_is_one_synchronizer() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, output q);
         reg src, s1, s2, s3;
         always @(posedge clk_a) src <= d;
         always @(posedge clk_b) s1 <= src;
         always @(posedge clk_b) s2 <= s1;
         always @(posedge clk_b) s3 <= s2;
         assign q = s3;
         endmodule",
        "",
    );
    assert_eq!(a.syncs.len(), 1);
    assert_eq!(a.syncs[0].kind, SyncKind::Ndff { depth: 3 });
}

#[test]
fn tapped_first_stage_is_not_a_synchronizer() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, output q, output t);
         reg src, s1, s2;
         always @(posedge clk_a) src <= d;
         always @(posedge clk_b) s1 <= src;
         always @(posedge clk_b) s2 <= s1;
         assign q = s2;
         assign t = s1;
         endmodule",
        "",
    );
    assert!(a.syncs.is_empty());
    assert_eq!(status_of(&a, "s1"), &PairStatus::Unsynchronized);
    assert_eq!(rules(&a), vec![Rule::MissingSync]);
}

#[test]
fn single_stage_is_too_short() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, output q);
         reg src, s1;
         always @(posedge clk_a) src <= d;
         always @(posedge clk_b) s1 <= src;
         assign q = s1;
         endmodule",
        "",
    );
    assert!(a.syncs.is_empty());
    assert_eq!(rules(&a), vec![Rule::MissingSync]);
}

#[test]
fn comb_logic_before_chain_head() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, input e, output q);
         reg x, y, s1, s2;
         always @(posedge clk_a) x <= d;
         always @(posedge clk_a) y <= e;
         always @(posedge clk_b) s1 <= x ^ y;
         always @(posedge clk_b) s2 <= s1;
         assign q = s2;
         endmodule",
        "",
    );
    assert_eq!(rules(&a), vec![Rule::CombOnCdc, Rule::CombOnCdc]);
    assert!(a.syncs[0].protected.len() == 2);
}

#[test]
fn inverter_on_path_is_allowed() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, output q);
         reg x, s1, s2;
         always @(posedge clk_a) x <= d;
         always @(posedge clk_b) s1 <= ~x;
         always @(posedge clk_b) s2 <= s1;
         assign q = s2;
         endmodule",
        "",
    );
    assert!(a.findings.is_empty(), "{:?}", a.findings);
}

const PULSE: &str = "module top(input clk_a, input clk_b, input p, output q);
     reg t, s1, s2, s3;
     always @(posedge clk_a) t <= t ^ p;
     always @(posedge clk_b) s1 <= t;
     always @(posedge clk_b) s2 <= s1;
     always @(posedge clk_b) s3 <= s2;
     assign q = s2 ^ s3;
     endmodule";

#[test]
fn toggle_pulse_synchronizer() {
    let a = run(PULSE, "input p -domain A\n");
    assert_eq!(a.syncs.len(), 1);
    assert!(matches!(a.syncs[0].kind, SyncKind::PulseToggle { ndff_depth: 2, .. }), "{:?}", a.syncs[0].kind);
    assert!(a.findings.is_empty(), "{:?}", a.findings);
}

#[test]
fn mux_enable_synchronizer() {
    let a = run(
        "module top(input clk_a, input clk_b, input [3:0] d, input v, output [3:0] q);
         reg [3:0] data; reg sel, s1, s2; reg [3:0] cap;
         always @(posedge clk_a) data <= d;
         always @(posedge clk_a) sel <= v;
         always @(posedge clk_b) s1 <= sel;
         always @(posedge clk_b) s2 <= s1;
         always @(posedge clk_b) cap <= s2 ? data : cap;
         assign q = cap;
         endmodule",
        "",
    );
    assert_eq!(a.syncs.len(), 1);
    assert!(matches!(a.syncs[0].kind, SyncKind::MuxEnable { .. }), "{:?}", a.syncs[0].kind);
    assert!(a.findings.is_empty(), "{:?}", a.findings);
}

#[test]
fn two_synchronizers_of_one_source_diverge() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, output q, output r);
         reg x, s1, s2, t1, t2;
         always @(posedge clk_a) x <= d;
         always @(posedge clk_b) s1 <= x;
         always @(posedge clk_b) s2 <= s1;
         always @(posedge clk_b) t1 <= x;
         always @(posedge clk_b) t2 <= t1;
         assign q = s2;
         assign r = t2;
         endmodule",
        "",
    );
    assert_eq!(a.syncs.len(), 2);
    assert_eq!(rules(&a), vec![Rule::Divergence]);
}

#[test]
fn synchronized_signals_reconverge() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, input e, output q);
         reg x, y, s1, s2, t1, t2, both;
         always @(posedge clk_a) x <= d;
         always @(posedge clk_a) y <= e;
         always @(posedge clk_b) s1 <= x;
         always @(posedge clk_b) s2 <= s1;
         always @(posedge clk_b) t1 <= y;
         always @(posedge clk_b) t2 <= t1;
         always @(posedge clk_b) both <= s2 & t2;
         assign q = both;
         endmodule",
        "",
    );
    assert_eq!(rules(&a), vec![Rule::Convergence]);
}

#[test]
fn false_path_removes_the_finding() {
    let rtl = "module top(input clk_a, input clk_b, input d, output q);
         reg dbg, snoop;
         always @(posedge clk_a) dbg <= d;
         always @(posedge clk_b) snoop <= dbg;
         assign q = snoop;
         endmodule";
    assert_eq!(rules(&run(rtl, "")), vec![Rule::MissingSync]);
    let a = run(rtl, "false_path -from dbg -to snoop\n");
    assert!(a.findings.is_empty());
    assert_eq!(a.pairs.len(), 1);
}

const RESETS: &str = "reset rst_a_n -active_low -domain A\nreset rst_b_n -active_low -domain B\n";

#[test]
fn reset_from_foreign_domain_without_synchronizer() {
    let a = run(
        "module top(input clk_a, input clk_b, input rst_a_n, input d, output q);
         reg f;
         always @(posedge clk_b or negedge rst_a_n) if (!rst_a_n) f <= 1'b0; else f <= d;
         assign q = f;
         endmodule",
        RESETS,
    );
    assert_eq!(rules(&a), vec![Rule::MissingRdcSync]);
}

#[test]
fn reset_synchronizer_clears_rdc() {
    let a = run(
        "module top(input clk_a, input clk_b, input rst_a_n, input d, output q);
         reg r1, r2, f;
         always @(posedge clk_b or negedge rst_a_n) if (!rst_a_n) r1 <= 1'b0; else r1 <= 1'b1;
         always @(posedge clk_b or negedge rst_a_n) if (!rst_a_n) r2 <= 1'b0; else r2 <= r1;
         always @(posedge clk_b or negedge r2) if (!r2) f <= 1'b0; else f <= d;
         assign q = f;
         endmodule",
        RESETS,
    );
    assert_eq!(a.reset_syncs.len(), 1);
    assert!(a.findings.is_empty(), "{:?}", a.findings);
}

#[test]
fn gated_clock_with_unregistered_enable() {
    let rtl = |en: &str| {
        format!(
            "module top(input clk_a, input clk_b, input d, input e, output q);
             reg e1, e2, f; wire gclk;
             always @(posedge clk_a) e1 <= e;
             always @(posedge clk_a) e2 <= d;
             assign gclk = clk_a & {en};
             always @(posedge gclk) f <= d;
             assign q = f;
             endmodule"
        )
    };
    assert_eq!(rules(&run(&rtl("(e1 & e2)"), "")), vec![Rule::GatedClockGlitch]);
    assert!(run(&rtl("e1"), "").findings.is_empty());
}

#[test]
fn black_box_outputs_are_reported() {
    let a = run(
        "module ip(input i, output o); endmodule
         module top(input clk_a, input clk_b, input d, output q);
         wire w; reg f;
         ip u_ip(.i(d), .o(w));
         always @(posedge clk_a) f <= w;
         assign q = f;
         endmodule",
        "",
    );
    assert_eq!(rules(&a), vec![Rule::BlackboxBoundary]);
    assert_eq!(a.unclocked.len(), 1);
}

#[test]
fn witnesses_resolve_in_the_netlist() {
    let a = run(
        "module top(input clk_a, input clk_b, input d, input e, output q);
         reg x, y, s1, s2;
         always @(posedge clk_a) x <= d;
         always @(posedge clk_a) y <= e;
         always @(posedge clk_b) s1 <= x ^ y;
         always @(posedge clk_b) s2 <= s1;
         assign q = s2;
         endmodule",
        "",
    );
    for f in &a.findings {
        assert!(cdcv_core::checks::witness_resolves(&a.netlist, f), "{f:?}");
    }
}
