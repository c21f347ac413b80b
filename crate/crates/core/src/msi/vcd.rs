// SPDX-License-Identifier: Apache-2.0

//! Value change dump output.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::engine::SimTrace;
use crate::frontend::ClockSpec;

fn ident(mut i: usize) -> String {
    let mut s = String::new();
    loop {
        s.push((b'!' + (i % 94) as u8) as char);
        i /= 94;
        if i == 0 {
            return s;
        }
    }
}

fn value(width: u32, v: u64, id: &str) -> String {
    if width == 1 {
        format!("{}{id}\n", v & 1)
    } else {
        format!("b{:b} {id}\n", v)
    }
}

/// Dumps the recorded waves of `trace` plus the clocks. Net names are
/// flattened with `.` kept as part of the identifier.
pub fn write_vcd(trace: &SimTrace, clocks: &[ClockSpec], top: &str) -> String {
    let mut out = String::new();
    out.push_str("$timescale 1ns $end\n");
    let _ = writeln!(out, "$scope module {top} $end");
    let mut ids = BTreeMap::new();
    let mut n = 0;
    for c in clocks {
        let id = ident(n);
        n += 1;
        let _ = writeln!(out, "$var wire 1 {id} {} $end", c.name);
        ids.insert(c.name.clone(), id);
    }
    for (name, w) in &trace.waves {
        if ids.contains_key(name) {
            continue;
        }
        let id = ident(n);
        n += 1;
        let _ = writeln!(out, "$var wire {} {id} {} $end", w.width, name.replace(' ', "_"));
        ids.insert(name.clone(), id);
    }
    out.push_str("$upscope $end\n$enddefinitions $end\n");

    // tick -> changes
    let mut events: BTreeMap<u64, Vec<String>> = BTreeMap::new();
    for c in clocks {
        let id = &ids[&c.name];
        let mut t = c.phase;
        while t <= trace.end_tick {
            events.entry(t).or_default().push(value(1, 1, id));
            let fall = t + c.period / 2;
            if fall <= trace.end_tick {
                events.entry(fall).or_default().push(value(1, 0, id));
            }
            t += c.period;
        }
    }
    let mut init = String::from("$dumpvars\n");
    for c in clocks {
        init.push_str(&value(1, 0, &ids[&c.name]));
    }
    for (name, w) in &trace.waves {
        if clocks.iter().any(|c| &c.name == name) {
            continue;
        }
        let id = &ids[name];
        init.push_str(&value(w.width, w.init, id));
        for (t, v) in &w.changes {
            events.entry(*t).or_default().push(value(w.width, *v, id));
        }
    }
    init.push_str("$end\n");
    out.push_str("#0\n");
    out.push_str(&init);
    for (t, lines) in events {
        if t > 0 {
            let _ = writeln!(out, "#{t}");
        }
        for l in lines {
            out.push_str(&l);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_are_unique() {
        let ids: std::collections::BTreeSet<String> = (0..10_000).map(ident).collect();
        assert_eq!(ids.len(), 10_000);
    }
}
