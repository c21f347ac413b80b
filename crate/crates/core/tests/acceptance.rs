// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cdcv_core::analysis::{analyze_sources, Analysis};
use cdcv_core::codegen::{generate_all, lint::lint};
use cdcv_core::corpus::{check_taxonomy, load_corpus, load_taxonomy, msi_failures, observe, run_corpus, CorpusCase};
use cdcv_core::coverage::{report, CoverageDb};
use cdcv_core::msi::{
    explore_exhaustive, reference_simulate, simulate, ExploreOutcome, MsiConfig, SimTrace, Simulator, Stimulus,
    ViolationKind,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::RandomDesign;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn corpus_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus() -> Vec<CorpusCase> {
    load_corpus(&corpus_root()).expect("corpus loads")
}

fn case(name: &str) -> CorpusCase {
    CorpusCase::load(&corpus_root().join(name)).expect("case loads")
}

/// Everything a case is flagged by: rules plus failing checkers in any mode.
fn flags(c: &CorpusCase) -> BTreeSet<String> {
    let o = observe(c).expect("observation");
    let mut f: BTreeSet<String> = o.findings.into_iter().collect();
    f.extend(o.reference_failures);
    f.extend(o.msi_failures);
    f.extend(o.explore_failures);
    f
}

fn intended(c: &CorpusCase) -> BTreeSet<String> {
    let l = &c.labels;
    let mut f: BTreeSet<String> = l.findings.clone().unwrap_or_default().into_iter().collect();
    f.extend(l.reference_failures.clone().unwrap_or_default());
    f.extend(l.msi.as_ref().map(|m| m.failures.clone()).unwrap_or_default());
    f.extend(l.explore.as_ref().map(|e| e.failures.clone()).unwrap_or_default());
    f
}

fn bug_taxonomy() -> Outcome {
    let start = Instant::now();
    let cases = corpus();
    let tax = load_taxonomy(&corpus_root()).expect("taxonomy");
    if let Err(e) = check_taxonomy(&tax, &cases) {
        return outcome(false, e.to_string());
    }
    let by_name: BTreeMap<&str, &CorpusCase> = cases.iter().map(|c| (c.name.as_str(), c)).collect();
    let mut problems = Vec::new();
    let mut rows = 0;
    for row in tax.rows.iter().filter(|r| !r.cases.is_empty()) {
        rows += 1;
        for name in &row.cases {
            let c = by_name[name.as_str()];
            let (want, got) = (intended(c), flags(c));
            if want.is_empty() || want != got {
                problems.push(format!("{name}: intended {want:?}, flagged {got:?}"));
            }
            let twin = by_name[c.labels.twin.as_deref().expect("twin")];
            let tf = flags(twin);
            if !tf.is_empty() {
                problems.push(format!("{}: twin flagged {tf:?}", twin.name));
            }
        }
    }
    let matrix = run_corpus(&corpus_root(), None).expect("corpus runs");
    problems.extend(matrix.failures().map(|r| format!("{} {}: {}", r.case, r.expectation, r.actual)));
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        problems.push(format!("corpus took {secs:.1}s"));
    }
    outcome(
        rows == 10 && problems.is_empty(),
        format!("{rows} taxonomy rows, {} cases, {secs:.2}s; {}", cases.len(), problems.join("; ")),
    )
}

fn pair_oracle() -> Outcome {
    let mut mismatches = Vec::new();
    let mut designs = 0;
    let mut pairs = 0;
    for seed in 0..40u64 {
        let d = RandomDesign::generate(seed);
        assert!(d.cells_upper_bound() <= 100 && d.clocks <= 3);
        let a = match analyze_sources(&[("rand.v", d.verilog().as_str())], &d.constraints(), None) {
            Ok(a) => a,
            Err(e) => {
                mismatches.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let got: BTreeSet<(String, String)> = a.pairs.iter().map(|p| (p.src_name.clone(), p.dst_name.clone())).collect();
        let want = d.expected_pairs();
        designs += 1;
        pairs += want.len();
        if got != want || got.len() != a.pairs.len() {
            mismatches.push(format!("seed {seed}"));
        }
    }
    outcome(
        designs >= 25 && mismatches.is_empty(),
        format!("{designs} designs, {pairs} oracle pairs, {} mismatches {mismatches:?}", mismatches.len()),
    )
}

fn msi_off_equivalence() -> Outcome {
    let mut bad = Vec::new();
    let cases = corpus();
    for c in &cases {
        let a = c.analysis().expect("analysis");
        let stim = c.stimulus_parsed().expect("stimulus");
        let r = reference_simulate(&a, &stim).expect("reference");
        let (t, db) = simulate(&a, &stim, &MsiConfig::disabled(&a.constraints.options), true).expect("simulate");
        let same = r.waves == t.waves
            && r.verdicts == t.verdicts
            && r.edges == t.edges
            && r.end_tick == t.end_tick
            && t.msi_log.is_empty()
            && db.total_hits() == 0;
        if !same {
            bad.push(c.name.clone());
        }
    }
    outcome(bad.is_empty(), format!("{} cases, cycle-exact mismatches {bad:?}", cases.len()))
}

fn coverage_saturation() -> Outcome {
    let c = case("toggling_pair");
    let a = c.analysis().expect("analysis");
    let mut stim = c.stimulus_parsed().expect("stimulus");
    stim.run_edges = 500;
    stim.run_clock = "clk_b".into();
    let cfg = MsiConfig::random(42, &a.constraints.options);
    let run = || simulate(&a, &stim, &cfg, true).expect("simulate");
    let (t1, d1) = run();
    let (t2, d2) = run();
    let reproducible = t1 == t2 && d1.to_json() == d2.to_json();
    let clk = a.constraints.clocks.iter().find(|k| k.name == "clk_b").expect("clk_b");
    let mut seen = BTreeSet::new();
    let mut saturated_at = None;
    for ev in &t1.msi_log {
        seen.insert((ev.kind, ev.resolved));
        if seen.len() == 4 {
            saturated_at = Some((ev.tick - clk.phase) / clk.period + 1);
            break;
        }
    }
    let golden = std::fs::read_to_string(c.dir.join("golden/coverage_report_seed42.json")).unwrap_or_default();
    let rep = serde_json::to_string_pretty(&report(&d1, &a.pairs).expect("report")).expect("json") + "\n";
    let pass = reproducible && saturated_at.is_some_and(|n| n <= 500) && golden == rep;
    outcome(
        pass,
        format!(
            "bins {seen:?}, saturated after {saturated_at:?} destination edges, reproducible {reproducible}, golden match {}",
            golden == rep
        ),
    )
}

fn counterexample(a: &Analysis, stim: &Stimulus, checker: &str) -> Result<Option<SimTrace>, String> {
    let sim = Simulator::new(a, stim).map_err(|e| e.to_string())?;
    let r = explore_exhaustive(&sim, &MsiConfig::random(0, &a.constraints.options), 16).map_err(|e| e.to_string())?;
    match r.verdicts.get(checker) {
        Some(ExploreOutcome::Counterexample { trace, .. }) => Ok(Some((**trace).clone())),
        Some(ExploreOutcome::Proven) => Ok(None),
        None => Err(format!("no checker {checker}")),
    }
}

fn latency_property() -> Outcome {
    let id = "latency:src->s2";
    let tight = case("latency_msi");
    let loose = case("latency_msi_clean");
    let (a2, s2) = (tight.analysis().expect("analysis"), tight.stimulus_parsed().expect("stimulus"));
    let (a3, s3) = (loose.analysis().expect("analysis"), loose.stimulus_parsed().expect("stimulus"));
    let one_setup = match counterexample(&a2, &s2, id) {
        Ok(Some(t)) => t.msi_log.len() == 1 && t.msi_log[0].kind == ViolationKind::Setup,
        _ => false,
    };
    let proven = matches!(counterexample(&a3, &s3, id), Ok(None));
    let random_pass = (1..=100u64).all(|seed| {
        simulate(&a3, &s3, &MsiConfig::random(seed, &a3.constraints.options), false)
            .is_ok_and(|(t, _)| t.passed())
    });
    outcome(
        one_setup && proven && random_pass,
        format!("latency(2,2) single-setup counterexample {one_setup}; latency(2,3) proven {proven}, 100 seeds pass {random_pass}"),
    )
}

/// Destination samples that match no source codeword held within the
/// injection window around the sampling edge.
fn off_codeword_samples(c: &CorpusCase, seed: u64) -> usize {
    let a = c.analysis().expect("analysis");
    let mut stim = c.stimulus_parsed().expect("stimulus");
    stim.run_edges = 1000;
    stim.run_clock = "clk_b".into();
    let o = &a.constraints.options;
    let (t, _) = simulate(&a, &stim, &MsiConfig::random(seed, o), true).expect("simulate");
    let (src, dst) = (&t.waves["code"], &t.waves["s1"]);
    let clk = a.constraints.clocks.iter().find(|k| k.name == "clk_b").expect("clk_b");
    let mut bad = 0;
    for k in 0..t.edges["clk_b"] {
        let e = clk.phase + k * clk.period;
        let lo = e.saturating_sub(o.setup_window + 1);
        let mut allowed: BTreeSet<u64> = BTreeSet::from([src.after(lo)]);
        allowed.extend(src.changes.iter().filter(|(u, _)| *u > lo && *u <= e + o.hold_window).map(|(_, v)| *v));
        if !allowed.contains(&dst.after(e)) {
            bad += 1;
        }
    }
    bad
}

fn gray_vs_binary() -> Outcome {
    let gray = case("gray_counter");
    let binary = case("binary_counter");
    let g: usize = (1..=10).map(|s| off_codeword_samples(&gray, s)).sum();
    let b: usize = (1..=10).map(|s| off_codeword_samples(&binary, s)).sum();
    outcome(
        g == 0 && b > 0,
        format!("off-codeword samples over 1000 edges x 10 seeds: gray {g}, binary {b}"),
    )
}

fn exhaustive_random_consistency() -> Outcome {
    let mut bad = Vec::new();
    let cases = corpus();
    let mut max_depth = 0;
    for c in &cases {
        let a = c.analysis().expect("analysis");
        let stim = c.stimulus_parsed().expect("stimulus");
        let sim = Simulator::new(&a, &stim).expect("simulator");
        let explored = match explore_exhaustive(&sim, &MsiConfig::random(0, &a.constraints.options), 16) {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("{}: {e}", c.name));
                continue;
            }
        };
        max_depth = max_depth.max(explored.max_depth);
        let ex: BTreeSet<String> = explored.failing().map(str::to_string).collect();
        let rnd = msi_failures(&a, &stim, (1, 200)).expect("random runs");
        if ex != rnd {
            bad.push(format!("{}: exhaustive {ex:?} random {rnd:?}", c.name));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} cases, deepest {max_depth} decisions; mismatches {bad:?}", cases.len()),
    )
}

fn codegen_determinism() -> Outcome {
    let cases = corpus();
    let mut problems = Vec::new();
    let mut files_total = 0;
    for c in &cases {
        let a = c.analysis().expect("analysis");
        let (x, y) = (generate_all(&a).expect("generate"), generate_all(&a).expect("generate"));
        let tx: Vec<(&str, &str)> = x.iter().map(|f| (f.path.as_str(), f.content.as_str())).collect();
        let ty: Vec<(&str, &str)> = y.iter().map(|f| (f.path.as_str(), f.content.as_str())).collect();
        if tx != ty {
            problems.push(format!("{}: runs differ", c.name));
        }
        files_total += x.len();
        let golden = common::read_tree(&c.dir.join("golden/gen"));
        let want: BTreeMap<String, String> = x.iter().map(|f| (f.path.clone(), f.content.clone())).collect();
        if golden != want {
            problems.push(format!("{}: golden mismatch", c.name));
        }
        for issue in lint(&x, &a.netlist) {
            problems.push(format!("{}: {}:{}: {}", c.name, issue.file, issue.line, issue.message));
        }
    }
    let m = run_corpus(&corpus_root(), None).expect("corpus runs");
    let agreement: Vec<_> = m.rows.iter().filter(|r| r.expectation == "assertion_agreement").collect();
    problems.extend(agreement.iter().filter(|r| !r.passed).map(|r| format!("{}: {}", r.case, r.actual)));
    outcome(
        problems.is_empty() && agreement.len() == cases.len(),
        format!(
            "{} cases, {files_total} files, {} assertion/runtime comparisons; {problems:?}",
            cases.len(),
            agreement.len()
        ),
    )
}

fn same_counts(x: &CoverageDb, y: &CoverageDb) -> bool {
    let (mut sx, mut sy) = (x.seeds.clone(), y.seeds.clone());
    sx.sort_unstable();
    sy.sort_unstable();
    x.bins == y.bins && x.edges == y.edges && sx == sy && x.fingerprint == y.fingerprint
}

fn coverage_algebra() -> Outcome {
    let c = case("mixed_schemes");
    let a = c.analysis().expect("analysis");
    let stim = c.stimulus_parsed().expect("stimulus");
    let dbs: Vec<CoverageDb> = (1..=16)
        .map(|s| simulate(&a, &stim, &MsiConfig::random(s, &a.constraints.options), false).expect("simulate").1)
        .collect();
    let merge = |v: &[&CoverageDb]| v[1..].iter().fold(v[0].clone(), |acc, d| acc.merge(d).expect("merge"));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut assoc, mut comm, mut part) = (0, 0, 0);
    let trials = 1000;
    let whole = merge(&dbs.iter().collect::<Vec<_>>());
    for _ in 0..trials {
        let (i, j, k) = (rng.gen_range(0..16), rng.gen_range(0..16), rng.gen_range(0..16));
        let l = dbs[i].merge(&dbs[j]).expect("merge").merge(&dbs[k]).expect("merge");
        let r = dbs[i].merge(&dbs[j].merge(&dbs[k]).expect("merge")).expect("merge");
        assoc += usize::from(l == r);
        comm += usize::from(same_counts(&dbs[i].merge(&dbs[j]).expect("merge"), &dbs[j].merge(&dbs[i]).expect("merge")));
        let mut order: Vec<&CoverageDb> = dbs.iter().collect();
        order.shuffle(&mut rng);
        let mut cuts: Vec<usize> = (0..rng.gen_range(0..6)).map(|_| rng.gen_range(1..16)).collect();
        cuts.extend([0, 16]);
        cuts.sort_unstable();
        cuts.dedup();
        let parts: Vec<CoverageDb> = cuts.windows(2).map(|w| merge(&order[w[0]..w[1]])).collect();
        part += usize::from(same_counts(&merge(&parts.iter().collect::<Vec<_>>()), &whole));
    }
    let hits = whole.total_hits();
    outcome(
        assoc == trials && comm == trials && part == trials && hits > 0,
        format!("{trials} trials: associative {assoc}, commutative {comm}, partition-invariant {part}; {hits} merged hits"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("bug taxonomy coverage", bug_taxonomy),
        ("pair extraction oracle", pair_oracle),
        ("injection-off equivalence", msi_off_equivalence),
        ("coverage saturation", coverage_saturation),
        ("metastability latency", latency_property),
        ("gray vs binary", gray_vs_binary),
        ("exhaustive/random consistency", exhaustive_random_consistency),
        ("codegen determinism", codegen_determinism),
        ("coverage algebra", coverage_algebra),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
