// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cdcv_core::analysis::{analyze_sources, Analysis, AnalysisError};
use cdcv_core::checks::Severity;
use cdcv_core::codegen::{self, lint::lint};
use cdcv_core::corpus::run_corpus;
use cdcv_core::coverage::{fingerprint, report, CoverageDb};
use cdcv_core::msi::vcd::write_vcd;
use cdcv_core::msi::{
    explore_exhaustive, parse_stimulus, simulate, ExploreOutcome, MsiConfig, MsiMode, SimError, SimTrace, Simulator,
    Stimulus,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::exit;
use crate::manifest::{digest, write_atomic, FileDigest, OutputSet, RunManifest};
use crate::options::RunOptions;
use crate::{Command, DesignArgs};

struct Run {
    command: &'static str,
    args: Vec<String>,
    opts: RunOptions,
    inputs: Vec<FileDigest>,
    seeds: Vec<u64>,
    fingerprint: Option<String>,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: digest(text.as_bytes()),
        });
        Ok(text)
    }

    fn design(&mut self, d: &DesignArgs) -> Result<Analysis> {
        let mut sources = Vec::new();
        for p in &d.rtl {
            sources.push((p.display().to_string(), self.read(p)?));
        }
        let cons = self.read(&d.constraints)?;
        let refs: Vec<(&str, &str)> = sources.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
        let top = d.top.as_deref().or(self.opts.top.as_deref());
        let a = analyze_sources(&refs, &cons, top).map_err(|e| match e {
            AnalysisError::Constraint(c) => anyhow!("{}: {c}", d.constraints.display()),
            e => anyhow!(e),
        })?;
        self.fingerprint = Some(fingerprint(&a.pairs));
        Ok(a)
    }

    fn stimulus(&mut self, path: &Path) -> Result<Stimulus> {
        let text = self.read(path)?;
        parse_stimulus(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
    }

    fn msi(&self, seed: u64, a: &Analysis, cli_prob: Option<&str>) -> Result<MsiConfig> {
        let (mut base, overrides) = self.opts.probabilities()?;
        if let Some(p) = cli_prob {
            base = p.parse().map_err(|e| anyhow!("probability `{p}`: {e}"))?;
        }
        Ok(MsiConfig {
            probability: base,
            overrides,
            ..MsiConfig::random(seed, &a.constraints.options)
        })
    }

    fn finish(self, out: OutputSet) -> Result<()> {
        out.finish(RunManifest {
            tool_version: codegen::VERSION.to_string(),
            command: self.command.to_string(),
            args: self.args,
            inputs: self.inputs,
            options: self.opts,
            seeds: self.seeds,
            fingerprint: self.fingerprint,
            outputs: vec![],
        })
    }
}

pub fn run(cmd: Command, args: Vec<String>, opts: RunOptions) -> Result<u8> {
    let name = match &cmd {
        Command::Analyze { .. } => "analyze",
        Command::Simulate { .. } => "simulate",
        Command::Explore { .. } => "explore",
        Command::Generate { .. } => "generate",
        Command::Report { .. } => "report",
        Command::MergeCoverage { .. } => "merge-coverage",
        Command::Corpus { .. } => "corpus",
        Command::Replay { .. } => bail!("nested replay"),
    };
    let mut r = Run {
        command: name,
        args,
        opts,
        inputs: vec![],
        seeds: vec![],
        fingerprint: None,
    };
    match cmd {
        Command::Analyze { design, strict, out } => analyze(r, &design, strict, &out),
        Command::Simulate {
            design,
            stimulus,
            seed,
            seeds,
            no_msi,
            probability,
            vcd,
            out,
        } => {
            let a = r.design(&design)?;
            let stim = r.stimulus(&stimulus)?;
            r.seeds = match (no_msi, seeds) {
                (true, _) => vec![],
                (false, Some((lo, hi))) => (lo..=hi).collect(),
                (false, None) => vec![seed],
            };
            simulate_cmd(r, &a, &stim, probability.as_deref(), vcd, &out)
        }
        Command::Explore {
            design,
            stimulus,
            budget,
            out,
        } => {
            let a = r.design(&design)?;
            let stim = r.stimulus(&stimulus)?;
            explore(r, &a, &stim, budget, &out)
        }
        Command::Generate { design, out } => {
            let a = r.design(&design)?;
            generate(r, &a, &out)
        }
        Command::Report { design, coverage, json } => {
            let a = r.design(&design)?;
            let db = read_db(&coverage)?;
            let rep = report(&db, &a.pairs)?;
            print!("{}", rep.to_text());
            if let Some(j) = json {
                write_atomic(&j, (serde_json::to_string_pretty(&rep)? + "\n").as_bytes())?;
            }
            Ok(exit::OK)
        }
        Command::MergeCoverage { inputs, out } => {
            let mut acc = read_db(&inputs[0])?;
            for p in &inputs[1..] {
                acc = acc.merge(&read_db(p)?).with_context(|| format!("merging {}", p.display()))?;
            }
            write_atomic(&out, acc.to_json().as_bytes())?;
            println!("merged {} databases, {} hits", inputs.len(), acc.total_hits());
            Ok(exit::OK)
        }
        Command::Corpus { root, filter, out } => {
            let m = run_corpus(&root, filter.as_deref())?;
            let mut o = OutputSet::new(&out);
            o.write_json("matrix.json", &m)?;
            let total = m.rows.len();
            let failed: Vec<_> = m.failures().collect();
            for f in &failed {
                println!("FAIL {} {}: expected {} got {}", f.case, f.expectation, f.expected, f.actual);
            }
            println!("{} of {total} expectations hold", total - failed.len());
            let code = if failed.is_empty() { exit::OK } else { exit::CHECKER_FAIL };
            r.finish(o)?;
            Ok(code)
        }
        Command::Replay { .. } => unreachable!(),
    }
}

fn read_db(path: &Path) -> Result<CoverageDb> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing coverage database {}", path.display()))
}

#[derive(Serialize)]
struct PairsFile<'a> {
    fingerprint: String,
    pairs: Vec<cdcv_core::analysis::PairRow<'a>>,
    rdc: &'a [cdcv_core::pairs::RdcPair],
    unclocked: &'a [cdcv_core::pairs::UnclockedCrossing],
}

#[derive(Serialize)]
struct SyncsFile<'a> {
    syncs: &'a [cdcv_core::sync::SyncInstance],
    reset_syncs: &'a [cdcv_core::sync::ResetSync],
}

fn analyze(mut r: Run, d: &DesignArgs, strict: bool, out: &Path) -> Result<u8> {
    let a = r.design(d)?;
    let mut o = OutputSet::new(out);
    o.write_json("findings.json", &a.findings)?;
    o.write_json(
        "pairs.json",
        &PairsFile {
            fingerprint: fingerprint(&a.pairs),
            pairs: a.pair_rows(),
            rdc: &a.rdc,
            unclocked: &a.unclocked,
        },
    )?;
    o.write_json(
        "syncs.json",
        &SyncsFile {
            syncs: &a.syncs,
            reset_syncs: &a.reset_syncs,
        },
    )?;
    for f in &a.findings {
        let sev = match f.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        };
        println!("{sev}: {}: {}", serde_json::to_value(f.rule)?.as_str().unwrap_or("?"), f.message);
    }
    println!(
        "{} crossings, {} synchronizers, {} findings ({} errors)",
        a.pairs.len(),
        a.syncs.len(),
        a.findings.len(),
        a.errors()
    );
    let strict = strict || r.opts.strict;
    r.finish(o)?;
    Ok(if strict && a.errors() > 0 { exit::STRICT } else { exit::OK })
}

#[derive(Serialize)]
struct SeedVerdicts<'a> {
    seed: Option<u64>,
    passed: bool,
    verdicts: &'a [cdcv_core::msi::Verdict],
}

#[derive(Serialize)]
struct SeedLog<'a> {
    seed: Option<u64>,
    events: &'a [cdcv_core::msi::MsiEvent],
}

fn simulate_cmd(r: Run, a: &Analysis, stim: &Stimulus, prob: Option<&str>, vcd: bool, out: &Path) -> Result<u8> {
    let runs: Vec<(Option<u64>, MsiConfig)> = if r.seeds.is_empty() {
        vec![(None, MsiConfig::disabled(&a.constraints.options))]
    } else {
        r.seeds
            .iter()
            .map(|s| Ok((Some(*s), r.msi(*s, a, prob)?)))
            .collect::<Result<_>>()?
    };
    let results: Vec<(Option<u64>, SimTrace, CoverageDb)> = runs
        .par_iter()
        .map(|(seed, cfg)| simulate(a, stim, cfg, vcd).map(|(t, db)| (*seed, t, db)))
        .collect::<Result<_, SimError>>()?;
    let mut o = OutputSet::new(out);
    let mut db = results[0].2.clone();
    for (_, _, d) in &results[1..] {
        db = db.merge(d)?;
    }
    o.write("coverage.json", db.to_json().as_bytes())?;
    o.write_json("coverage_report.json", &report(&db, &a.pairs)?)?;
    let verdicts: Vec<SeedVerdicts> = results
        .iter()
        .map(|(s, t, _)| SeedVerdicts {
            seed: *s,
            passed: t.passed(),
            verdicts: &t.verdicts,
        })
        .collect();
    o.write_json("verdicts.json", &verdicts)?;
    let logs: Vec<SeedLog> = results
        .iter()
        .map(|(s, t, _)| SeedLog {
            seed: *s,
            events: &t.msi_log,
        })
        .collect();
    o.write_json("msi_log.json", &logs)?;
    let mut failed = false;
    for (seed, t, _) in &results {
        let label = seed.map_or("reference".to_string(), |s| format!("seed {s}"));
        let fails: Vec<&str> = t.failing().map(|v| v.checker.as_str()).collect();
        if fails.is_empty() {
            println!("{label}: PASS ({} injections)", t.msi_log.len());
        } else {
            failed = true;
            println!("{label}: FAIL {}", fails.join(", "));
        }
        if vcd {
            let name = seed.map_or("trace.vcd".to_string(), |s| format!("trace_{s}.vcd"));
            o.write(&name, write_vcd(t, &a.constraints.clocks, &a.netlist.name).as_bytes())?;
        }
    }
    r.finish(o)?;
    Ok(if failed { exit::CHECKER_FAIL } else { exit::OK })
}

#[derive(Serialize)]
struct ExploreVerdict<'a> {
    status: &'static str,
    decisions: Option<&'a [bool]>,
    injections: Option<&'a [cdcv_core::msi::MsiEvent]>,
    waveform: Option<String>,
}

#[derive(Serialize)]
struct ExploreFile<'a> {
    budget: u32,
    branches: u64,
    max_depth: usize,
    verdicts: BTreeMap<&'a str, ExploreVerdict<'a>>,
}

fn explore(r: Run, a: &Analysis, stim: &Stimulus, budget: Option<u32>, out: &Path) -> Result<u8> {
    let budget = budget.unwrap_or(r.opts.budget);
    let sim = Simulator::new(a, stim)?;
    let cfg = MsiConfig {
        mode: MsiMode::Exhaustive { max_decisions: budget },
        ..r.msi(0, a, None)?
    };
    let mut o = OutputSet::new(out);
    let res = match explore_exhaustive(&sim, &cfg, budget) {
        Ok(res) => res,
        Err(e @ (SimError::DecisionBudgetExceeded { .. } | SimError::BudgetTooLarge { .. })) => {
            eprintln!("error: {e}");
            o.write_json("explore.json", &serde_json::json!({ "budget": budget, "error": e }))?;
            r.finish(o)?;
            return Ok(exit::BUDGET);
        }
        Err(e) => return Err(e.into()),
    };
    let mut verdicts = BTreeMap::new();
    for (id, outcome) in &res.verdicts {
        let v = match outcome {
            ExploreOutcome::Proven => ExploreVerdict {
                status: "proven",
                decisions: None,
                injections: None,
                waveform: None,
            },
            ExploreOutcome::Counterexample { decisions, trace } => {
                let name = format!("cex_{}.vcd", codegen::property_name(id));
                o.write(&name, write_vcd(trace, &a.constraints.clocks, &a.netlist.name).as_bytes())?;
                println!("{id}: counterexample after {} decisions, see {name}", decisions.len());
                ExploreVerdict {
                    status: "counterexample",
                    decisions: Some(decisions),
                    injections: Some(&trace.msi_log),
                    waveform: Some(name),
                }
            }
        };
        verdicts.insert(id.as_str(), v);
    }
    o.write_json(
        "explore.json",
        &ExploreFile {
            budget,
            branches: res.branches,
            max_depth: res.max_depth,
            verdicts,
        },
    )?;
    let failing = res.failing().count();
    println!(
        "{} branches, depth {}, {} of {} checkers proven",
        res.branches,
        res.max_depth,
        res.verdicts.len() - failing,
        res.verdicts.len()
    );
    r.finish(o)?;
    Ok(if failing > 0 { exit::CHECKER_FAIL } else { exit::OK })
}

fn generate(r: Run, a: &Analysis, out: &Path) -> Result<u8> {
    let files = codegen::generate_all(a)?;
    let issues = lint(&files, &a.netlist);
    if let Some(i) = issues.first() {
        bail!("generated output fails lint: {}:{}: {}", i.file, i.line, i.message);
    }
    let mut o = OutputSet::new(out);
    for f in &files {
        o.write(&f.path, f.content.as_bytes())?;
    }
    println!("{} files written to {}", files.len(), o.dir().display());
    r.finish(o)?;
    Ok(exit::OK)
}
