// SPDX-License-Identifier: Apache-2.0

//! `cdcv`: structural CDC/RDC analysis, metastability-injecting simulation
//! and checker generation from one binary.

mod commands;
mod manifest;
mod options;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cdcv_core::coverage::CoverageError;
use clap::{Args, Parser, Subcommand};

use crate::manifest::{digest, RunManifest};
use crate::options::RunOptions;

/// Exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INPUT: u8 = 1;
    pub const STRICT: u8 = 2;
    pub const CHECKER_FAIL: u8 = 3;
    pub const BUDGET: u8 = 4;
    pub const FINGERPRINT: u8 = 5;
}

#[derive(Debug, Parser)]
#[command(name = "cdcv", version, about = "Clock and reset domain crossing verification")]
pub struct Cli {
    /// JSON file with run defaults; falls back to $CDCV_OPTIONS.
    #[arg(long, global = true, value_name = "FILE")]
    pub options: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Verilog source files.
    #[arg(required = true, value_name = "RTL")]
    pub rtl: Vec<PathBuf>,
    /// Clock, reset and waiver constraints.
    #[arg(short, long, value_name = "FILE")]
    pub constraints: PathBuf,
    /// Top module; inferred when there is exactly one candidate.
    #[arg(long)]
    pub top: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural analysis: findings, crossings and synchronizers.
    Analyze {
        #[command(flatten)]
        design: DesignArgs,
        /// Exit with status 2 when any finding has error severity.
        #[arg(long)]
        strict: bool,
        #[arg(short, long, default_value = "cdcv_out")]
        out: PathBuf,
    },
    /// Simulates with metastability injection and runs protocol checkers.
    Simulate {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(short, long, value_name = "FILE")]
        stimulus: PathBuf,
        #[arg(long, default_value_t = 1, conflicts_with = "seeds")]
        seed: u64,
        /// Inclusive seed range `A..B`, run in parallel.
        #[arg(long, value_parser = parse_seed_range)]
        seeds: Option<(u64, u64)>,
        /// Reference run without injection.
        #[arg(long)]
        no_msi: bool,
        /// Injection probability `num/den`, overriding the options file.
        #[arg(long)]
        probability: Option<String>,
        /// Also write one VCD per run.
        #[arg(long)]
        vcd: bool,
        #[arg(short, long, default_value = "cdcv_out")]
        out: PathBuf,
    },
    /// Enumerates every injection decision sequence up to a budget.
    Explore {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(short, long, value_name = "FILE")]
        stimulus: PathBuf,
        #[arg(long)]
        budget: Option<u32>,
        #[arg(short, long, default_value = "cdcv_out")]
        out: PathBuf,
    },
    /// Emits SystemVerilog checkers, coverage model and bind file.
    Generate {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(short, long, default_value = "gen")]
        out: PathBuf,
    },
    /// Prints a coverage report for a coverage database.
    Report {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long, value_name = "FILE")]
        coverage: PathBuf,
        /// Also write the report as JSON.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Merges coverage databases of the same design.
    MergeCoverage {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Runs the labeled corpus and writes the expectation matrix.
    Corpus {
        #[arg(long, default_value = "corpus")]
        root: PathBuf,
        /// Only cases whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[arg(short, long, default_value = "cdcv_out")]
        out: PathBuf,
    },
    /// Re-runs the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

fn parse_seed_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

fn replay(path: &std::path::Path) -> Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    for input in &m.inputs {
        let bytes = std::fs::read(&input.path).with_context(|| format!("reading {}", input.path))?;
        if digest(&bytes) != input.sha256 {
            bail!("input {} changed since the manifest was written", input.path);
        }
    }
    let cli = Cli::try_parse_from(std::iter::once("cdcv".to_string()).chain(m.args.iter().cloned()))
        .context("manifest arguments no longer parse")?;
    if matches!(cli.command, Command::Replay { .. }) {
        bail!("a manifest cannot record a replay");
    }
    commands::run(cli.command, m.args, m.options)
}

fn run(args: Vec<String>) -> Result<u8> {
    let cli = Cli::parse_from(std::iter::once("cdcv".to_string()).chain(args.iter().cloned()));
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest);
    }
    let opts = RunOptions::resolve(cli.options.as_deref())?;
    commands::run(cli.command, args, opts)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let mismatch = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<CoverageError>(), Some(CoverageError::FingerprintMismatch { .. })));
            ExitCode::from(if mismatch { exit::FINGERPRINT } else { exit::INPUT })
        }
    }
}
