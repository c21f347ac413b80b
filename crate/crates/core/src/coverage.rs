// SPDX-License-Identifier: Apache-2.0

//! Crossing coverage: four bins per destination bit, counting injected
//! setup and hold violations by the value they resolved to.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::Analysis;
use crate::msi::ViolationKind;
use crate::pairs::CdcPair;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bins {
    pub setup0: u64,
    pub setup1: u64,
    pub hold0: u64,
    pub hold1: u64,
}

impl Bins {
    pub fn get_mut(&mut self, kind: ViolationKind, resolved: u8) -> &mut u64 {
        match (kind, resolved) {
            (ViolationKind::Setup, 0) => &mut self.setup0,
            (ViolationKind::Setup, _) => &mut self.setup1,
            (ViolationKind::Hold, 0) => &mut self.hold0,
            (ViolationKind::Hold, _) => &mut self.hold1,
        }
    }

    pub fn hit(&self) -> u32 {
        [self.setup0, self.setup1, self.hold0, self.hold1]
            .iter()
            .filter(|c| **c > 0)
            .count() as u32
    }

    fn add(&mut self, o: &Bins) {
        self.setup0 += o.setup0;
        self.setup1 += o.setup1;
        self.hold0 += o.hold0;
        self.hold1 += o.hold1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairMeta {
    pub width: u32,
    pub src_domain: String,
    pub dst_domain: String,
    pub suppressed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageDb {
    pub fingerprint: String,
    pub scope: String,
    pub pairs: BTreeMap<String, PairMeta>,
    /// pair id -> bit -> bins; unsuppressed pairs only.
    pub bins: BTreeMap<String, BTreeMap<u32, Bins>>,
    pub seeds: Vec<u64>,
    pub edges: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum CoverageError {
    #[error("unknown pair `{pair}` bit {bit}")]
    UnknownPair { pair: String, bit: u32 },
    #[error("coverage fingerprint mismatch: {expected} vs {found}")]
    FingerprintMismatch { expected: String, found: String },
}

/// Stable hash of pair ids, endpoints, widths and domains.
pub fn fingerprint(pairs: &[CdcPair]) -> String {
    let mut rows: Vec<String> = pairs
        .iter()
        .map(|p| format!("{}:{}:{}:{}:{}:{}", p.id, p.src_name, p.dst_name, p.width, p.src_domain, p.dst_domain))
        .collect();
    rows.sort();
    let mut h = Sha256::new();
    for r in rows {
        h.update(r.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

impl CoverageDb {
    pub fn new(a: &Analysis, scope: &str) -> Self {
        Self::for_pairs(&a.pairs, scope)
    }

    pub fn for_pairs(pairs: &[CdcPair], scope: &str) -> Self {
        let mut meta = BTreeMap::new();
        let mut bins = BTreeMap::new();
        for p in pairs {
            meta.insert(
                p.id.clone(),
                PairMeta {
                    width: p.width,
                    src_domain: p.src_domain.clone(),
                    dst_domain: p.dst_domain.clone(),
                    suppressed: p.suppressed.is_some(),
                },
            );
            if p.suppressed.is_none() {
                bins.insert(p.id.clone(), (0..p.width).map(|b| (b, Bins::default())).collect());
            }
        }
        CoverageDb {
            fingerprint: fingerprint(pairs),
            scope: scope.to_string(),
            pairs: meta,
            bins,
            seeds: vec![],
            edges: 0,
        }
    }

    pub fn record(&mut self, pair: &str, bit: u32, kind: ViolationKind, resolved: u8) -> Result<(), CoverageError> {
        let b = self
            .bins
            .get_mut(pair)
            .and_then(|m| m.get_mut(&bit))
            .ok_or_else(|| CoverageError::UnknownPair {
                pair: pair.to_string(),
                bit,
            })?;
        *b.get_mut(kind, resolved) += 1;
        Ok(())
    }

    /// Counter-wise sum; seeds concatenate and the scope is `self`'s.
    pub fn merge(&self, other: &CoverageDb) -> Result<CoverageDb, CoverageError> {
        if self.fingerprint != other.fingerprint {
            return Err(CoverageError::FingerprintMismatch {
                expected: self.fingerprint.clone(),
                found: other.fingerprint.clone(),
            });
        }
        let mut out = self.clone();
        for (pair, bits) in &other.bins {
            let dst = out.bins.entry(pair.clone()).or_default();
            for (bit, b) in bits {
                dst.entry(*bit).or_default().add(b);
            }
        }
        out.seeds.extend(&other.seeds);
        out.edges += other.edges;
        Ok(out)
    }

    pub fn total_hits(&self) -> u64 {
        self.bins
            .values()
            .flat_map(|m| m.values())
            .map(|b| b.setup0 + b.setup1 + b.hold0 + b.hold1)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCoverage {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub width: u32,
    pub bins_hit: u32,
    pub bins_total: u32,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub scope: String,
    pub pairs: Vec<PairCoverage>,
    pub bins_hit: u32,
    pub bins_total: u32,
    pub percent: f64,
    pub zero_coverage: Vec<String>,
    pub suppressed: Vec<String>,
}

fn percent(hit: u32, total: u32) -> f64 {
    if total == 0 {
        100.0
    } else {
        (f64::from(hit) * 10000.0 / f64::from(total)).round() / 100.0
    }
}

pub fn report(db: &CoverageDb, pairs: &[CdcPair]) -> Result<CoverageReport, CoverageError> {
    let fp = fingerprint(pairs);
    if fp != db.fingerprint {
        return Err(CoverageError::FingerprintMismatch {
            expected: fp,
            found: db.fingerprint.clone(),
        });
    }
    let mut rows = Vec::new();
    let mut suppressed = Vec::new();
    let mut zero = Vec::new();
    let (mut hit, mut total) = (0, 0);
    for p in pairs {
        if p.suppressed.is_some() {
            suppressed.push(p.id.clone());
            continue;
        }
        let h: u32 = db
            .bins
            .get(&p.id)
            .map(|m| m.values().map(Bins::hit).sum())
            .unwrap_or(0);
        let t = 4 * p.width;
        if h == 0 {
            zero.push(p.id.clone());
        }
        hit += h;
        total += t;
        rows.push(PairCoverage {
            id: p.id.clone(),
            src: p.src_name.clone(),
            dst: p.dst_name.clone(),
            width: p.width,
            bins_hit: h,
            bins_total: t,
            percent: percent(h, t),
        });
    }
    Ok(CoverageReport {
        scope: db.scope.clone(),
        pairs: rows,
        bins_hit: hit,
        bins_total: total,
        percent: percent(hit, total),
        zero_coverage: zero,
        suppressed,
    })
}

impl CoverageReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "coverage scope: {}", if self.scope.is_empty() { "-" } else { &self.scope });
        let _ = writeln!(s, "{:<6} {:<24} {:<24} {:>5} {:>9} {:>8}", "pair", "source", "destination", "width", "bins", "percent");
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "{:<6} {:<24} {:<24} {:>5} {:>4}/{:<4} {:>7.2}%",
                p.id, p.src, p.dst, p.width, p.bins_hit, p.bins_total, p.percent
            );
        }
        let _ = writeln!(s, "total: {}/{} bins, {:.2}%", self.bins_hit, self.bins_total, self.percent);
        if !self.zero_coverage.is_empty() {
            let _ = writeln!(s, "zero coverage: {}", self.zero_coverage.join(", "));
        }
        if !self.suppressed.is_empty() {
            let _ = writeln!(s, "suppressed (not counted): {}", self.suppressed.join(", "));
        }
        s
    }
}
