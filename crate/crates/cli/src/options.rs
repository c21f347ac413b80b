// SPDX-License-Identifier: Apache-2.0

//! Run defaults read from a JSON options file; command-line flags win.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use cdcv_core::msi::Probability;
use serde::{Deserialize, Serialize};

/// Environment variable naming the default options file.
pub const OPTIONS_ENV: &str = "CDCV_OPTIONS";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Injection probability for every pair, as `num/den`.
    pub probability: String,
    /// Per-pair probability overrides, keyed by pair id.
    pub pair_probability: BTreeMap<String, String>,
    /// Exhaustive exploration budget in decisions.
    pub budget: u32,
    pub strict: bool,
    pub top: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            probability: "1/2".into(),
            pair_probability: BTreeMap::new(),
            budget: 16,
            strict: false,
            top: None,
        }
    }
}

impl RunOptions {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading options file {}", path.display()))?;
        let o: RunOptions =
            serde_json::from_str(&text).with_context(|| format!("parsing options file {}", path.display()))?;
        o.probabilities()?;
        Ok(o)
    }

    /// Explicit path, else the environment variable, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(OPTIONS_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn probabilities(&self) -> Result<(Probability, BTreeMap<String, Probability>)> {
        let parse = |s: &str| s.parse::<Probability>().map_err(|e| anyhow::anyhow!("probability `{s}`: {e}"));
        let base = parse(&self.probability)?;
        let mut over = BTreeMap::new();
        for (k, v) in &self.pair_probability {
            over.insert(k.clone(), parse(v)?);
        }
        Ok((base, over))
    }
}
