// SPDX-License-Identifier: Apache-2.0

//! Multi-clock cycle simulation with metastability injection.

pub mod checkers;
pub mod engine;
pub mod explore;
pub mod reference;
pub mod stimulus;
pub mod vcd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use checkers::{instantiate_checkers, CheckKind, CheckerSpec, Verdict};
pub use engine::{simulate, MsiEvent, SimError, SimTrace, Simulator, ViolationKind, Wave};
pub use reference::reference_simulate;
pub use explore::{explore_exhaustive, ExploreOutcome, ExploreResult};
pub use stimulus::{parse_stimulus, Stimulus, StimulusError};

/// A probability as an exact fraction, so draws are identical on every
/// platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probability {
    pub num: u64,
    pub den: u64,
}

impl Probability {
    pub const HALF: Probability = Probability { num: 1, den: 2 };
    pub const ONE: Probability = Probability { num: 1, den: 1 };
    pub const ZERO: Probability = Probability { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0 && num <= den).then_some(Probability { num, den })
    }

    /// Consumes exactly one value from `rng`.
    pub fn draw(self, rng: &mut impl rand::Rng) -> bool {
        rng.gen_range(0..self.den) < self.num
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Probability {
    type Err = String;

    /// Accepts `a/b` or a decimal such as `0.25`.
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("`{s}` is not a probability in [0,1]");
        let p = if let Some((a, b)) = s.split_once('/') {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            Probability::new(a, b)
        } else {
            let (int, frac) = s.split_once('.').unwrap_or((s, ""));
            if frac.len() > 9 || !frac.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let den = 10u64.pow(frac.len() as u32);
            let f: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            int.checked_mul(den)
                .and_then(|x| x.checked_add(f))
                .and_then(|n| Probability::new(n, den))
        };
        p.ok_or_else(bad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MsiMode {
    Random { seed: u64 },
    Exhaustive { max_decisions: u32 },
}

/// Hard cap on exhaustive exploration: 2^24 branches.
pub const MAX_DECISIONS_CAP: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsiConfig {
    pub enabled: bool,
    pub probability: Probability,
    pub setup_window: u64,
    pub hold_window: u64,
    /// Pair ids with their own probability.
    pub overrides: std::collections::BTreeMap<String, Probability>,
    pub mode: MsiMode,
}

impl MsiConfig {
    pub fn random(seed: u64, opts: &crate::frontend::Options) -> Self {
        MsiConfig {
            enabled: true,
            probability: Probability::HALF,
            setup_window: opts.setup_window,
            hold_window: opts.hold_window,
            overrides: Default::default(),
            mode: MsiMode::Random { seed },
        }
    }

    pub fn disabled(opts: &crate::frontend::Options) -> Self {
        MsiConfig {
            enabled: false,
            ..Self::random(0, opts)
        }
    }

    pub fn probability_for(&self, pair: &str) -> Probability {
        self.overrides.get(pair).copied().unwrap_or(self.probability)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_probabilities() {
        assert_eq!("0.5".parse::<Probability>().unwrap(), Probability { num: 5, den: 10 });
        assert_eq!("1/3".parse::<Probability>().unwrap(), Probability { num: 1, den: 3 });
        assert_eq!("1".parse::<Probability>().unwrap(), Probability { num: 1, den: 1 });
        assert!("1.5".parse::<Probability>().is_err());
        assert!("2/1".parse::<Probability>().is_err());
        assert!("x".parse::<Probability>().is_err());
    }

    #[test]
    fn extreme_probabilities_are_certain() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| Probability::ONE.draw(&mut rng)));
        assert!((0..100).all(|_| !Probability::ZERO.draw(&mut rng)));
    }
}
