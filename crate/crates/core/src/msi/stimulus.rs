// SPDX-License-Identifier: Apache-2.0

//! Line-based stimulus files.
//!
//! ```text
//! at <clock> <edge#> set <port> <value>
//! random -ports <p1> [<p2> ...] -p <prob> -seed <int>
//! run <edges> of <clock>
//! expect latency -from <net> -to <net> -min <int> -max <int>
//! ```
//!
//! Edge numbers count from 0. A `set` takes effect right after that edge,
//! so the first edge to sample the new value is the next one of any clock.
//! Random drivers toggle each bit of their ports with the given probability
//! after every edge of the `run` clock.

use serde::Serialize;
use thiserror::Error;

use super::Probability;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetDirective {
    pub line: u32,
    pub clock: String,
    pub edge: u64,
    pub port: String,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RandomDriver {
    pub line: u32,
    pub ports: Vec<String>,
    pub probability: Probability,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatencyExpect {
    pub line: u32,
    pub from: String,
    pub to: String,
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stimulus {
    pub sets: Vec<SetDirective>,
    pub random: Vec<RandomDriver>,
    pub run_edges: u64,
    pub run_clock: String,
    pub latency: Vec<LatencyExpect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum StimulusError {
    #[error("stimulus line {line}: {message}")]
    Syntax { line: u32, message: String },
    #[error("stimulus line {line}: no `run` directive")]
    MissingRun { line: u32 },
    #[error("stimulus line {line}: unknown clock `{name}`")]
    UnknownClock { line: u32, name: String },
    #[error("stimulus line {line}: `{name}` is not a drivable input port")]
    UnknownPort { line: u32, name: String },
    #[error("stimulus line {line}: unknown net `{name}`")]
    UnknownNet { line: u32, name: String },
    #[error("stimulus line {line}: value {value} does not fit {width}-bit port `{port}`")]
    StimulusOutOfRange { line: u32, port: String, value: u64, width: u32 },
    #[error("stimulus line {line}: edge {edge} of `{clock}` comes before an earlier directive's edge")]
    EdgeOrder { line: u32, clock: String, edge: u64 },
}

fn parse_u64(line: u32, s: Option<&str>, what: &str) -> Result<u64, StimulusError> {
    let s = s.ok_or_else(|| StimulusError::Syntax {
        line,
        message: format!("missing {what}"),
    })?;
    let r = if let Some(h) = s.strip_prefix("0x") {
        u64::from_str_radix(h, 16)
    } else if let Some(b) = s.strip_prefix("0b") {
        u64::from_str_radix(b, 2)
    } else {
        s.parse()
    };
    r.map_err(|_| StimulusError::Syntax {
        line,
        message: format!("bad {what} `{s}`"),
    })
}

pub fn parse_stimulus(text: &str) -> Result<Stimulus, StimulusError> {
    let mut sets = Vec::new();
    let mut random = Vec::new();
    let mut latency = Vec::new();
    let mut run = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i as u32 + 1;
        last_line = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let syntax = |message: &str| StimulusError::Syntax {
            line,
            message: message.to_string(),
        };
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks[0] {
            "at" => {
                let [_, clock, edge, "set", port, value] = toks.as_slice() else {
                    return Err(syntax("expected `at <clock> <edge#> set <port> <value>`"));
                };
                let edge = parse_u64(line, Some(edge), "edge number")?;
                if let Some(prev) = sets.iter().rev().find(|s: &&SetDirective| s.clock == *clock) {
                    if edge < prev.edge {
                        return Err(StimulusError::EdgeOrder {
                            line,
                            clock: clock.to_string(),
                            edge,
                        });
                    }
                }
                sets.push(SetDirective {
                    line,
                    clock: clock.to_string(),
                    edge,
                    port: port.to_string(),
                    value: parse_u64(line, Some(value), "value")?,
                });
            }
            "random" => {
                let mut ports = Vec::new();
                let (mut p, mut seed) = (None, None);
                let mut it = toks[1..].iter().peekable();
                while let Some(t) = it.next() {
                    match *t {
                        "-ports" => {
                            while let Some(n) = it.peek() {
                                if n.starts_with('-') {
                                    break;
                                }
                                ports.push(n.to_string());
                                it.next();
                            }
                        }
                        "-p" => {
                            let v = it.next().ok_or_else(|| syntax("missing probability"))?;
                            p = Some(v.parse::<Probability>().map_err(|m| syntax(&m))?);
                        }
                        "-seed" => seed = Some(parse_u64(line, it.next().copied(), "seed")?),
                        other => return Err(syntax(&format!("unexpected `{other}`"))),
                    }
                }
                if ports.is_empty() {
                    return Err(syntax("`random` needs -ports"));
                }
                random.push(RandomDriver {
                    line,
                    ports,
                    probability: p.ok_or_else(|| syntax("`random` needs -p"))?,
                    seed: seed.ok_or_else(|| syntax("`random` needs -seed"))?,
                });
            }
            "run" => {
                let [_, n, "of", clock] = toks.as_slice() else {
                    return Err(syntax("expected `run <edges> of <clock>`"));
                };
                if run.is_some() {
                    return Err(syntax("duplicate `run`"));
                }
                run = Some((parse_u64(line, Some(n), "edge count")?, clock.to_string()));
            }
            "expect" => {
                let ["expect", "latency", rest @ ..] = toks.as_slice() else {
                    return Err(syntax("expected `expect latency ...`"));
                };
                let (mut from, mut to, mut min, mut max) = (None, None, None, None);
                let mut it = rest.iter();
                while let Some(t) = it.next() {
                    let v = it.next().copied();
                    match *t {
                        "-from" => from = v.map(str::to_string),
                        "-to" => to = v.map(str::to_string),
                        "-min" => min = Some(parse_u64(line, v, "min")? as u32),
                        "-max" => max = Some(parse_u64(line, v, "max")? as u32),
                        other => return Err(syntax(&format!("unexpected `{other}`"))),
                    }
                }
                let (Some(from), Some(to), Some(min), Some(max)) = (from, to, min, max) else {
                    return Err(syntax("`expect latency` needs -from, -to, -min and -max"));
                };
                if min > max || min == 0 {
                    return Err(syntax("latency bounds need 1 <= min <= max"));
                }
                latency.push(LatencyExpect {
                    line,
                    from,
                    to,
                    min,
                    max,
                });
            }
            other => return Err(syntax(&format!("unknown directive `{other}`"))),
        }
    }
    let (run_edges, run_clock) = run.ok_or(StimulusError::MissingRun { line: last_line })?;
    Ok(Stimulus {
        sets,
        random,
        run_edges,
        run_clock,
        latency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_directives() {
        let s = parse_stimulus(
            "# reset release\nat clk_a 2 set rst_n 1\nat clk_a 5 set d 0x3\n\
             random -ports a b -p 1/2 -seed 9\nrun 100 of clk_b\n\
             expect latency -from x -to s2 -min 2 -max 3\n",
        )
        .unwrap();
        assert_eq!(s.sets.len(), 2);
        assert_eq!(s.sets[1].value, 3);
        assert_eq!(s.random[0].ports, vec!["a", "b"]);
        assert_eq!((s.run_edges, s.run_clock.as_str()), (100, "clk_b"));
        assert_eq!(s.latency[0].max, 3);
    }

    #[test]
    fn rejects_decreasing_edges() {
        let e = parse_stimulus("at c 5 set d 1\nat c 4 set d 0\nrun 3 of c\n").unwrap_err();
        assert!(matches!(e, StimulusError::EdgeOrder { line: 2, .. }));
    }

    #[test]
    fn run_is_required() {
        assert!(matches!(parse_stimulus("at c 1 set d 1\n"), Err(StimulusError::MissingRun { .. })));
    }
}
