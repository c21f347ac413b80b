// SPDX-License-Identifier: Apache-2.0

//! Verilog-subset and constraints-file front end.

pub mod ast;
pub mod constraints;
mod lexer;
mod parser;
mod print;

use serde::Serialize;
use thiserror::Error;

pub use ast::ParsedModule;
pub use constraints::{parse_constraints, ClockSpec, ConstraintError, ConstraintSet, Options, ResetSpec};
pub use parser::parse_verilog;
pub use print::print_module;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum FrontendError {
    #[error("{origin}:{line}:{column}: syntax error: expected {expected}")]
    Syntax {
        origin: String,
        line: u32,
        column: u32,
        expected: String,
    },
    #[error("{origin}:{line}: unsupported construct: {construct}")]
    Unsupported {
        origin: String,
        line: u32,
        construct: String,
    },
    #[error("{origin}:{line}: duplicate module `{name}`")]
    DuplicateModule { origin: String, line: u32, name: String },
    #[error("{origin}:{line}: undeclared identifier `{name}`")]
    Undeclared { origin: String, line: u32, name: String },
    #[error("{origin}: nonblocking assignment to `{name}`, which is not declared reg")]
    NotReg { origin: String, name: String },
}

impl FrontendError {
    pub fn line(&self) -> Option<u32> {
        match self {
            FrontendError::Syntax { line, .. }
            | FrontendError::Unsupported { line, .. }
            | FrontendError::DuplicateModule { line, .. }
            | FrontendError::Undeclared { line, .. } => Some(*line),
            FrontendError::NotReg { .. } => None,
        }
    }
}

/// Parses several source files and concatenates their modules, rejecting a
/// module name defined in more than one file.
pub fn parse_files<'a>(
    sources: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<Vec<ParsedModule>, FrontendError> {
    let mut all: Vec<ParsedModule> = Vec::new();
    for (origin, text) in sources {
        for m in parse_verilog(text, origin)? {
            if all.iter().any(|o| o.name == m.name) {
                return Err(FrontendError::DuplicateModule {
                    origin: origin.into(),
                    line: 1,
                    name: m.name,
                });
            }
            all.push(m);
        }
    }
    Ok(all)
}
