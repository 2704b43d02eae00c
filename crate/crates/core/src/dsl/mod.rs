//! Line-oriented text format (`.nqi`) for interferometer layouts.
//!
//! ```text
//! paths l u
//! sinks S+ S-
//! atom-levels m+ m- g
//! param N
//! let t = sin(pi / (2 * N))
//! input l +
//! repeat N {
//!   bs l u t=t r=cos(pi / (2 * N))
//!   atom u
//! }
//! classify l=success u=failure sinks=absorbed
//! ```
//!
//! Besides the element statements (`bs`, `mirror`, `rot`, `phase`, `atom`,
//! `relabel`) the format has `couple <cavity> <out> t=.. r=..` for cavity
//! mirrors that accumulate leakage, `param <name> [= default]` for values
//! bound at compile time and `input <path> +|-|x|y` for the photon.

mod ast;
mod compile;
mod expr;
mod parser;
mod printer;

use std::collections::HashMap;

pub use ast::{CircuitAst, InputPol, RotOp, Stmt, StmtKind};
pub use compile::{compile, CompileError, MAX_ELEMENTS};
pub use expr::{BinOp, Expr, Func};
pub use parser::{parse, ParseError};
pub use printer::{print, statement_text};

use crate::circuit::Circuit;

/// Chained Mach-Zehnder interrogation, parameter `N`.
pub const MZ_SOURCE: &str = include_str!("../../circuits/mz.nqi");
/// Fabry-Perot cavity, parameters `r` and `rounds`.
pub const FP_SOURCE: &str = include_str!("../../circuits/fp.nqi");
/// Single direct interaction with an `x` photon.
pub const DIRECT_SOURCE: &str = include_str!("../../circuits/direct.nqi");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("compile error: {0}")]
    Compile(#[from] CompileError),
}

/// Parses and compiles in one step.
pub fn load(source: &str, bindings: &HashMap<String, f64>) -> Result<Circuit, DslError> {
    Ok(compile(&parse(source)?, bindings)?)
}
