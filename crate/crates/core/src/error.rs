use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("non-linear term at offset {pos}")]
    NonLinear { pos: usize },

    #[error("variable `{0}` is not bound by the valuation")]
    UnboundVariable(String),

    #[error("cannot store an empty conjunction")]
    EmptyConjunction,

    #[error("solution does not fit the store: {0}")]
    InvalidSolution(String),

    #[error("unsupported store version {found} (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },

    #[error("malformed record at line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("corpus line {line}: {msg}")]
    Corpus { line: usize, msg: String },

    #[error("run lengths differ: {base} vs {other} queries")]
    MismatchedRuns { base: u64, other: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
