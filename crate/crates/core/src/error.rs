use std::fmt;

use thiserror::Error;

use crate::syntax::Kind;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the workbench.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("order relation has a cycle through {0} and {1}")]
    Cycle(usize, usize),

    #[error("index {index} out of range for {size} elements")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("size guard: {what} needs {required}, cap is {cap}")]
    SizeGuard {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("modality `{modality}` is not in the {kind} signature")]
    Signature { modality: &'static str, kind: Kind },

    #[error("valuation does not cover letter `{0}`")]
    MissingLetter(String),

    #[error("frame condition violated: {condition} (witness {witness:?})")]
    FrameCondition {
        condition: String,
        witness: Vec<usize>,
    },

    #[error("kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: Kind, found: Kind },

    #[error("operation not available for {kind} frames: {reason}")]
    Unsupported { kind: Kind, reason: &'static str },

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error("overlapping clauses disagree: {0}")]
    Incoherent(String),
}

impl Error {
    pub(crate) fn guard(what: &'static str, required: u128, cap: u128) -> Self {
        Error::SizeGuard {
            what,
            required,
            cap,
        }
    }

    pub(crate) fn input(path: impl fmt::Display, message: impl Into<String>) -> Self {
        Error::Input {
            path: path.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn condition(condition: impl Into<String>, witness: Vec<usize>) -> Self {
        Error::FrameCondition {
            condition: condition.into(),
            witness,
        }
    }
}
