use std::fmt;

use thiserror::Error;

/// 1-based line/column position in some text input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    /// Position of byte offset `offset` in `text`.
    pub fn of(text: &str, offset: usize) -> Pos {
        let mut line = 1;
        let mut col = 1;
        for (i, c) in text.char_indices() {
            if i >= offset {
                break;
            }
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("xml: {0}")]
    Xml(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid transducer:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("stay-step budget of {budget} exceeded in state `{state}`")]
    StayBudget { state: String, budget: usize },
    #[error("scoping:\n{}", .0.join("\n"))]
    Scope(Vec<String>),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("class check failed: {0}")]
    Class(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn syntax(text: &str, offset: usize, msg: impl Into<String>) -> Error {
        Error::Syntax { pos: Pos::of(text, offset), msg: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
