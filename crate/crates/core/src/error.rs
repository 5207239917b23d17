use std::fmt;

use thiserror::Error;

/// A 1-based line/column position in a source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown gate `{name}`")]
    UnknownGate { pos: Pos, name: String },
    #[error("{pos}: call to undefined module `{name}`")]
    UndefinedModule { pos: Pos, name: String },
    #[error("{pos}: `{name}` expects {expected}, got {found}")]
    ArityMismatch {
        pos: Pos,
        name: String,
        expected: String,
        found: usize,
    },
    #[error("{pos}: type mismatch: {msg}")]
    TypeMismatch { pos: Pos, msg: String },
    #[error("{pos}: undefined identifier `{name}`")]
    Undefined { pos: Pos, name: String },
    #[error("recursive call cycle: {}", cycle.join(" -> "))]
    Recursion { cycle: Vec<String> },
    #[error("{pos}: classical control is not statically evaluable: {msg}")]
    NonConstantControl { pos: Pos, msg: String },
    #[error("intermediate program exceeds the instruction budget of {budget}")]
    BlowupLimit { budget: u64 },
    #[error("classical interpreter exceeded the step limit of {limit}")]
    StepLimit { limit: u64 },
    #[error("output exceeds the budget of {budget} {what}")]
    BudgetExceeded { budget: u64, what: &'static str },
    #[error("registers overlap: {msg}")]
    Overlap { msg: String },
    #[error("register width error: {msg}")]
    Width { msg: String },
    #[error("control line {line} is used inside the controlled body")]
    ControlOverlap { line: usize },
    #[error("no line available to borrow for a {controls}-control gate")]
    NoBorrowAvailable { controls: usize },
    #[error("input has {found} bits, circuit has {expected} signals")]
    WidthMismatch { expected: usize, found: usize },
    #[error("state vector supports at most {max} qubits, got {found}")]
    TooManyQubits { max: usize, found: usize },
    #[error("{pos}: {msg}")]
    Ctqg { pos: Pos, msg: String },
    #[error("line {line}: qasm syntax error: {msg}")]
    QasmSyntax { line: u32, msg: String },
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        Error::Syntax {
            pos,
            msg: msg.into(),
        }
    }

    pub(crate) fn non_const(pos: Pos, msg: impl Into<String>) -> Self {
        Error::NonConstantControl {
            pos,
            msg: msg.into(),
        }
    }

    /// Attach a source position to a synthesis error that has none.
    pub(crate) fn at(self, pos: Pos) -> Self {
        match self {
            Error::Ctqg { .. } | Error::Syntax { .. } => self,
            other => Error::Ctqg {
                pos,
                msg: other.to_string(),
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
