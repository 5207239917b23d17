//! Program checks and estimators over flattened programs.

pub mod entangle;
pub mod nocloning;
pub mod resources;

use std::fmt;

pub use entangle::{analyze_entanglement, analyze_program_entanglement, check_disentangled, EntanglementReport};
pub use nocloning::check_no_cloning;
pub use resources::{estimate_resources, ResourceRow, ResourceTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagKind {
    /// A multi-qubit gate acts twice on one qubit.
    Cloning,
    /// A local qubit is still entangled at the end of its module.
    NotUncomputed,
    /// A loop was analyzed on a bounded number of iterations.
    Truncated,
}

impl fmt::Display for DiagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagKind::Cloning => "no-cloning",
            DiagKind::NotUncomputed => "non-uncomputed-qubit",
            DiagKind::Truncated => "truncated-loop",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagKind,
    pub message: String,
    pub module: String,
    /// Index of the instruction in the module body (the enclosing top-level
    /// instruction for nested loops).
    pub index: usize,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] {}#{}: {}",
            self.severity, self.kind, self.module, self.index, self.message
        )
    }
}

pub fn has_errors(d: &[Diagnostic]) -> bool {
    d.iter().any(|d| d.severity == Severity::Error)
}
