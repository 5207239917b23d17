//! Compiler and static-analysis toolkit for a small imperative quantum
//! programming language: classical control resolution into hierarchical
//! quantum assembly, reversible-logic synthesis of classical oracles, and
//! program checks and estimators that scale through memoization.

pub mod analysis;
pub mod ctqg;
pub mod qasm;
pub mod error;
pub mod expr;
pub mod frontend;
pub mod gate;
pub mod flatten;
pub mod ir;
pub mod pipeline;
pub mod timing;

pub use error::{Error, Pos, Result};
pub use expr::{Expr, Value};
pub use gate::GateKind;
