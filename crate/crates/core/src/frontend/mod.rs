//! ScaffLite source language: lexing, parsing, pretty-printing and
//! semantic resolution into the IR.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod resolve;

pub use ast::Ast;
pub use parser::parse_scafflite;
pub use pretty::pretty;
pub use resolve::{resolve_library, resolve_semantics};

/// Parse and resolve in one step.
pub fn compile_source(src: &str) -> crate::Result<crate::ir::Program> {
    resolve_semantics(&parse_scafflite(src)?)
}

/// Parse and resolve a file that need not define `main`.
pub fn compile_library(src: &str) -> crate::Result<crate::ir::Program> {
    resolve_library(&parse_scafflite(src)?)
}
