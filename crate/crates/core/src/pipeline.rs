//! Source-to-output pipelines shared by the command line and the tests.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;

use crate::ctqg::netlist_text;
use crate::error::{Error, Result};
use crate::flatten::{flatten_dynamic, flatten_pass_driven, FlatModule, FlattenOptions, SpecializedProgram};
use crate::frontend::compile_source;
use crate::ir::Program;
use crate::qasm::{emit_qasm_with_budget, lower_toffoli, parse_qasm_hl, QasmDocument, QasmFormat};

/// How classical control is resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Rewrite passes to a fixpoint, then specialize.
    #[default]
    Pass,
    /// Interpret classical code directly while emitting specializations.
    Dynamic,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Pass => "pass",
            Strategy::Dynamic => "dynamic",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pass" => Ok(Strategy::Pass),
            "dynamic" => Ok(Strategy::Dynamic),
            other => Err(format!("unknown strategy `{other}` (expected pass or dynamic)")),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineOptions {
    pub strategy: Strategy,
    pub flatten: FlattenOptions,
    /// Replace every Toffoli by its Clifford+T sequence.
    pub lower_toffoli: bool,
}

/// Gate-level bodies of every reversible-logic module in `p`, written as
/// netlists and read back through the QASM parser.
pub fn synthesize_ctqg(p: &Program) -> Result<IndexMap<String, FlatModule>> {
    let mut out = IndexMap::new();
    for (name, m) in &p.modules {
        if m.is_ctqg() {
            let mut linked = parse_qasm_hl(&netlist_text(m)?)?;
            let body = linked
                .modules
                .shift_remove(name)
                .ok_or_else(|| Error::Invalid(format!("netlist for `{name}` lacks its module")))?;
            out.insert(name.clone(), body);
        }
    }
    Ok(out)
}

/// Synthesize reversible-logic modules, resolve classical control and
/// optionally lower Toffolis.
pub fn specialize(p: &Program, opts: &PipelineOptions) -> Result<SpecializedProgram> {
    let mut fo = opts.flatten.clone();
    fo.external.extend(synthesize_ctqg(p)?);
    let sp = match opts.strategy {
        Strategy::Pass => flatten_pass_driven(p, &fo)?,
        Strategy::Dynamic => flatten_dynamic(p, &fo)?,
    };
    Ok(if opts.lower_toffoli {
        lower_toffoli(&sp)
    } else {
        sp
    })
}

/// Parse, check and specialize source text.
pub fn specialize_source(src: &str, opts: &PipelineOptions) -> Result<SpecializedProgram> {
    specialize(&compile_source(src)?, opts)
}

/// Source text to a QASM document. `gate_budget` bounds fully expanded
/// output.
pub fn compile_to_qasm(
    src: &str,
    format: QasmFormat,
    opts: &PipelineOptions,
    gate_budget: u64,
) -> Result<QasmDocument> {
    let sp = specialize_source(src, opts)?;
    emit_qasm_with_budget(&sp, format, gate_budget)
}
