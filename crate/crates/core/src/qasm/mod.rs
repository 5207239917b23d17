//! Textual quantum assembly at three levels of retained structure, the
//! reader for the loop-retaining form, Toffoli lowering and a small
//! state-vector simulator.

pub mod emit;
pub mod parse;
pub mod statevec;
pub mod toffoli;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::gate::GateKind;

pub use emit::{emit_qasm, emit_qasm_with_budget, gate_totals, DEFAULT_EXPANSION_BUDGET};
pub use parse::parse_qasm_hl;
pub use statevec::{simulate_statevector, SimGate, StateVector};
pub use toffoli::{lower_toffoli, toffoli_sequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QasmFormat {
    /// Everything inlined and unrolled.
    Flat,
    /// One definition per module, loops unrolled.
    Hier,
    /// One definition per module, parallel slices and repeat blocks kept.
    HierLoops,
}

impl QasmFormat {
    pub fn name(self) -> &'static str {
        match self {
            QasmFormat::Flat => "qasm-f",
            QasmFormat::Hier => "qasm-h",
            QasmFormat::HierLoops => "qasm-hl",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            QasmFormat::Flat => "qasmf",
            QasmFormat::Hier => "qasmh",
            QasmFormat::HierLoops => "qasmhl",
        }
    }
}

impl fmt::Display for QasmFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QasmFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "qasm-f" | "f" | "flat" => Ok(QasmFormat::Flat),
            "qasm-h" | "h" | "hier" => Ok(QasmFormat::Hier),
            "qasm-hl" | "hl" | "hier-loops" => Ok(QasmFormat::HierLoops),
            _ => Err(format!("unknown format `{s}` (expected qasm-f, qasm-h or qasm-hl)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QasmDocument {
    pub text: String,
    pub format: QasmFormat,
    /// Gates of the fully expanded circuit, by kind.
    pub gate_counts: BTreeMap<GateKind, u128>,
}

impl QasmDocument {
    pub fn new(text: String, format: QasmFormat, gate_counts: BTreeMap<GateKind, u128>) -> Self {
        Self {
            text,
            format,
            gate_counts,
        }
    }

    pub fn line_count(&self) -> usize {
        self.text.lines().count()
    }

    pub fn total_gates(&self) -> u128 {
        self.gate_counts.values().fold(0, |a, b| a.saturating_add(*b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::flatten::{expand_trace, flatten_pass_driven, FlattenOptions, SpecializedProgram};
    use crate::frontend::compile_source;

    fn flat(src: &str) -> SpecializedProgram {
        flatten_pass_driven(&compile_source(src).unwrap(), &FlattenOptions::default()).unwrap()
    }

    const PARALLEL_LAYER: &str = include_str!("../../fixtures/parallel_layer.scf");
    const ORACLE_LOOP: &str = include_str!("../../fixtures/oracle_loop.scf");

    #[test]
    fn loops_are_kept_as_slices() {
        let d = emit_qasm(&flat(PARALLEL_LAYER), QasmFormat::HierLoops).unwrap();
        let want = "module foo ( qbit* q )\n{\n  H ( q[0:999] );\n  CNOT ( q[999] , q[0] );\n}\n\
                    module main (  )\n{\n  qbit b[1000];\n  foo ( b );\n}\n";
        assert_eq!(d.text, want);
        assert_eq!(d.gate_counts[&crate::gate::GateKind::H], 1000);
    }

    #[test]
    fn hierarchical_unrolls_loops() {
        let d = emit_qasm(&flat(PARALLEL_LAYER), QasmFormat::Hier).unwrap();
        assert_eq!(d.text.matches("  H ( q[").count(), 1000);
        assert!(d.text.contains("  H ( q[999] );\n  CNOT ( q[999] , q[0] );\n}"));
        let f = emit_qasm(&flat(PARALLEL_LAYER), QasmFormat::Flat).unwrap();
        assert!(f.text.starts_with("module main (  )\n{\n  qbit b[1000];\n  H ( b[0] );\n"));
        assert_eq!(f.line_count(), 1005);
    }

    #[test]
    fn empty_main() {
        let p = flat("module main() { }");
        for fmt in [QasmFormat::Flat, QasmFormat::Hier, QasmFormat::HierLoops] {
            assert_eq!(emit_qasm(&p, fmt).unwrap().text, "module main (  )\n{\n}\n");
        }
    }

    #[test]
    fn parse_round_trips() {
        for src in [PARALLEL_LAYER, ORACLE_LOOP] {
            let p = flat(src);
            for fmt in [QasmFormat::HierLoops, QasmFormat::Hier, QasmFormat::Flat] {
                let d = emit_qasm(&p, fmt).unwrap();
                let back = parse_qasm_hl(&d.text).unwrap();
                assert_eq!(emit_qasm(&back, fmt).unwrap().text, d.text, "{fmt}");
                let (a, b) = (expand_trace(&p, None).unwrap(), expand_trace(&back, None).unwrap());
                assert_eq!(a.kind_counts(), b.kind_counts());
            }
        }
    }

    #[test]
    fn parsed_slice_is_a_forall() {
        let d = "module foo ( qbit* q )\n{\n  H ( q[0:999] );\n  CNOT ( q[999] , q[0] );\n}\nmodule main (  )\n{\n  qbit b[1000];\n  foo ( b );\n}\n";
        let p = parse_qasm_hl(d).unwrap();
        let foo = &p.modules["foo"];
        assert_eq!(foo.params[0].size, 1000);
        assert!(matches!(
            foo.body[0],
            crate::flatten::FlatInst::Forall { kind: crate::gate::GateKind::H, count: 1000, .. }
        ));
    }

    #[test]
    fn garbage_is_a_syntax_error() {
        let d = "module main (  )\n{\n  H q[[\n}\n";
        assert!(matches!(parse_qasm_hl(d), Err(Error::QasmSyntax { line: 3, .. })));
    }

    #[test]
    fn flat_output_respects_budget() {
        let p = flat(PARALLEL_LAYER);
        assert!(matches!(
            emit_qasm_with_budget(&p, QasmFormat::Flat, 100),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(emit_qasm_with_budget(&p, QasmFormat::HierLoops, 1).is_ok());
    }
}
