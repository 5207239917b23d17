use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::flatten::expand::{expand, ExpandSink, PhysQubit};
use crate::flatten::{ArgSlice, FlatInst, FlatModule, RegDecl, Span, SpecializedProgram};
use crate::gate::GateKind;

use super::{QasmDocument, QasmFormat};

/// Default refusal threshold for fully expanded output, in gates.
pub const DEFAULT_EXPANSION_BUDGET: u64 = 10_000_000;

pub fn emit_qasm(p: &SpecializedProgram, fmt: QasmFormat) -> Result<QasmDocument> {
    emit_qasm_with_budget(p, fmt, DEFAULT_EXPANSION_BUDGET)
}

/// Emit `p`. FLAT and HIER refuse with `BudgetExceeded` when the gate lines
/// they would print exceed `budget`.
pub fn emit_qasm_with_budget(
    p: &SpecializedProgram,
    fmt: QasmFormat,
    budget: u64,
) -> Result<QasmDocument> {
    let mut text = String::new();
    match fmt {
        QasmFormat::Flat => emit_flat(p, budget, &mut text)?,
        QasmFormat::Hier | QasmFormat::HierLoops => {
            let loops = fmt == QasmFormat::HierLoops;
            let order = p.postorder()?;
            let reach = p.reachable();
            if !loops {
                let printed: u128 = order
                    .iter()
                    .filter(|n| reach.contains(*n))
                    .map(|n| p.modules[n.as_str()].body.iter().map(unrolled_lines).fold(0u128, u128::saturating_add))
                    .fold(0, u128::saturating_add);
                if printed > budget as u128 {
                    return Err(Error::BudgetExceeded {
                        budget,
                        what: "lines",
                    });
                }
            }
            for name in order.iter().filter(|n| reach.contains(*n)) {
                emit_module(&p.modules[name.as_str()], loops, &mut text);
            }
        }
    }
    Ok(QasmDocument::new(text, fmt, gate_totals(p)?))
}

fn unrolled_lines(i: &FlatInst) -> u128 {
    match i {
        FlatInst::Gate { .. } | FlatInst::Call { .. } => 1,
        FlatInst::Forall { count, .. } => *count as u128,
        FlatInst::Repeat { count, body } => (*count as u128)
            .saturating_mul(body.iter().map(unrolled_lines).fold(0, u128::saturating_add)),
    }
}

/// Expanded gate count per kind for the whole program.
pub fn gate_totals(p: &SpecializedProgram) -> Result<BTreeMap<GateKind, u128>> {
    let mut memo: HashMap<String, BTreeMap<GateKind, u128>> = HashMap::new();
    fn body(
        b: &[FlatInst],
        memo: &HashMap<String, BTreeMap<GateKind, u128>>,
        mult: u128,
        out: &mut BTreeMap<GateKind, u128>,
    ) {
        let add = |out: &mut BTreeMap<GateKind, u128>, k: GateKind, n: u128| {
            let e = out.entry(k).or_insert(0);
            *e = e.saturating_add(n);
        };
        for i in b {
            match i {
                FlatInst::Gate { kind, .. } => add(out, *kind, mult),
                FlatInst::Forall { kind, count, .. } => {
                    add(out, *kind, mult.saturating_mul(*count as u128))
                }
                FlatInst::Call { callee, .. } => {
                    for (k, n) in memo.get(callee).into_iter().flatten() {
                        add(out, *k, mult.saturating_mul(*n));
                    }
                }
                FlatInst::Repeat { count, body: inner } => {
                    body(inner, memo, mult.saturating_mul(*count as u128), out)
                }
            }
        }
    }
    for name in p.postorder()? {
        let mut counts = BTreeMap::new();
        body(&p.modules[name.as_str()].body, &memo, 1, &mut counts);
        memo.insert(name, counts);
    }
    Ok(memo.remove(&p.entry).unwrap_or_default())
}

pub(crate) fn format_angle(a: f64) -> String {
    format!("{a:.16e}")
}

pub(crate) fn param_text(d: &RegDecl) -> String {
    if d.scalar {
        format!("qbit {}", d.name)
    } else {
        format!("qbit* {}", d.name)
    }
}

pub(crate) fn decl_text(name: &str, size: u64, scalar: bool) -> String {
    if scalar {
        format!("qbit {name};")
    } else {
        format!("qbit {name}[{size}];")
    }
}

pub(crate) fn header(name: &str, params: &[String]) -> String {
    format!("module {name} ( {} )\n{{\n", params.join(" , "))
}

fn emit_module(m: &FlatModule, loops: bool, out: &mut String) {
    let params: Vec<String> = m.params.iter().map(param_text).collect();
    out.push_str(&header(&m.name, &params));
    for d in &m.locals {
        let _ = writeln!(out, "  {}", decl_text(&d.name, d.size, d.scalar));
    }
    emit_body(m, &m.body, loops, 1, out);
    out.push_str("}\n");
}

pub(crate) fn gate_line(kind: GateKind, operands: &[String], angle: Option<f64>) -> String {
    let mut ops = operands.join(" , ");
    if let Some(a) = angle {
        ops.push_str(" , ");
        ops.push_str(&format_angle(a));
    }
    format!("{} ( {ops} );", kind.name())
}

pub(crate) fn span_text(m: &FlatModule, s: &Span, count: u64) -> String {
    let last = s.at(count - 1).index;
    format!("{}[{}:{}]", m.reg(s.reg).name, s.start, last)
}

pub(crate) fn arg_text(m: &FlatModule, a: &ArgSlice) -> String {
    let d = m.reg(a.reg);
    if a.start == 0 && a.len == d.size {
        d.name.clone()
    } else if a.len == 1 {
        format!("{}[{}]", d.name, a.start)
    } else {
        format!("{}[{}:{}]", d.name, a.start, a.start + a.len - 1)
    }
}

fn emit_body(m: &FlatModule, body: &[FlatInst], loops: bool, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    for i in body {
        match i {
            FlatInst::Gate {
                kind,
                qubits,
                angle,
            } => {
                let ops: Vec<String> = qubits.iter().map(|q| m.qubit_name(*q)).collect();
                let _ = writeln!(out, "{pad}{}", gate_line(*kind, &ops, *angle));
            }
            FlatInst::Forall {
                kind,
                operands,
                count,
                angle,
            } => {
                if *count == 0 {
                    continue;
                }
                if loops {
                    let ops: Vec<String> =
                        operands.iter().map(|s| span_text(m, s, *count)).collect();
                    let _ = writeln!(out, "{pad}{}", gate_line(*kind, &ops, *angle));
                } else {
                    for k in 0..*count {
                        let ops: Vec<String> =
                            operands.iter().map(|s| m.qubit_name(s.at(k))).collect();
                        let _ = writeln!(out, "{pad}{}", gate_line(*kind, &ops, *angle));
                    }
                }
            }
            FlatInst::Call { callee, args } => {
                let a: Vec<String> = args.iter().map(|a| arg_text(m, a)).collect();
                let _ = writeln!(out, "{pad}{callee} ( {} );", a.join(" , "));
            }
            FlatInst::Repeat { count, body } => {
                if loops {
                    let _ = writeln!(out, "{pad}repeat ( {count} ) {{");
                    emit_body(m, body, loops, depth + 1, out);
                    let _ = writeln!(out, "{pad}}}");
                } else {
                    for _ in 0..*count {
                        emit_body(m, body, loops, depth, out);
                    }
                }
            }
        }
    }
}

struct FlatWriter<'a> {
    out: &'a mut String,
    arrays: Vec<(String, bool)>,
    /// Entry parameters: already in the header, not redeclared.
    skip: usize,
}

impl FlatWriter<'_> {
    fn label(&self, q: PhysQubit) -> String {
        let (name, scalar) = &self.arrays[q.array as usize];
        if *scalar {
            name.clone()
        } else {
            format!("{name}[{}]", q.index)
        }
    }
}

impl ExpandSink for FlatWriter<'_> {
    fn declare(&mut self, name: &str, size: u64, scalar: bool) {
        if self.arrays.len() >= self.skip {
            let _ = writeln!(self.out, "  {}", decl_text(name, size, scalar));
        }
        self.arrays.push((name.to_string(), scalar));
    }

    fn gate(&mut self, kind: GateKind, qubits: &[PhysQubit], angle: Option<f64>) -> Result<()> {
        let ops: Vec<String> = qubits.iter().map(|q| self.label(*q)).collect();
        let _ = writeln!(self.out, "  {}", gate_line(kind, &ops, angle));
        Ok(())
    }
}

fn emit_flat(p: &SpecializedProgram, budget: u64, out: &mut String) -> Result<()> {
    let entry = p.module(&p.entry)?;
    let params: Vec<String> = entry.params.iter().map(param_text).collect();
    let mut body = String::new();
    let mut w = FlatWriter {
        out: &mut body,
        arrays: Vec::new(),
        skip: entry.params.len(),
    };
    expand(p, &mut w, Some(budget))?;
    out.push_str(&header(&p.entry, &params));
    out.push_str(&body);
    out.push_str("}\n");
    Ok(())
}
