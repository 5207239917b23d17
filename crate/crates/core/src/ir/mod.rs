//! Typed intermediate representation of resolved programs, the module call
//! graph, and loop classification.

pub mod callgraph;
pub mod loops;

use std::fmt::{self, Write};

use indexmap::IndexMap;

use crate::error::Pos;
use crate::expr::{BinOp, Expr};
use crate::frontend::ast::{ClassicalType, Stmt};
use crate::gate::GateKind;

pub use callgraph::{build_call_graph, CallGraph};
pub use loops::{classify_loops, LoopClass};

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub modules: IndexMap<String, ModuleDef>,
    pub entry: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamKind {
    /// A qubit array (or a scalar qubit, which behaves as an array of one).
    Qubits { size: Expr, scalar: bool },
    Classical(ClassicalType),
    /// A reversible-logic integer register of the given width.
    Register(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDef {
    pub name: String,
    pub kind: ParamKind,
    pub pos: Pos,
}

impl ParamDef {
    pub fn is_quantum(&self) -> bool {
        !matches!(self.kind, ParamKind::Classical(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalDecl {
    pub name: String,
    pub size: Expr,
    pub scalar: bool,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModuleDef {
    pub name: String,
    pub params: Vec<ParamDef>,
    pub locals: Vec<LocalDecl>,
    pub body: Vec<Inst>,
    pub ctqg: Option<CtqgModuleIr>,
    pub pos: Pos,
}

impl ModuleDef {
    pub fn is_ctqg(&self) -> bool {
        self.ctqg.is_some()
    }

    pub fn qubit_params(&self) -> impl Iterator<Item = &ParamDef> {
        self.params.iter().filter(|p| p.is_quantum())
    }

    pub fn classical_params(&self) -> impl Iterator<Item = (&str, ClassicalType)> {
        self.params.iter().filter_map(|p| match p.kind {
            ParamKind::Classical(t) => Some((p.name.as_str(), t)),
            _ => None,
        })
    }
}

/// Register-level body of a reversible-logic module.
#[derive(Clone, Debug, PartialEq)]
pub struct CtqgModuleIr {
    /// Parameter registers followed by locally declared ones.
    pub registers: Vec<(String, u32)>,
    pub body: Vec<Stmt>,
}

/// One qubit reference `name[index]`; scalar qubits use index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitRef {
    pub name: String,
    pub index: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum QubitArg {
    Whole(String),
    Index(String, Expr),
    /// Inclusive bounds.
    Slice(String, Expr, Expr),
}

impl QubitArg {
    pub fn name(&self) -> &str {
        match self {
            QubitArg::Whole(n) | QubitArg::Index(n, _) | QubitArg::Slice(n, ..) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CallArg {
    Qubits(QubitArg),
    Classical(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inst {
    pub kind: InstKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InstKind {
    Gate {
        kind: GateKind,
        operands: Vec<QubitRef>,
        angle: Option<Expr>,
    },
    Call {
        callee: String,
        args: Vec<CallArg>,
    },
    /// `for (var = init; var cond bound; var += step) body`; `var` is
    /// declared by an earlier `Let`.
    Loop {
        var: String,
        init: Expr,
        cond: BinOp,
        bound: Expr,
        step: Expr,
        body: Vec<Inst>,
        class: LoopClass,
    },
    Cond {
        guard: Expr,
        then: Vec<Inst>,
        els: Vec<Inst>,
    },
    Let {
        name: String,
        ty: ClassicalType,
        value: Option<Expr>,
    },
    Assign {
        name: String,
        value: Expr,
    },
}

impl Inst {
    pub fn new(kind: InstKind, pos: Pos) -> Self {
        Self { kind, pos }
    }

    /// Number of instructions in this subtree, including itself.
    pub fn size(&self) -> u64 {
        1 + match &self.kind {
            InstKind::Loop { body, .. } => body_size(body),
            InstKind::Cond { then, els, .. } => body_size(then) + body_size(els),
            _ => 0,
        }
    }

    /// Visit every expression in this instruction, not descending into
    /// nested bodies.
    pub fn for_each_expr(&self, f: &mut impl FnMut(&Expr)) {
        match &self.kind {
            InstKind::Gate {
                operands, angle, ..
            } => {
                operands.iter().for_each(|o| f(&o.index));
                if let Some(a) = angle {
                    f(a);
                }
            }
            InstKind::Call { args, .. } => {
                for a in args {
                    match a {
                        CallArg::Classical(e) => f(e),
                        CallArg::Qubits(QubitArg::Whole(_)) => {}
                        CallArg::Qubits(QubitArg::Index(_, e)) => f(e),
                        CallArg::Qubits(QubitArg::Slice(_, a, b)) => {
                            f(a);
                            f(b);
                        }
                    }
                }
            }
            InstKind::Loop {
                init, bound, step, ..
            } => {
                f(init);
                f(bound);
                f(step);
            }
            InstKind::Cond { guard, .. } => f(guard),
            InstKind::Let { value, .. } => {
                if let Some(v) = value {
                    f(v);
                }
            }
            InstKind::Assign { value, .. } => f(value),
        }
    }

    pub fn children(&self) -> Vec<&Vec<Inst>> {
        match &self.kind {
            InstKind::Loop { body, .. } => vec![body],
            InstKind::Cond { then, els, .. } => vec![then, els],
            _ => Vec::new(),
        }
    }
}

pub fn body_size(body: &[Inst]) -> u64 {
    body.iter().map(Inst::size).sum()
}

/// Whether any expression in `body` (recursively) mentions `var`.
pub fn body_mentions(body: &[Inst], var: &str) -> bool {
    body.iter().any(|i| {
        let mut hit = false;
        i.for_each_expr(&mut |e| hit |= e.mentions(var));
        if let InstKind::Assign { name, .. } | InstKind::Let { name, .. } = &i.kind {
            hit |= name == var;
        }
        if let InstKind::Loop { var: v, .. } = &i.kind {
            hit |= v == var;
        }
        hit || i.children().iter().any(|b| body_mentions(b, var))
    })
}

/// Names assigned (or declared) anywhere in `body`, loop variables included.
pub fn assigned_vars(body: &[Inst], out: &mut Vec<String>) {
    for i in body {
        match &i.kind {
            InstKind::Let { name, .. } | InstKind::Assign { name, .. } => out.push(name.clone()),
            InstKind::Loop { var, .. } => out.push(var.clone()),
            _ => {}
        }
        for b in i.children() {
            assigned_vars(b, out);
        }
    }
}

impl fmt::Display for Program {
    /// Annotated text dump for debugging.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for m in self.modules.values() {
            let params: Vec<String> = m
                .params
                .iter()
                .map(|p| match &p.kind {
                    ParamKind::Qubits { scalar: true, .. } => format!("qbit {}", p.name),
                    ParamKind::Qubits { size, .. } => format!("qbit {}[{size}]", p.name),
                    ParamKind::Classical(t) => format!("{} {}", t.keyword(), p.name),
                    ParamKind::Register(w) => format!("qint[{w}] {}", p.name),
                })
                .collect();
            let tag = if m.is_ctqg() { " ; ctqg" } else { "" };
            let _ = writeln!(out, "module {}({}){tag}", m.name, params.join(", "));
            for l in &m.locals {
                let _ = writeln!(out, "  local {}[{}]", l.name, l.size);
            }
            dump_body(&mut out, &m.body, 1);
        }
        f.write_str(&out)
    }
}

fn dump_body(out: &mut String, body: &[Inst], depth: usize) {
    for i in body {
        let pad = "  ".repeat(depth);
        match &i.kind {
            InstKind::Gate {
                kind,
                operands,
                angle,
            } => {
                let mut ops: Vec<String> = operands
                    .iter()
                    .map(|o| format!("{}[{}]", o.name, o.index))
                    .collect();
                if let Some(a) = angle {
                    ops.push(a.to_string());
                }
                let _ = writeln!(out, "{pad}{kind} {}", ops.join(", "));
            }
            InstKind::Call { callee, args } => {
                let args: Vec<String> = args
                    .iter()
                    .map(|a| match a {
                        CallArg::Classical(e) => e.to_string(),
                        CallArg::Qubits(QubitArg::Whole(n)) => n.clone(),
                        CallArg::Qubits(QubitArg::Index(n, e)) => format!("{n}[{e}]"),
                        CallArg::Qubits(QubitArg::Slice(n, a, b)) => format!("{n}[{a}:{b}]"),
                    })
                    .collect();
                let _ = writeln!(out, "{pad}call {callee}({})", args.join(", "));
            }
            InstKind::Loop {
                var,
                init,
                cond,
                bound,
                step,
                body,
                class,
            } => {
                let _ = writeln!(
                    out,
                    "{pad}loop {var} = {init}; {var} {} {bound}; += {step} ; {class}",
                    cond.symbol()
                );
                dump_body(out, body, depth + 1);
            }
            InstKind::Cond { guard, then, els } => {
                let _ = writeln!(out, "{pad}if {guard}");
                dump_body(out, then, depth + 1);
                if !els.is_empty() {
                    let _ = writeln!(out, "{pad}else");
                    dump_body(out, els, depth + 1);
                }
            }
            InstKind::Let { name, ty, value } => match value {
                Some(v) => {
                    let _ = writeln!(out, "{pad}{} {name} = {v}", ty.keyword());
                }
                None => {
                    let _ = writeln!(out, "{pad}{} {name}", ty.keyword());
                }
            },
            InstKind::Assign { name, value } => {
                let _ = writeln!(out, "{pad}{name} = {value}");
            }
        }
    }
}
