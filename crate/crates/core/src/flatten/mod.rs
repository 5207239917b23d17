//! Classical control resolution: turn a resolved program into per-module
//! flat gate sequences, keeping only parallel (forall) and serial (repeat)
//! quantum loops.

pub mod dynamic;
pub mod expand;
pub mod pass;
pub mod reference;

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::expr::Value;
use crate::frontend::ast::ClassicalType;
use crate::gate::GateKind;
use crate::ir::callgraph::{traverse, CallEdge};

pub use dynamic::flatten_dynamic;
pub use expand::{expand, expand_trace, expanded_gate_counts, ExpandSink, PhysQubit, Trace};
pub use pass::flatten_pass_driven;

pub const DEFAULT_INSTRUCTION_BUDGET: u64 = 100_000_000;
pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000_000;

#[derive(Clone, Debug)]
pub struct FlattenOptions {
    /// Pass-driven: maximum total intermediate instruction count.
    pub instruction_budget: u64,
    /// Dynamic: maximum number of interpreted classical steps.
    pub step_limit: u64,
    /// Dynamic: reuse specializations with equal keys.
    pub memoize: bool,
    /// Already-flat bodies for reversible-logic modules, by module name.
    pub external: IndexMap<String, FlatModule>,
}

impl Default for FlattenOptions {
    fn default() -> Self {
        Self {
            instruction_budget: DEFAULT_INSTRUCTION_BUDGET,
            step_limit: DEFAULT_STEP_LIMIT,
            memoize: true,
            external: IndexMap::new(),
        }
    }
}

/// Identity of one specialization: module plus its classical arguments.
/// Reals participate by exact bit pattern.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemoKey {
    pub module: String,
    pub ints: Vec<i64>,
    pub reals: Vec<u64>,
}

impl MemoKey {
    pub fn new(module: &str, args: &[Value]) -> Self {
        let mut ints = Vec::new();
        let mut reals = Vec::new();
        for a in args {
            match a {
                Value::Int(i) => ints.push(*i),
                Value::Real(r) => reals.push(r.to_bits()),
            }
        }
        Self {
            module: module.to_string(),
            ints,
            reals,
        }
    }

    pub fn int_params(&self) -> String {
        join(self.ints.iter().map(|i| i.to_string()))
    }

    pub fn real_params(&self) -> String {
        join(self.reals.iter().map(|r| f64::from_bits(*r).to_string()))
    }
}

fn join(it: impl Iterator<Item = String>) -> String {
    it.collect::<Vec<_>>().join(" ")
}

impl fmt::Display for MemoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.module)?;
        if !self.ints.is_empty() {
            write!(f, " int[{}]", self.int_params())?;
        }
        if !self.reals.is_empty() {
            write!(f, " double[{}]", self.real_params())?;
        }
        Ok(())
    }
}

/// Coerce a classical value to the declared type, as C assignment would.
pub fn coerce(ty: ClassicalType, v: Value) -> Value {
    match (ty, v) {
        (ClassicalType::Int, Value::Real(r)) => Value::Int(r.trunc() as i64),
        (ClassicalType::Double, Value::Int(i)) => Value::Real(i as f64),
        (_, v) => v,
    }
}

/// `<orig>_<p1>_<p2>...`, with `-` written as `m` and `.` as `p`.
pub fn specialized_name(orig: &str, args: &[Value]) -> String {
    let mut name = orig.to_string();
    for a in args {
        let text = match a {
            Value::Int(i) => i.to_string(),
            Value::Real(r) => r.to_string(),
        };
        name.push('_');
        name.extend(text.chars().map(|c| match c {
            '-' => 'm',
            '.' => 'p',
            '+' => 'P',
            c => c,
        }));
    }
    name
}

/// Pick a name not yet in `taken`, starting from `base`.
pub fn unique_name(base: String, taken: &mut HashSet<String>) -> String {
    let mut name = base.clone();
    let mut k = 1;
    while taken.contains(&name) {
        k += 1;
        name = format!("{base}__{k}");
    }
    taken.insert(name.clone());
    name
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegDecl {
    pub name: String,
    pub size: u64,
    /// A single qubit written without an index.
    pub scalar: bool,
}

/// A constant qubit reference: register number (parameters first, then
/// locals) and index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitRef {
    pub reg: u32,
    pub index: u64,
}

/// The qubit operand of a forall: `start`, `start + stride`, ...
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Span {
    pub reg: u32,
    pub start: u64,
    /// +1 or -1.
    pub stride: i64,
}

impl Span {
    pub fn at(&self, k: u64) -> QubitRef {
        QubitRef {
            reg: self.reg,
            index: (self.start as i64 + self.stride * k as i64) as u64,
        }
    }
}

/// A contiguous argument slice bound to a callee parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ArgSlice {
    pub reg: u32,
    pub start: u64,
    pub len: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlatInst {
    Gate {
        kind: GateKind,
        qubits: Vec<QubitRef>,
        angle: Option<f64>,
    },
    Call {
        callee: String,
        args: Vec<ArgSlice>,
    },
    Forall {
        kind: GateKind,
        operands: Vec<Span>,
        count: u64,
        angle: Option<f64>,
    },
    Repeat {
        count: u64,
        body: Vec<FlatInst>,
    },
}

impl FlatInst {
    /// Visit each (kind, qubits, angle) of the gate or each forall iteration;
    /// calls and repeats are not entered.
    pub fn for_each_own_gate(&self, f: &mut impl FnMut(GateKind, &[QubitRef])) {
        match self {
            FlatInst::Gate { kind, qubits, .. } => f(*kind, qubits),
            FlatInst::Forall {
                kind,
                operands,
                count,
                ..
            } => {
                let mut qs = Vec::with_capacity(operands.len());
                for k in 0..*count {
                    qs.clear();
                    qs.extend(operands.iter().map(|s| s.at(k)));
                    f(*kind, &qs);
                }
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatModule {
    pub name: String,
    pub params: Vec<RegDecl>,
    pub locals: Vec<RegDecl>,
    pub body: Vec<FlatInst>,
}

impl FlatModule {
    pub fn reg(&self, r: u32) -> &RegDecl {
        let r = r as usize;
        if r < self.params.len() {
            &self.params[r]
        } else {
            &self.locals[r - self.params.len()]
        }
    }

    pub fn reg_count(&self) -> usize {
        self.params.len() + self.locals.len()
    }

    pub fn is_param(&self, r: u32) -> bool {
        (r as usize) < self.params.len()
    }

    pub fn reg_by_name(&self, name: &str) -> Option<u32> {
        self.params
            .iter()
            .chain(&self.locals)
            .position(|d| d.name == name)
            .map(|i| i as u32)
    }

    /// Display form of a qubit: `q[3]`, or `q` for scalars.
    pub fn qubit_name(&self, q: QubitRef) -> String {
        let d = self.reg(q.reg);
        if d.scalar {
            d.name.clone()
        } else {
            format!("{}[{}]", d.name, q.index)
        }
    }

    pub fn local_qubits(&self) -> u64 {
        self.locals.iter().map(|d| d.size).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecializedProgram {
    pub modules: IndexMap<String, FlatModule>,
    pub entry: String,
    pub specialization_index: IndexMap<MemoKey, String>,
}

impl SpecializedProgram {
    pub fn module(&self, name: &str) -> Result<&FlatModule> {
        self.modules
            .get(name)
            .ok_or_else(|| Error::Invalid(format!("module `{name}` is not defined")))
    }

    /// Modules with every callee before its callers; the entry is last.
    pub fn postorder(&self) -> Result<Vec<String>> {
        let nodes: Vec<String> = self.modules.keys().cloned().collect();
        let mut edges = Vec::new();
        for (name, m) in &self.modules {
            collect_calls(&m.body, &mut |callee| {
                edges.push(CallEdge {
                    caller: name.clone(),
                    callee: callee.to_string(),
                    site: 0,
                })
            });
        }
        for e in &edges {
            if !self.modules.contains_key(&e.callee) {
                return Err(Error::Invalid(format!(
                    "`{}` calls undefined module `{}`",
                    e.caller, e.callee
                )));
            }
        }
        let (_, post) = traverse(&nodes, &edges, &self.entry)?;
        // Unreachable modules first, reachable ones in dependency order.
        let reach = self.reachable();
        let mut out: Vec<String> = post.iter().filter(|n| !reach.contains(*n)).cloned().collect();
        out.extend(post.into_iter().filter(|n| reach.contains(n)));
        Ok(out)
    }

    pub fn reachable(&self) -> HashSet<String> {
        let mut seen = HashSet::new();
        let mut stack = vec![self.entry.clone()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(m) = self.modules.get(&n) {
                collect_calls(&m.body, &mut |c| stack.push(c.to_string()));
            }
        }
        seen
    }

    /// Drop modules not reachable from the entry.
    pub fn prune(&mut self) {
        let reach = self.reachable();
        self.modules.retain(|n, _| reach.contains(n));
        self.specialization_index.retain(|_, n| reach.contains(n));
    }

    /// Total instruction count over all module bodies (loops count their
    /// retained body once).
    pub fn instruction_count(&self) -> u64 {
        fn count(body: &[FlatInst]) -> u64 {
            body.iter()
                .map(|i| match i {
                    FlatInst::Repeat { body, .. } => 1 + count(body),
                    _ => 1,
                })
                .sum()
        }
        self.modules.values().map(|m| count(&m.body)).sum()
    }
}

pub fn collect_calls(body: &[FlatInst], f: &mut impl FnMut(&str)) {
    for i in body {
        match i {
            FlatInst::Call { callee, .. } => f(callee),
            FlatInst::Repeat { body, .. } => collect_calls(body, f),
            _ => {}
        }
    }
}
