//! Conservative entanglement tracking over one module at a time.
//!
//! Multi-qubit gates merge the entanglement classes of their operands.
//! Reapplying a recorded CNOT/Toffoli whose controls have not changed since
//! the record undoes it; a target left without records leaves its class.
//! Calls merge the callee's final classes over its parameters.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::Result;
use crate::flatten::{FlatInst, FlatModule, QubitRef, SpecializedProgram};
use crate::gate::GateKind;
use crate::qasm::emit::{arg_text, decl_text, gate_line, header, param_text, span_text};

use super::{DiagKind, Diagnostic, Severity};

/// Loops with more gate executions than this are analyzed on two or three
/// iterations (matching the trip count's parity).
pub const UNROLL_LIMIT: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntanglementReport {
    pub module: String,
    /// The module as QASM-HL with entanglement comments.
    pub annotated: String,
    /// Classes of two or more qubits at the end, as labels like `b4`.
    pub final_classes: Vec<Vec<String>>,
    /// The same classes as qubit references.
    pub final_qubits: Vec<Vec<QubitRef>>,
    pub measured: Vec<QubitRef>,
    pub diagnostics: Vec<Diagnostic>,
}

impl EntanglementReport {
    pub fn final_set(&self) -> HashSet<String> {
        self.final_classes.iter().flatten().cloned().collect()
    }
}

/// Final classes of a module restricted to its parameters, and the
/// parameter qubits it changes.
#[derive(Clone, Debug, Default)]
struct Summary {
    classes: Vec<Vec<QubitRef>>,
    changed: Vec<QubitRef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Note {
    Merge(Vec<QubitRef>),
    Reverse(Vec<QubitRef>),
}

type RecordKey = (GateKind, QubitRef, Vec<QubitRef>);

/// Entanglement state of one module.
#[derive(Default)]
pub struct Tracker {
    time: u64,
    classes: Vec<Option<Vec<QubitRef>>>,
    class_of: HashMap<QubitRef, usize>,
    records: HashMap<RecordKey, Vec<u64>>,
    live: HashMap<QubitRef, usize>,
    last_changed: HashMap<QubitRef, u64>,
    removed_at: HashMap<QubitRef, u64>,
    measured: HashSet<QubitRef>,
}

impl Tracker {
    pub fn new() -> Self {
        Self::default()
    }

    fn class(&self, q: QubitRef) -> Vec<QubitRef> {
        match self.class_of.get(&q) {
            Some(c) => self.classes[*c].clone().unwrap_or_default(),
            None => vec![q],
        }
    }

    fn remove(&mut self, q: QubitRef) {
        if let Some(c) = self.class_of.remove(&q) {
            if let Some(members) = self.classes[c].as_mut() {
                members.retain(|m| *m != q);
                if members.len() < 2 {
                    for m in members.drain(..) {
                        self.class_of.remove(&m);
                    }
                    self.classes[c] = None;
                }
            }
        }
        self.removed_at.insert(q, self.time);
    }

    /// Merge `operands` and their classes; the order is operands first, then
    /// each operand's class in turn.
    fn merge(&mut self, operands: &[QubitRef]) -> Vec<QubitRef> {
        let mut list: Vec<QubitRef> = Vec::new();
        let mut seen = HashSet::new();
        for q in operands {
            if seen.insert(*q) {
                list.push(*q);
            }
        }
        let mut old = Vec::new();
        for q in operands {
            if let Some(c) = self.class_of.get(q).copied() {
                if !old.contains(&c) {
                    old.push(c);
                }
            }
            for m in self.class(*q) {
                if seen.insert(m) {
                    list.push(m);
                }
            }
        }
        for c in old {
            self.classes[c] = None;
        }
        let id = self.classes.len();
        for q in &list {
            self.class_of.insert(*q, id);
        }
        self.classes.push(Some(list.clone()));
        list
    }

    fn changed(&mut self, q: QubitRef) {
        self.last_changed.insert(q, self.time);
    }

    fn gate(&mut self, kind: GateKind, qubits: &[QubitRef]) -> Option<Note> {
        self.time += 1;
        if qubits.len() < 2 {
            let q = qubits[0];
            match kind {
                GateKind::MeasZ => {
                    self.remove(q);
                    self.measured.insert(q);
                }
                GateKind::PrepZ => self.remove(q),
                _ => {}
            }
            self.changed(q);
            return None;
        }
        let target = qubits[0];
        let mut controls = qubits[1..].to_vec();
        controls.sort();
        let key = (kind, target, controls);
        let undo = self.records.get(&key).and_then(|ts| ts.last()).is_some_and(|ts| {
            key.2
                .iter()
                .all(|c| self.last_changed.get(c).is_none_or(|t| t <= ts))
        });
        let note = if undo {
            self.records.get_mut(&key).unwrap().pop();
            let n = self.live.get_mut(&target).unwrap();
            *n -= 1;
            if *n == 0 {
                self.live.remove(&target);
                self.remove(target);
                Some(Note::Reverse(vec![target]))
            } else {
                None
            }
        } else {
            self.records.entry(key).or_default().push(self.time);
            *self.live.entry(target).or_insert(0) += 1;
            Some(Note::Merge(self.merge(qubits)))
        };
        self.changed(target);
        note
    }

    fn call(&mut self, s: &Summary, map: &dyn Fn(QubitRef) -> QubitRef) -> Option<Note> {
        self.time += 1;
        let mut merged = Vec::new();
        for c in &s.classes {
            let qs: Vec<QubitRef> = c.iter().map(|q| map(*q)).collect();
            for q in self.merge(&qs) {
                if !merged.contains(&q) {
                    merged.push(q);
                }
            }
        }
        for q in &s.changed {
            self.changed(map(*q));
        }
        (!merged.is_empty()).then_some(Note::Merge(merged))
    }

    /// Classes with two or more members, in creation order.
    pub fn final_classes(&self) -> Vec<Vec<QubitRef>> {
        self.classes
            .iter()
            .flatten()
            .filter(|c| c.len() > 1)
            .cloned()
            .collect()
    }

    /// Every live record's target and controls share a class unless one of
    /// them was removed after the record was made.
    pub fn consistent(&self) -> bool {
        let classes_disjoint = {
            let mut seen = HashSet::new();
            self.classes.iter().flatten().flatten().all(|q| seen.insert(*q))
        };
        let index_ok = self
            .class_of
            .iter()
            .all(|(q, c)| self.classes[*c].as_ref().is_some_and(|m| m.contains(q)));
        let records_ok = self.records.iter().all(|((_, t, cs), times)| {
            times.iter().all(|ts| {
                let intact = |q: &QubitRef| self.removed_at.get(q).is_none_or(|r| r < ts);
                !intact(t)
                    || cs.iter().filter(|c| intact(c)).all(|c| {
                        self.class_of.contains_key(t) && self.class_of.get(t) == self.class_of.get(c)
                    })
            })
        });
        classes_disjoint && index_ok && records_ok
    }
}

fn label(m: &FlatModule, q: QubitRef) -> String {
    let d = m.reg(q.reg);
    if d.scalar {
        d.name.clone()
    } else {
        format!("{}{}", d.name, q.index)
    }
}

struct ModuleRun<'a> {
    m: &'a FlatModule,
    summaries: &'a HashMap<String, Summary>,
    t: Tracker,
    diagnostics: Vec<Diagnostic>,
    out: String,
}

impl ModuleRun<'_> {
    fn notes_text(&self, notes: &[Note]) -> (Vec<String>, Vec<String>) {
        let mut merge = Vec::new();
        let mut reverse = Vec::new();
        for n in notes {
            let (dst, qs) = match n {
                Note::Merge(qs) => (&mut merge, qs),
                Note::Reverse(qs) => (&mut reverse, qs),
            };
            for q in qs {
                let l = label(self.m, *q);
                if !dst.contains(&l) {
                    dst.push(l);
                }
            }
        }
        (merge, reverse)
    }

    /// Run one instruction, returning the notes it produced.
    fn exec(&mut self, inst: &FlatInst, idx: usize) -> Vec<Note> {
        let mut notes = Vec::new();
        match inst {
            FlatInst::Gate { kind, qubits, .. } => notes.extend(self.t.gate(*kind, qubits)),
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
                    notes.extend(self.t.gate(*kind, &qs));
                }
            }
            FlatInst::Call { callee, args } => {
                if let Some(s) = self.summaries.get(callee) {
                    let map = |q: QubitRef| {
                        let a = args[q.reg as usize];
                        QubitRef {
                            reg: a.reg,
                            index: a.start + q.index,
                        }
                    };
                    notes.extend(self.t.call(s, &map));
                }
            }
            FlatInst::Repeat { count, body } => {
                let per: u64 = body.iter().map(weight).fold(0, u64::saturating_add);
                let runs = if count.saturating_mul(per) <= UNROLL_LIMIT {
                    *count
                } else {
                    self.diagnostics.push(Diagnostic {
                        severity: Severity::Info,
                        kind: DiagKind::Truncated,
                        message: format!(
                            "repeat ( {count} ) analyzed on {} iterations",
                            2 + count % 2
                        ),
                        module: self.m.name.clone(),
                        index: idx,
                    });
                    2 + count % 2
                };
                for _ in 0..runs {
                    for i in body {
                        notes.extend(self.exec(i, idx));
                    }
                }
            }
        }
        notes
    }

    /// Print `body` with annotations; loop bodies are annotated from their
    /// first iteration, later iterations run silently.
    fn print(&mut self, body: &[FlatInst], depth: usize, idx: Option<usize>) {
        let pad = "  ".repeat(depth);
        for (k, inst) in body.iter().enumerate() {
            let idx = idx.unwrap_or(k);
            if let FlatInst::Repeat { count, body: inner } = inst {
                let _ = writeln!(self.out, "{pad}repeat ( {count} ) {{");
                self.print(inner, depth + 1, Some(idx));
                let _ = writeln!(self.out, "{pad}}}");
                if *count > 1 {
                    let rest = FlatInst::Repeat {
                        count: count - 1,
                        body: inner.clone(),
                    };
                    self.exec(&rest, idx);
                }
                continue;
            }
            let line = self.line(inst);
            let notes = self.exec(inst, idx);
            let (merge, reverse) = self.notes_text(&notes);
            if reverse.is_empty() {
                let _ = writeln!(self.out, "{pad}{line}");
            } else {
                let _ = writeln!(self.out, "{pad}{line} // {}", reverse.join(", "));
            }
            if !merge.is_empty() {
                let _ = writeln!(self.out, "{pad}// {}", merge.join(", "));
            }
        }
    }

    fn line(&self, inst: &FlatInst) -> String {
        let m = self.m;
        match inst {
            FlatInst::Gate {
                kind,
                qubits,
                angle,
            } => {
                let ops: Vec<String> = qubits.iter().map(|q| m.qubit_name(*q)).collect();
                gate_line(*kind, &ops, *angle)
            }
            FlatInst::Forall {
                kind,
                operands,
                count,
                angle,
            } => {
                let ops: Vec<String> = operands.iter().map(|s| span_text(m, s, *count)).collect();
                gate_line(*kind, &ops, *angle)
            }
            FlatInst::Call { callee, args } => {
                let a: Vec<String> = args.iter().map(|a| arg_text(m, a)).collect();
                format!("{callee} ( {} );", a.join(" , "))
            }
            FlatInst::Repeat { .. } => unreachable!(),
        }
    }
}

fn weight(i: &FlatInst) -> u64 {
    match i {
        FlatInst::Gate { .. } | FlatInst::Call { .. } => 1,
        FlatInst::Forall { count, .. } => *count,
        FlatInst::Repeat { count, body } => {
            count.saturating_mul(body.iter().map(weight).fold(0, u64::saturating_add))
        }
    }
}

fn run_module(m: &FlatModule, summaries: &HashMap<String, Summary>) -> (EntanglementReport, Summary) {
    let mut r = ModuleRun {
        m,
        summaries,
        t: Tracker::new(),
        diagnostics: Vec::new(),
        out: String::new(),
    };
    let params: Vec<String> = m.params.iter().map(param_text).collect();
    r.out.push_str(&header(&m.name, &params));
    for d in &m.locals {
        let _ = writeln!(r.out, "  {}", decl_text(&d.name, d.size, d.scalar));
    }
    r.print(&m.body, 1, None);
    r.out.push_str("}\n");
    let final_qubits = r.t.final_classes();
    let final_classes: Vec<Vec<String>> = final_qubits
        .iter()
        .map(|c| c.iter().map(|q| label(m, *q)).collect())
        .collect();
    if !final_classes.is_empty() {
        r.out.push_str("// Final entanglements:\n");
        for c in &final_classes {
            let _ = writeln!(r.out, "// ({});", c.join(", "));
        }
    }
    let is_param = |q: &QubitRef| m.is_param(q.reg);
    let summary = Summary {
        classes: final_qubits
            .iter()
            .map(|c| c.iter().copied().filter(is_param).collect::<Vec<_>>())
            .filter(|c| c.len() > 1)
            .collect(),
        changed: r.t.last_changed.keys().copied().filter(is_param).collect(),
    };
    let mut measured: Vec<QubitRef> = r.t.measured.iter().copied().collect();
    measured.sort();
    let report = EntanglementReport {
        module: m.name.clone(),
        annotated: r.out,
        final_classes,
        final_qubits,
        measured,
        diagnostics: r.diagnostics,
    };
    (report, summary)
}

/// Analyze every module of `p` in call-graph postorder.
pub fn analyze_program_entanglement(p: &SpecializedProgram) -> Result<Vec<EntanglementReport>> {
    let mut summaries = HashMap::new();
    let mut out = Vec::new();
    for name in p.postorder()? {
        let (rep, sum) = run_module(p.module(&name)?, &summaries);
        summaries.insert(name, sum);
        out.push(rep);
    }
    Ok(out)
}

/// Analyze one module of `p`; its callees are analyzed for their summaries.
pub fn analyze_entanglement(p: &SpecializedProgram, module: &str) -> Result<EntanglementReport> {
    let reports = analyze_program_entanglement(p)?;
    reports
        .into_iter()
        .find(|r| r.module == module)
        .ok_or_else(|| crate::error::Error::Invalid(format!("module `{module}` is not defined")))
}

/// Warnings for local qubits still entangled at the end of their module and
/// never measured.
pub fn check_disentangled(m: &FlatModule, r: &EntanglementReport) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for q in r.final_qubits.iter().flatten() {
        if m.is_param(q.reg) || r.measured.contains(q) {
            continue;
        }
        out.push(Diagnostic {
            severity: Severity::Warning,
            kind: DiagKind::NotUncomputed,
            message: format!("local qubit {} is still entangled at the end of `{}`", m.qubit_name(*q), m.name),
            module: m.name.clone(),
            index: m.body.len().saturating_sub(1),
        });
    }
    out
}
