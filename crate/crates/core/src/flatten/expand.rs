use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::gate::GateKind;

use super::{FlatInst, FlatModule, SpecializedProgram};

/// A qubit of the fully expanded circuit: declared array number and index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhysQubit {
    pub array: u32,
    pub index: u64,
}

/// Receiver of a full expansion: array declarations, then gates in order.
pub trait ExpandSink {
    fn declare(&mut self, name: &str, size: u64, scalar: bool);
    fn gate(&mut self, kind: GateKind, qubits: &[PhysQubit], angle: Option<f64>) -> Result<()>;
}

/// Total expanded gate count per module, saturating.
pub fn expanded_gate_counts(p: &SpecializedProgram) -> Result<HashMap<String, u128>> {
    let mut memo: HashMap<String, u128> = HashMap::new();
    for name in p.postorder()? {
        let m = p.module(&name)?;
        let n = body_gates(&m.body, &memo);
        memo.insert(name, n);
    }
    Ok(memo)
}

fn body_gates(body: &[FlatInst], memo: &HashMap<String, u128>) -> u128 {
    body.iter().fold(0u128, |acc, i| {
        acc.saturating_add(match i {
            FlatInst::Gate { .. } => 1,
            FlatInst::Forall { count, .. } => *count as u128,
            FlatInst::Call { callee, .. } => memo.get(callee).copied().unwrap_or(0),
            FlatInst::Repeat { count, body } => {
                (*count as u128).saturating_mul(body_gates(body, memo))
            }
        })
    })
}

/// Inline every call and unroll every loop, streaming gates to `sink`.
/// Fails with `BudgetExceeded` before emitting anything if the expansion
/// would exceed `budget` gates. Returns the number of gates emitted.
pub fn expand(p: &SpecializedProgram, sink: &mut impl ExpandSink, budget: Option<u64>) -> Result<u64> {
    let counts = expanded_gate_counts(p)?;
    let total = counts.get(&p.entry).copied().unwrap_or(0);
    if let Some(b) = budget {
        if total > b as u128 {
            return Err(Error::BudgetExceeded {
                budget: b,
                what: "gates",
            });
        }
    }
    let entry = p.module(&p.entry)?;
    let mut ex = Expander {
        p,
        sink,
        counts,
        arrays: 0,
        instances: 0,
        emitted: 0,
    };
    let mut binding = Vec::new();
    for d in &entry.params {
        binding.push((ex.arrays, 0));
        ex.sink.declare(&d.name, d.size, d.scalar);
        ex.arrays += 1;
    }
    ex.module(entry, &binding, true)?;
    Ok(ex.emitted)
}

struct Expander<'a, S> {
    p: &'a SpecializedProgram,
    sink: &'a mut S,
    counts: HashMap<String, u128>,
    arrays: u32,
    instances: u64,
    emitted: u64,
}

impl<S: ExpandSink> Expander<'_, S> {
    fn module(&mut self, m: &FlatModule, params: &[(u32, u64)], top: bool) -> Result<()> {
        let mut map: Vec<(u32, u64)> = params.to_vec();
        let instance = self.instances;
        if !m.locals.is_empty() {
            self.instances += 1;
        }
        for d in &m.locals {
            let name = if top {
                d.name.clone()
            } else {
                format!("{}_i{instance}", d.name)
            };
            self.sink.declare(&name, d.size, d.scalar);
            map.push((self.arrays, 0));
            self.arrays += 1;
        }
        self.body(&m.body, &map)
    }

    fn body(&mut self, body: &[FlatInst], map: &[(u32, u64)]) -> Result<()> {
        let phys = |q: super::QubitRef| {
            let (array, off) = map[q.reg as usize];
            PhysQubit {
                array,
                index: off + q.index,
            }
        };
        let mut qs: Vec<PhysQubit> = Vec::with_capacity(3);
        for inst in body {
            match inst {
                FlatInst::Gate {
                    kind,
                    qubits,
                    angle,
                } => {
                    qs.clear();
                    qs.extend(qubits.iter().map(|q| phys(*q)));
                    self.sink.gate(*kind, &qs, *angle)?;
                    self.emitted += 1;
                }
                FlatInst::Forall {
                    kind,
                    operands,
                    count,
                    angle,
                } => {
                    for k in 0..*count {
                        qs.clear();
                        qs.extend(operands.iter().map(|s| phys(s.at(k))));
                        self.sink.gate(*kind, &qs, *angle)?;
                        self.emitted += 1;
                    }
                }
                FlatInst::Call { callee, args } => {
                    let m = self.p.module(callee)?;
                    if self.counts.get(callee).copied().unwrap_or(0) == 0
                        && !declares(std::slice::from_ref(inst), self.p)
                    {
                        continue;
                    }
                    let binding: Vec<(u32, u64)> = args
                        .iter()
                        .map(|a| {
                            let (array, off) = map[a.reg as usize];
                            (array, off + a.start)
                        })
                        .collect();
                    self.module(m, &binding, false)?;
                }
                FlatInst::Repeat { count, body } => {
                    if body_gates(body, &self.counts) == 0 && !declares(body, self.p) {
                        continue;
                    }
                    for _ in 0..*count {
                        self.body(body, map)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn declares(body: &[FlatInst], p: &SpecializedProgram) -> bool {
    body.iter().any(|i| match i {
        FlatInst::Call { callee, .. } => p
            .modules
            .get(callee)
            .is_some_and(|m| !m.locals.is_empty() || declares(&m.body, p)),
        FlatInst::Repeat { body, .. } => declares(body, p),
        _ => false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraceGate {
    pub kind: GateKind,
    pub qubits: Vec<PhysQubit>,
    /// Bit pattern of the angle, if any.
    pub angle: Option<u64>,
}

/// A fully expanded circuit held in memory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub arrays: Vec<(String, u64)>,
    pub gates: Vec<TraceGate>,
}

impl ExpandSink for Trace {
    fn declare(&mut self, name: &str, size: u64, _scalar: bool) {
        self.arrays.push((name.to_string(), size));
    }

    fn gate(&mut self, kind: GateKind, qubits: &[PhysQubit], angle: Option<f64>) -> Result<()> {
        self.gates.push(TraceGate {
            kind,
            qubits: qubits.to_vec(),
            angle: angle.map(f64::to_bits),
        });
        Ok(())
    }
}

impl Trace {
    /// Gate occurrences with multiplicity, order ignored.
    pub fn multiset(&self) -> BTreeMap<&TraceGate, usize> {
        let mut m = BTreeMap::new();
        for g in &self.gates {
            *m.entry(g).or_insert(0) += 1;
        }
        m
    }

    /// For every qubit, the ordered list of gates touching it. Two traces
    /// with equal projections are equal up to reordering of independent
    /// gates.
    pub fn per_qubit(&self) -> BTreeMap<PhysQubit, Vec<&TraceGate>> {
        let mut m: BTreeMap<PhysQubit, Vec<&TraceGate>> = BTreeMap::new();
        for g in &self.gates {
            for q in &g.qubits {
                m.entry(*q).or_default().push(g);
            }
        }
        m
    }

    pub fn kind_counts(&self) -> BTreeMap<GateKind, u64> {
        let mut m = BTreeMap::new();
        for g in &self.gates {
            *m.entry(g.kind).or_insert(0) += 1;
        }
        m
    }

    pub fn qubit_label(&self, q: PhysQubit) -> String {
        format!("{}[{}]", self.arrays[q.array as usize].0, q.index)
    }
}

/// Expand into memory.
pub fn expand_trace(p: &SpecializedProgram, budget: Option<u64>) -> Result<Trace> {
    let mut t = Trace::default();
    expand(p, &mut t, budget)?;
    Ok(t)
}
