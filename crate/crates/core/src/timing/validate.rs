use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::flatten::{
    expand, expanded_gate_counts, ExpandSink, FlatInst, FlatModule, PhysQubit, SpecializedProgram,
};
use crate::gate::GateKind;

use super::compose::CpEstimate;
use super::schedule::{forall_block, ModuleSchedule};

/// Result of checking a concrete timestep assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScheduleCheck {
    pub gates: u64,
    /// Largest timestep assigned to any gate.
    pub max_time: u64,
    pub reported_length: u64,
    pub violation_count: u64,
    /// The first few violations, described.
    pub violations: Vec<String>,
}

impl ScheduleCheck {
    pub fn is_valid(&self) -> bool {
        self.violation_count == 0
    }
}

const KEPT_VIOLATIONS: usize = 32;

/// Checks gates fed in program order: each gate must come strictly after
/// every earlier gate on any of its qubits.
#[derive(Default)]
pub struct TimedChecker {
    last: HashMap<PhysQubit, u64>,
    check: ScheduleCheck,
}

impl TimedChecker {
    pub fn new() -> Self {
        Self::default()
    }

    fn violation(&mut self, msg: String) {
        self.check.violation_count += 1;
        if self.check.violations.len() < KEPT_VIOLATIONS {
            self.check.violations.push(msg);
        }
    }

    pub fn gate(&mut self, qubits: &[PhysQubit], time: u64) {
        let n = self.check.gates;
        self.check.gates += 1;
        self.check.max_time = self.check.max_time.max(time);
        if time == 0 {
            self.violation(format!("gate {n} placed at timestep 0"));
        }
        let mut bad = None;
        for q in qubits {
            let prev = self.last.entry(*q).or_insert(0);
            if time <= *prev && bad.is_none() {
                bad = Some((*q, *prev));
            }
            *prev = (*prev).max(time);
        }
        if let Some((q, prev)) = bad {
            self.violation(format!(
                "gate {n} at timestep {time} uses qubit {}:{} already busy until {prev}",
                q.array, q.index
            ));
        }
    }

    pub fn finish(mut self, reported_length: u64) -> ScheduleCheck {
        self.check.reported_length = reported_length;
        if self.check.max_time != reported_length {
            let max = self.check.max_time;
            self.violation(format!(
                "reported length {reported_length} but the last gate runs at {max}"
            ));
        }
        self.check
    }
}

/// Expand the composed schedule of `est` into one timestep per gate and
/// check it. Fails with `BudgetExceeded` if the program has more gates than
/// `budget`.
pub fn validate_schedule(
    p: &SpecializedProgram,
    est: &CpEstimate,
    budget: Option<u64>,
) -> Result<ScheduleCheck> {
    let total = expanded_gate_counts(p)?
        .get(&p.entry)
        .copied()
        .unwrap_or(0);
    if let Some(b) = budget {
        if total > b as u128 {
            return Err(Error::BudgetExceeded {
                budget: b,
                what: "gates",
            });
        }
    }
    let entry = p.module(&p.entry)?;
    let mut w = Walker {
        p,
        est,
        arrays: 0,
        checker: TimedChecker::new(),
    };
    let binding: Vec<(u32, u64)> = (0..entry.params.len() as u32).map(|a| (a, 0)).collect();
    w.arrays = binding.len() as u32;
    w.module(entry, binding, 0)?;
    Ok(w.checker.finish(est.length))
}

struct Walker<'a> {
    p: &'a SpecializedProgram,
    est: &'a CpEstimate,
    arrays: u32,
    checker: TimedChecker,
}

impl<'a> Walker<'a> {
    fn schedule<'b>(&self, name: &str) -> Result<&'b ModuleSchedule>
    where
        'a: 'b,
    {
        self.est
            .schedules
            .get(name)
            .ok_or_else(|| Error::Invalid(format!("no schedule for `{name}`")))
    }

    fn module(&mut self, m: &FlatModule, mut map: Vec<(u32, u64)>, base: u64) -> Result<()> {
        for _ in &m.locals {
            map.push((self.arrays, 0));
            self.arrays += 1;
        }
        let s = self.schedule(&m.name)?;
        self.body(&m.body, s, &map, base)
    }

    fn body(
        &mut self,
        body: &[FlatInst],
        s: &ModuleSchedule,
        map: &[(u32, u64)],
        base: u64,
    ) -> Result<()> {
        let phys = |q: crate::flatten::QubitRef| {
            let (array, off) = map[q.reg as usize];
            PhysQubit {
                array,
                index: off + q.index,
            }
        };
        for (i, inst) in body.iter().enumerate() {
            let t0 = base + s.starts[i];
            match inst {
                FlatInst::Gate { qubits, .. } => {
                    let qs: Vec<PhysQubit> = qubits.iter().map(|q| phys(*q)).collect();
                    self.checker.gate(&qs, t0 + 1);
                }
                FlatInst::Forall {
                    operands, count, ..
                } => {
                    let parallel = forall_block(operands, *count).len <= 1;
                    for k in 0..*count {
                        let qs: Vec<PhysQubit> = operands.iter().map(|o| phys(o.at(k))).collect();
                        let t = if parallel { t0 + 1 } else { t0 + 1 + k };
                        self.checker.gate(&qs, t);
                    }
                }
                FlatInst::Call { callee, args } => {
                    let c = self.p.module(callee)?;
                    let binding = args
                        .iter()
                        .map(|a| {
                            let (array, off) = map[a.reg as usize];
                            (array, off + a.start)
                        })
                        .collect();
                    self.module(c, binding, t0)?;
                }
                FlatInst::Repeat { body, .. } => {
                    let l = s.loops.get(&i).ok_or_else(|| {
                        Error::Invalid(format!("no loop schedule for instruction {i}"))
                    })?;
                    for j in 0..l.count {
                        self.body(body, &l.body, map, t0 + j * l.period)?;
                    }
                }
            }
        }
        Ok(())
    }
}

struct AsapSink {
    last: HashMap<PhysQubit, u64>,
    length: u64,
}

impl ExpandSink for AsapSink {
    fn declare(&mut self, _: &str, _: u64, _: bool) {}

    fn gate(&mut self, _: GateKind, qubits: &[PhysQubit], _: Option<f64>) -> Result<()> {
        let t = qubits
            .iter()
            .map(|q| self.last.get(q).copied().unwrap_or(0))
            .max()
            .unwrap_or(0)
            + 1;
        for q in qubits {
            self.last.insert(*q, t);
        }
        self.length = self.length.max(t);
        Ok(())
    }
}

/// Exact critical path: ASAP over the fully expanded gate sequence.
pub fn oracle_critical_path(p: &SpecializedProgram, budget: Option<u64>) -> Result<u64> {
    let mut sink = AsapSink {
        last: HashMap::new(),
        length: 0,
    };
    expand(p, &mut sink, budget)?;
    Ok(sink.length)
}
