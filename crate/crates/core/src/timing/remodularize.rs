use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::flatten::{
    expanded_gate_counts, unique_name, ArgSlice, FlatInst, FlatModule, QubitRef, RegDecl, Span,
    SpecializedProgram,
};

/// Inline every call to a module with fewer than `threshold` gates, unroll
/// every repeat and forall with fewer than `threshold` gates, and drop
/// modules that are no longer called. Each inlined call gets its own copy
/// of the callee's local registers, so the expanded gate sequence is the
/// same up to register names. Fails with `BudgetExceeded` when the result
/// would hold more than `budget` instructions.
pub fn remodularize(
    p: &SpecializedProgram,
    threshold: u128,
    budget: u64,
) -> Result<SpecializedProgram> {
    if threshold == 0 {
        return Ok(p.clone());
    }
    let sizes = expanded_gate_counts(p)?;
    let mut out: IndexMap<String, FlatModule> = IndexMap::new();
    let mut used = 0u64;
    for name in p.postorder()? {
        let m = p.module(&name)?;
        let mut r = Rewriter {
            threshold,
            sizes: &sizes,
            done: &out,
            locals: m.locals.clone(),
            taken: m
                .params
                .iter()
                .chain(&m.locals)
                .map(|d| d.name.clone())
                .collect(),
            params: m.params.len() as u32,
            used: &mut used,
            budget,
        };
        let body = r.body(&m.body)?;
        let locals = r.locals;
        out.insert(
            name.clone(),
            FlatModule {
                name: m.name.clone(),
                params: m.params.clone(),
                locals,
                body,
            },
        );
    }
    let mut q = SpecializedProgram {
        modules: p
            .modules
            .keys()
            .filter_map(|k| out.shift_remove(k).map(|m| (k.clone(), m)))
            .collect(),
        entry: p.entry.clone(),
        specialization_index: p.specialization_index.clone(),
    };
    q.prune();
    Ok(q)
}

struct Rewriter<'a> {
    threshold: u128,
    sizes: &'a HashMap<String, u128>,
    done: &'a IndexMap<String, FlatModule>,
    locals: Vec<RegDecl>,
    taken: HashSet<String>,
    params: u32,
    used: &'a mut u64,
    budget: u64,
}

impl Rewriter<'_> {
    fn charge(&mut self, n: u64) -> Result<()> {
        *self.used = self.used.saturating_add(n);
        if *self.used > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
                what: "instructions",
            });
        }
        Ok(())
    }

    fn gates(&self, body: &[FlatInst]) -> u128 {
        body.iter().fold(0u128, |acc, i| {
            acc.saturating_add(match i {
                FlatInst::Gate { .. } => 1,
                FlatInst::Forall { count, .. } => *count as u128,
                FlatInst::Call { callee, .. } => self.sizes.get(callee).copied().unwrap_or(0),
                FlatInst::Repeat { count, body } => (*count as u128).saturating_mul(self.gates(body)),
            })
        })
    }

    fn body(&mut self, body: &[FlatInst]) -> Result<Vec<FlatInst>> {
        let mut out = Vec::with_capacity(body.len());
        for inst in body {
            match inst {
                FlatInst::Gate { .. } => {
                    self.charge(1)?;
                    out.push(inst.clone());
                }
                FlatInst::Forall {
                    kind,
                    operands,
                    count,
                    angle,
                } => {
                    if (*count as u128) < self.threshold {
                        self.charge(*count)?;
                        for k in 0..*count {
                            out.push(FlatInst::Gate {
                                kind: *kind,
                                qubits: operands.iter().map(|s| s.at(k)).collect(),
                                angle: *angle,
                            });
                        }
                    } else {
                        self.charge(1)?;
                        out.push(inst.clone());
                    }
                }
                FlatInst::Repeat { count, body } => {
                    let total = self.gates(std::slice::from_ref(inst));
                    if total == 0 {
                        continue;
                    }
                    if total < self.threshold {
                        for _ in 0..*count {
                            let copy = self.body(body)?;
                            out.extend(copy);
                        }
                    } else {
                        self.charge(1)?;
                        let body = self.body(body)?;
                        out.push(FlatInst::Repeat {
                            count: *count,
                            body,
                        });
                    }
                }
                FlatInst::Call { callee, args } => {
                    let size = self.sizes.get(callee).copied().unwrap_or(0);
                    match self.done.get(callee) {
                        Some(c) if size < self.threshold => self.inline(c, args, &mut out)?,
                        _ => {
                            self.charge(1)?;
                            out.push(inst.clone());
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Copy the callee body with its registers mapped onto the arguments
    /// and onto fresh locals of this module.
    fn inline(&mut self, c: &FlatModule, args: &[ArgSlice], out: &mut Vec<FlatInst>) -> Result<()> {
        let mut map: Vec<(u32, u64)> = args.iter().map(|a| (a.reg, a.start)).collect();
        for d in &c.locals {
            let name = unique_name(format!("{}_{}", d.name, c.name), &mut self.taken);
            map.push((self.params + self.locals.len() as u32, 0));
            self.locals.push(RegDecl {
                name,
                size: d.size,
                scalar: d.scalar,
            });
        }
        let body = remap(&c.body, &map);
        self.charge(count_insts(&body))?;
        out.extend(body);
        Ok(())
    }
}

fn count_insts(body: &[FlatInst]) -> u64 {
    body.iter()
        .map(|i| match i {
            FlatInst::Repeat { body, .. } => 1 + count_insts(body),
            _ => 1,
        })
        .sum()
}

fn remap(body: &[FlatInst], map: &[(u32, u64)]) -> Vec<FlatInst> {
    let q = |r: QubitRef| {
        let (reg, off) = map[r.reg as usize];
        QubitRef {
            reg,
            index: off + r.index,
        }
    };
    body.iter()
        .map(|i| match i {
            FlatInst::Gate {
                kind,
                qubits,
                angle,
            } => FlatInst::Gate {
                kind: *kind,
                qubits: qubits.iter().map(|x| q(*x)).collect(),
                angle: *angle,
            },
            FlatInst::Forall {
                kind,
                operands,
                count,
                angle,
            } => FlatInst::Forall {
                kind: *kind,
                operands: operands
                    .iter()
                    .map(|s| {
                        let (reg, off) = map[s.reg as usize];
                        Span {
                            reg,
                            start: off + s.start,
                            stride: s.stride,
                        }
                    })
                    .collect(),
                count: *count,
                angle: *angle,
            },
            FlatInst::Call { callee, args } => FlatInst::Call {
                callee: callee.clone(),
                args: args
                    .iter()
                    .map(|a| {
                        let (reg, off) = map[a.reg as usize];
                        ArgSlice {
                            reg,
                            start: off + a.start,
                            len: a.len,
                        }
                    })
                    .collect(),
            },
            FlatInst::Repeat { count, body } => FlatInst::Repeat {
                count: *count,
                body: remap(body, map),
            },
        })
        .collect()
}
