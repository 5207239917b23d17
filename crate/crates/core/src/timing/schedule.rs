//! Block scheduling inside one module body.
//!
//! Every instruction is a block: a length and, for each qubit it touches,
//! the first and last timestep (1-based, relative to the block start) at
//! which it uses that qubit. A block placed at offset `t0` uses qubit `q`
//! during `t0 + first ..= t0 + last`.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::flatten::{FlatInst, FlatModule, QubitRef};

use super::SchedulingMode;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub len: u64,
    /// `(qubit, first, last)`.
    pub uses: Vec<(QubitRef, u64, u64)>,
}

/// Placement of the body of a repeat: one instance schedule and the spacing
/// between consecutive instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopSchedule {
    pub body: ModuleSchedule,
    pub period: u64,
    pub count: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModuleSchedule {
    pub length: u64,
    /// Offset of each instruction; it occupies `start + 1 ..`.
    pub starts: Vec<u64>,
    /// Schedules of repeat bodies, by instruction index.
    pub loops: BTreeMap<usize, LoopSchedule>,
    pub first_use: BTreeMap<QubitRef, u64>,
    pub last_use: BTreeMap<QubitRef, u64>,
}

impl ModuleSchedule {
    /// Timestep of the first cycle of instruction `i`.
    pub fn inst_time(&self, i: usize) -> u64 {
        self.starts[i] + 1
    }

    /// The block a caller sees, restricted to qubits accepted by `keep`.
    pub fn summary(&self, mode: SchedulingMode, keep: impl Fn(QubitRef) -> bool) -> Block {
        let uses = self
            .last_use
            .iter()
            .filter(|(q, _)| keep(**q))
            .map(|(q, last)| match mode {
                SchedulingMode::Modular => (*q, 1, self.length),
                SchedulingMode::BottomSlack => (*q, 1, *last),
                SchedulingMode::CenterAligned => (*q, self.first_use[q], *last),
            })
            .collect();
        Block {
            len: self.length,
            uses,
        }
    }
}

/// Summaries of already scheduled callees, in the given mode.
pub trait CalleeSummaries {
    /// Block of `callee` over its parameter qubits `(param register, index)`.
    fn callee(&self, callee: &str) -> Result<&Block>;
}

impl CalleeSummaries for HashMap<String, Block> {
    fn callee(&self, callee: &str) -> Result<&Block> {
        self.get(callee)
            .ok_or_else(|| Error::Invalid(format!("`{callee}` has no schedule")))
    }
}

/// The block of a forall: one timestep when the iterations touch distinct
/// qubits, else one iteration per timestep.
pub fn forall_block(operands: &[crate::flatten::Span], count: u64) -> Block {
    let mut seen = HashSet::new();
    let distinct = (0..count)
        .flat_map(|k| operands.iter().map(move |s| s.at(k)))
        .all(|q| seen.insert(q));
    if distinct {
        let uses = seen.into_iter().map(|q| (q, 1, 1)).collect();
        return Block { len: 1.min(count), uses };
    }
    let mut span: BTreeMap<QubitRef, (u64, u64)> = BTreeMap::new();
    for k in 0..count {
        for s in operands {
            let e = span.entry(s.at(k)).or_insert((k + 1, k + 1));
            e.1 = k + 1;
        }
    }
    Block {
        len: count,
        uses: span.into_iter().map(|(q, (a, b))| (q, a, b)).collect(),
    }
}

struct Placer {
    last: HashMap<QubitRef, u64>,
    length: u64,
}

impl Placer {
    fn place(&mut self, b: &Block) -> u64 {
        let t0 = b
            .uses
            .iter()
            .map(|(q, s, _)| (self.last.get(q).copied().unwrap_or(0) + 1).saturating_sub(*s))
            .max()
            .unwrap_or(0);
        for (q, _, u) in &b.uses {
            self.last.insert(*q, t0 + u);
        }
        self.length = self.length.max(t0 + b.len);
        t0
    }
}

/// Blocks of `body` with repeat bodies scheduled recursively.
fn blocks(
    m: &FlatModule,
    body: &[FlatInst],
    mode: SchedulingMode,
    callees: &dyn CalleeSummaries,
    loops: &mut BTreeMap<usize, LoopSchedule>,
) -> Result<Vec<Block>> {
    let mut out = Vec::with_capacity(body.len());
    for (i, inst) in body.iter().enumerate() {
        let b = match inst {
            FlatInst::Gate { qubits, .. } => Block {
                len: 1,
                uses: qubits.iter().map(|q| (*q, 1, 1)).collect(),
            },
            FlatInst::Forall {
                operands, count, ..
            } => forall_block(operands, *count),
            FlatInst::Call { callee, args } => {
                let c = callees.callee(callee)?;
                Block {
                    len: c.len,
                    uses: c
                        .uses
                        .iter()
                        .map(|(q, s, u)| {
                            let a = args[q.reg as usize];
                            (
                                QubitRef {
                                    reg: a.reg,
                                    index: a.start + q.index,
                                },
                                *s,
                                *u,
                            )
                        })
                        .collect(),
                }
            }
            FlatInst::Repeat { count, body } => {
                let inner = schedule_body(m, body, mode, callees)?;
                let one = inner.summary(mode, |_| true);
                let period = one
                    .uses
                    .iter()
                    .map(|(_, s, u)| u + 1 - s)
                    .max()
                    .unwrap_or(0)
                    .max(if one.uses.is_empty() { 0 } else { 1 });
                let extra = count.saturating_sub(1).saturating_mul(period);
                let b = if *count == 0 {
                    Block {
                        len: 0,
                        uses: Vec::new(),
                    }
                } else {
                    Block {
                        len: one.len.max(extra.saturating_add(one.len)),
                        uses: one.uses.iter().map(|(q, s, u)| (*q, *s, extra + u)).collect(),
                    }
                };
                loops.insert(
                    i,
                    LoopSchedule {
                        body: inner,
                        period,
                        count: *count,
                    },
                );
                b
            }
        };
        out.push(b);
    }
    Ok(out)
}

fn finish(blocks: &[Block], starts: Vec<u64>, length: u64, loops: BTreeMap<usize, LoopSchedule>) -> ModuleSchedule {
    let mut first_use = BTreeMap::new();
    let mut last_use: BTreeMap<QubitRef, u64> = BTreeMap::new();
    for (b, t0) in blocks.iter().zip(&starts) {
        for (q, s, u) in &b.uses {
            let f = first_use.entry(*q).or_insert(t0 + s);
            *f = (*f).min(t0 + s);
            let l = last_use.entry(*q).or_insert(t0 + u);
            *l = (*l).max(t0 + u);
        }
    }
    ModuleSchedule {
        length,
        starts,
        loops,
        first_use,
        last_use,
    }
}

/// ASAP placement of `body`; in center-aligned mode the top half is then
/// pushed as late as possible.
pub fn schedule_body(
    m: &FlatModule,
    body: &[FlatInst],
    mode: SchedulingMode,
    callees: &dyn CalleeSummaries,
) -> Result<ModuleSchedule> {
    let mut loops = BTreeMap::new();
    let bs = blocks(m, body, mode, callees, &mut loops)?;
    let mut p = Placer {
        last: HashMap::new(),
        length: 0,
    };
    let mut starts: Vec<u64> = bs.iter().map(|b| p.place(b)).collect();
    let length = p.length;
    if mode == SchedulingMode::CenterAligned {
        align_center(&bs, &mut starts, length);
    }
    Ok(finish(&bs, starts, length, loops))
}

/// Push blocks that start in the first half as late as possible, in
/// reverse program order so every later block on a shared qubit has already
/// moved. For single gates this matches a latest-timestep-first sweep. A
/// qubit with no later use keeps its block inside the first half.
fn align_center(bs: &[Block], starts: &mut [u64], length: u64) {
    let half = length / 2;
    let mut next: HashMap<QubitRef, u64> = HashMap::new();
    let mut top: Vec<usize> = Vec::new();
    for (i, b) in bs.iter().enumerate() {
        if starts[i] + 1 > half {
            for (q, s, _) in &b.uses {
                let e = next.entry(*q).or_insert(u64::MAX);
                *e = (*e).min(starts[i] + s);
            }
        } else {
            top.push(i);
        }
    }
    for i in top.into_iter().rev() {
        let b = &bs[i];
        let mut t0 = length.saturating_sub(b.len);
        for (q, _, u) in &b.uses {
            let limit = next.get(q).copied().unwrap_or(half + 1);
            t0 = t0.min(limit.saturating_sub(1 + u));
        }
        let t0 = t0.max(starts[i]);
        starts[i] = t0;
        for (q, s, _) in &b.uses {
            let e = next.entry(*q).or_insert(u64::MAX);
            *e = (*e).min(t0 + s);
        }
    }
}

/// ASAP schedule of a module without calls.
pub fn schedule_asap(m: &FlatModule) -> Result<ModuleSchedule> {
    schedule_body(m, &m.body, SchedulingMode::BottomSlack, &HashMap::new())
}

/// Center-aligned schedule of a module without calls.
pub fn schedule_center_aligned(m: &FlatModule) -> Result<ModuleSchedule> {
    schedule_body(m, &m.body, SchedulingMode::CenterAligned, &HashMap::new())
}
