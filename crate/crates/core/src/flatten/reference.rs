//! Direct interpreter of a resolved program into a full gate expansion,
//! with no specialization, classification or memoization. Used as the
//! semantic baseline for both resolution strategies.

use std::collections::HashMap;

use crate::error::{Error, Pos, Result};
use crate::expr::{Expr, Value};
use crate::frontend::ast::ClassicalType;
use crate::ir::loops::trip_count;
use crate::ir::{CallArg, Inst, InstKind, ParamKind, Program, QubitArg};

use super::coerce;
use super::expand::{ExpandSink, PhysQubit};
use super::pass::{eval_size, module_def, typed_args};

/// Run `p` from its entry, streaming every gate to `sink`. Fails with
/// `StepLimit` after `step_limit` interpreted instructions.
pub fn interpret(p: &Program, sink: &mut impl ExpandSink, step_limit: u64) -> Result<()> {
    let mut r = Reference {
        p,
        sink,
        arrays: 0,
        instances: 0,
        steps: 0,
        step_limit,
    };
    r.call(&p.entry, &[], &[], true, Pos::default())
}

struct Reference<'a, S> {
    p: &'a Program,
    sink: &'a mut S,
    arrays: u32,
    instances: u64,
    steps: u64,
    step_limit: u64,
}

/// A bound qubit register: first physical qubit and length.
#[derive(Clone, Copy)]
struct Bound {
    array: u32,
    offset: u64,
    len: u64,
}

struct Frame {
    env: HashMap<String, Value>,
    types: HashMap<String, ClassicalType>,
    regs: HashMap<String, Bound>,
}

impl Frame {
    fn eval(&self, e: &Expr) -> Result<Value> {
        e.eval(&|n| self.env.get(n).copied())
    }

    fn eval_int(&self, e: &Expr) -> Result<i64> {
        let v = self.eval(e)?;
        v.as_int().ok_or_else(|| Error::TypeMismatch {
            pos: e.pos,
            msg: format!("expected an integer, `{e}` is {v}"),
        })
    }

    fn qubit(&self, name: &str, ix: i64, pos: Pos) -> Result<PhysQubit> {
        let b = self.regs.get(name).ok_or_else(|| Error::Undefined {
            pos,
            name: name.to_string(),
        })?;
        if ix < 0 || ix as u64 >= b.len {
            return Err(Error::TypeMismatch {
                pos,
                msg: format!("index {ix} is out of range for `{name}` of size {}", b.len),
            });
        }
        Ok(PhysQubit {
            array: b.array,
            index: b.offset + ix as u64,
        })
    }
}

impl<S: ExpandSink> Reference<'_, S> {
    fn call(
        &mut self,
        name: &str,
        args: &[Value],
        qubits: &[Bound],
        top: bool,
        pos: Pos,
    ) -> Result<()> {
        let m = module_def(self.p, name, pos)?;
        if m.is_ctqg() {
            return Err(Error::Invalid(format!(
                "reversible-logic module `{name}` is not supported here"
            )));
        }
        let args = typed_args(m, args);
        let mut fr = Frame {
            env: HashMap::new(),
            types: HashMap::new(),
            regs: HashMap::new(),
        };
        for ((n, ty), v) in m.classical_params().zip(&args) {
            fr.env.insert(n.to_string(), *v);
            fr.types.insert(n.to_string(), ty);
        }
        let mut q = qubits.iter();
        for prm in &m.params {
            if let ParamKind::Qubits { size, .. } = &prm.kind {
                let want = eval_size(size, &|n| fr.env.get(n).copied(), &prm.name)?;
                let b = *q.next().expect("arity checked");
                if b.len != want {
                    return Err(Error::TypeMismatch {
                        pos,
                        msg: format!(
                            "`{name}` expects {want} qubits for `{}`, got {}",
                            prm.name, b.len
                        ),
                    });
                }
                fr.regs.insert(prm.name.clone(), b);
            }
        }
        let instance = self.instances;
        if !m.locals.is_empty() {
            self.instances += 1;
        }
        for l in &m.locals {
            let size = eval_size(&l.size, &|n| fr.env.get(n).copied(), &l.name)?;
            let shown = if top {
                l.name.clone()
            } else {
                format!("{}_i{instance}", l.name)
            };
            self.sink.declare(&shown, size, l.scalar);
            fr.regs.insert(
                l.name.clone(),
                Bound {
                    array: self.arrays,
                    offset: 0,
                    len: size,
                },
            );
            self.arrays += 1;
        }
        self.run(&m.body, &mut fr)
    }

    fn run(&mut self, body: &[Inst], fr: &mut Frame) -> Result<()> {
        for inst in body {
            self.steps += 1;
            if self.steps > self.step_limit {
                return Err(Error::StepLimit {
                    limit: self.step_limit,
                });
            }
            let pos = inst.pos;
            match &inst.kind {
                InstKind::Gate {
                    kind,
                    operands,
                    angle,
                } => {
                    let mut qs = Vec::with_capacity(operands.len());
                    for o in operands {
                        qs.push(fr.qubit(&o.name, fr.eval_int(&o.index)?, pos)?);
                    }
                    let angle = match angle {
                        Some(a) => Some(fr.eval(a)?.as_f64()),
                        None => None,
                    };
                    self.sink.gate(*kind, &qs, angle)?;
                }
                InstKind::Call { callee, args } => {
                    let mut vals = Vec::new();
                    let mut bound = Vec::new();
                    for a in args {
                        match a {
                            CallArg::Classical(e) => vals.push(fr.eval(e)?),
                            CallArg::Qubits(q) => bound.push(bind(fr, q, pos)?),
                        }
                    }
                    self.call(callee, &vals, &bound, false, pos)?;
                }
                InstKind::Cond { guard, then, els } => {
                    let branch = if fr.eval(guard)?.truthy() { then } else { els };
                    self.run(branch, fr)?;
                }
                InstKind::Let { name, ty, value } => {
                    fr.types.insert(name.clone(), *ty);
                    match value {
                        Some(e) => {
                            let v = coerce(*ty, fr.eval(e)?);
                            fr.env.insert(name.clone(), v);
                        }
                        None => {
                            fr.env.remove(name);
                        }
                    }
                }
                InstKind::Assign { name, value } => {
                    let v = fr.eval(value)?;
                    let v = match fr.types.get(name) {
                        Some(ty) => coerce(*ty, v),
                        None => v,
                    };
                    fr.env.insert(name.clone(), v);
                }
                InstKind::Loop {
                    var,
                    init,
                    cond,
                    bound,
                    step,
                    body,
                    ..
                } => {
                    let i0 = fr.eval_int(init)?;
                    let b = fr.eval_int(bound)?;
                    let s = fr.eval_int(step)?;
                    let trip = trip_count(i0, *cond, b, s).ok_or(Error::StepLimit {
                        limit: self.step_limit,
                    })?;
                    let mut v = i0;
                    for _ in 0..trip {
                        fr.env.insert(var.clone(), Value::Int(v));
                        self.run(body, fr)?;
                        v += s;
                    }
                    fr.env.insert(var.clone(), Value::Int(v));
                }
            }
        }
        Ok(())
    }
}

fn bind(fr: &Frame, q: &QubitArg, pos: Pos) -> Result<Bound> {
    let name = q.name();
    let b = *fr.regs.get(name).ok_or_else(|| Error::Undefined {
        pos,
        name: name.to_string(),
    })?;
    let (lo, hi) = match q {
        QubitArg::Whole(_) => return Ok(b),
        QubitArg::Index(_, e) => {
            let i = fr.eval_int(e)?;
            (i, i)
        }
        QubitArg::Slice(_, a, c) => (fr.eval_int(a)?, fr.eval_int(c)?),
    };
    let first = fr.qubit(name, lo, pos)?;
    fr.qubit(name, hi, pos)?;
    if hi < lo {
        return Err(Error::TypeMismatch {
            pos,
            msg: format!("slice `{name}[{lo}:{hi}]` is empty or descending"),
        });
    }
    Ok(Bound {
        array: first.array,
        offset: first.index,
        len: (hi - lo + 1) as u64,
    })
}
