//! Dynamic resolution: interpret classical control directly, specializing
//! each reached module per distinct classical argument tuple.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::error::{Error, Pos, Result};
use crate::expr::{Expr, Value};
use crate::frontend::ast::ClassicalType;
use crate::ir::loops::{classify_body, classify_loop, trip_count};
use crate::ir::{assigned_vars, CallArg, Inst, InstKind, LoopClass, Program};

use super::pass::{
    angle_value, arg_slice, check_binding, fold_block, forall_span, module_def, qubit_ref,
    resolve_conds, specialize_regs, typed_args, Env,
};
use super::{
    coerce, specialized_name, unique_name, FlatInst, FlatModule, FlattenOptions, MemoKey,
    RegDecl, SpecializedProgram,
};

pub fn flatten_dynamic(p: &Program, opts: &FlattenOptions) -> Result<SpecializedProgram> {
    let mut d = Interp {
        p,
        opts,
        modules: IndexMap::new(),
        index: IndexMap::new(),
        taken: p.modules.keys().cloned().collect(),
        used: HashSet::new(),
        steps: 0,
    };
    d.taken.extend(opts.external.keys().cloned());
    let entry = d.instantiate(&p.entry, &[], Pos::default())?;
    let mut sp = SpecializedProgram {
        modules: d.modules,
        entry,
        specialization_index: d.index,
    };
    sp.prune();
    Ok(sp)
}

struct Interp<'a> {
    p: &'a Program,
    opts: &'a FlattenOptions,
    modules: IndexMap<String, FlatModule>,
    index: IndexMap<MemoKey, String>,
    taken: HashSet<String>,
    used: HashSet<String>,
    steps: u64,
}

struct Frame<'r> {
    env: HashMap<String, Value>,
    types: HashMap<String, ClassicalType>,
    regs: HashMap<&'r str, (u32, &'r RegDecl)>,
}

impl Frame<'_> {
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
}

impl Interp<'_> {
    fn instantiate(&mut self, orig: &str, args: &[Value], pos: Pos) -> Result<String> {
        if let Some(ext) = self.opts.external.get(orig) {
            self.index
                .entry(MemoKey::new(orig, &[]))
                .or_insert_with(|| orig.to_string());
            if !self.modules.contains_key(orig) {
                self.modules.insert(orig.to_string(), ext.clone());
            }
            return Ok(orig.to_string());
        }
        let m = module_def(self.p, orig, pos)?;
        if m.is_ctqg() {
            return Err(Error::Invalid(format!(
                "reversible-logic module `{orig}` was not synthesized"
            )));
        }
        let args = typed_args(m, args);
        let key = MemoKey::new(orig, &args);
        if self.opts.memoize {
            if let Some(n) = self.index.get(&key) {
                return Ok(n.clone());
            }
        }
        let name = if args.is_empty() && !self.used.contains(orig) {
            orig.to_string()
        } else {
            unique_name(specialized_name(orig, &args), &mut self.taken)
        };
        self.used.insert(name.clone());
        self.index.entry(key).or_insert_with(|| name.clone());

        let mut env = HashMap::new();
        let mut types = HashMap::new();
        for ((n, ty), v) in m.classical_params().zip(&args) {
            env.insert(n.to_string(), *v);
            types.insert(n.to_string(), ty);
        }
        let (params, locals) = specialize_regs(m, &|n| env.get(n).copied())?;
        let regs = params
            .iter()
            .chain(&locals)
            .enumerate()
            .map(|(i, d)| (d.name.as_str(), (i as u32, d)))
            .collect();
        let mut fr = Frame { env, types, regs };
        let mut body = Vec::new();
        self.run(&m.body, &mut fr, &mut body)?;
        drop(fr);
        self.modules.insert(
            name.clone(),
            FlatModule {
                name: name.clone(),
                params,
                locals,
                body,
            },
        );
        Ok(name)
    }

    fn step(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.opts.step_limit {
            return Err(Error::StepLimit {
                limit: self.opts.step_limit,
            });
        }
        Ok(())
    }

    fn run(&mut self, body: &[Inst], fr: &mut Frame, out: &mut Vec<FlatInst>) -> Result<()> {
        for inst in body {
            self.step()?;
            let pos = inst.pos;
            match &inst.kind {
                InstKind::Gate {
                    kind,
                    operands,
                    angle,
                } => {
                    let mut qubits = Vec::with_capacity(operands.len());
                    for o in operands {
                        let ix = fr.eval_int(&o.index)?;
                        qubits.push(qubit_ref(&fr.regs, &o.name, ix, pos)?);
                    }
                    let angle = match angle {
                        Some(a) => Some(fr.eval(a)?.as_f64()),
                        None => None,
                    };
                    out.push(FlatInst::Gate {
                        kind: *kind,
                        qubits,
                        angle,
                    });
                }
                InstKind::Call { callee, args } => {
                    let mut vals = Vec::new();
                    let mut slices = Vec::new();
                    for a in args {
                        match a {
                            CallArg::Classical(e) => vals.push(fr.eval(e)?),
                            CallArg::Qubits(q) => {
                                let q = fold_arg(q, fr)?;
                                slices.push(arg_slice(&fr.regs, &q, pos)?);
                            }
                        }
                    }
                    let name = self.instantiate(callee, &vals, pos)?;
                    check_binding(&name, &self.modules[&name].params, &slices, pos)?;
                    out.push(FlatInst::Call {
                        callee: name,
                        args: slices,
                    });
                }
                InstKind::Cond { guard, then, els } => {
                    let branch = if fr.eval(guard)?.truthy() { then } else { els };
                    self.run(branch, fr, out)?;
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
                        limit: self.opts.step_limit,
                    })?;
                    self.run_loop(var, i0, *cond, b, s, trip, body, fr, out, pos)?;
                    let end = i0 as i128 + s as i128 * trip as i128;
                    fr.env.insert(var.clone(), Value::Int(end as i64));
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn run_loop(
        &mut self,
        var: &str,
        i0: i64,
        cond: crate::expr::BinOp,
        bound: i64,
        step: i64,
        trip: u64,
        body: &[Inst],
        fr: &mut Frame,
        out: &mut Vec<FlatInst>,
        pos: Pos,
    ) -> Result<()> {
        // Simplify a copy of the body under the loop-invariant environment
        // and emit forall or repeat directly when the loop qualifies.
        let mut copy = body.to_vec();
        let mut names = vec![var.to_string()];
        assigned_vars(body, &mut names);
        let mut env = Env::default();
        for (k, v) in &fr.env {
            env.vals.insert(k.clone(), Some(*v));
        }
        env.forget(&names);
        fold_block(&mut copy, &mut env);
        resolve_conds(&mut copy);
        classify_body(&mut copy);
        let lit = |v: i64| Expr::lit(Value::Int(v), pos);
        match classify_loop(var, &lit(i0), cond, &lit(bound), &lit(step), &copy) {
            LoopClass::Forall { trip } => {
                for g in &copy {
                    let InstKind::Gate {
                        kind,
                        operands,
                        angle,
                    } = &g.kind
                    else {
                        unreachable!("forall bodies hold only gates")
                    };
                    let mut spans = Vec::with_capacity(operands.len());
                    for o in operands {
                        let (a, b) = o.index.affine_in(var).expect("affine forall index");
                        spans.push(forall_span(&fr.regs, &o.name, a * i0 + b, a * step, trip, g.pos)?);
                    }
                    out.push(FlatInst::Forall {
                        kind: *kind,
                        operands: spans,
                        count: trip,
                        angle: angle_value(angle.as_ref(), g.pos)?,
                    });
                }
                Ok(())
            }
            LoopClass::Repeat { trip } => {
                let mut inner = Vec::new();
                self.run(&copy, fr, &mut inner)?;
                out.push(FlatInst::Repeat {
                    count: trip,
                    body: inner,
                });
                Ok(())
            }
            LoopClass::Classical => {
                let mut runs: Vec<(Vec<FlatInst>, u64)> = Vec::new();
                let mut v = i0;
                for _ in 0..trip {
                    fr.env.insert(var.to_string(), Value::Int(v));
                    let mut it = Vec::new();
                    self.run(body, fr, &mut it)?;
                    match runs.last_mut() {
                        Some((prev, n)) if *prev == it => *n += 1,
                        _ => runs.push((it, 1)),
                    }
                    v += step;
                }
                for (b, n) in runs {
                    if n >= 2 && !b.is_empty() {
                        out.push(FlatInst::Repeat { count: n, body: b });
                    } else if n == 1 {
                        out.extend(b);
                    }
                }
                Ok(())
            }
        }
    }
}

/// Evaluate the index expressions of a qubit argument to literals.
fn fold_arg(q: &crate::ir::QubitArg, fr: &Frame) -> Result<crate::ir::QubitArg> {
    use crate::ir::QubitArg;
    let lit = |e: &Expr| -> Result<Expr> { Ok(Expr::lit(Value::Int(fr.eval_int(e)?), e.pos)) };
    Ok(match q {
        QubitArg::Whole(n) => QubitArg::Whole(n.clone()),
        QubitArg::Index(n, e) => QubitArg::Index(n.clone(), lit(e)?),
        QubitArg::Slice(n, a, b) => QubitArg::Slice(n.clone(), lit(a)?, lit(b)?),
    })
}
