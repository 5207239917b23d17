//! Pass-driven resolution: constant folding and propagation, conditional
//! resolution, procedure cloning, dead-code elimination and innermost-first
//! loop unrolling, repeated to a fixpoint per module in depth-first preorder.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::error::{Error, Pos, Result};
use crate::expr::{Expr, Value};
use crate::ir::loops::{classify_body, lit_int, trip_count};
use crate::ir::{
    assigned_vars, body_size, CallArg, Inst, InstKind, LoopClass, ModuleDef, ParamKind, Program,
    QubitArg,
};

use super::{
    coerce, specialized_name, unique_name, ArgSlice, FlatInst, FlatModule, FlattenOptions,
    MemoKey, QubitRef, RegDecl, Span, SpecializedProgram,
};

pub fn flatten_pass_driven(p: &Program, opts: &FlattenOptions) -> Result<SpecializedProgram> {
    let mut d = Driver {
        p,
        opts,
        work: IndexMap::new(),
        index: IndexMap::new(),
        taken: p.modules.keys().cloned().collect(),
        total: 0,
        fresh: Vec::new(),
    };
    d.taken.extend(opts.external.keys().cloned());
    let entry = d.specialize(&p.entry, &[], Pos::default())?;
    let mut stack = vec![entry.clone()];
    let mut out = IndexMap::new();
    while let Some(name) = stack.pop() {
        if out.contains_key(&name) || !d.work.contains_key(&name) {
            continue;
        }
        d.fresh.clear();
        d.resolve_module(&name)?;
        let flat = d.convert(&name)?;
        out.insert(name, flat);
        let fresh = std::mem::take(&mut d.fresh);
        stack.extend(fresh.into_iter().rev());
    }
    let mut modules = IndexMap::new();
    for (key, name) in &d.index {
        if let Some(ext) = opts.external.get(&key.module) {
            if !modules.contains_key(name) {
                modules.insert(name.clone(), ext.clone());
            }
        }
    }
    modules.extend(out);
    let mut sp = SpecializedProgram {
        modules,
        entry,
        specialization_index: d.index,
    };
    sp.prune();
    Ok(sp)
}

struct Work {
    body: Vec<Inst>,
    params: Vec<RegDecl>,
    locals: Vec<RegDecl>,
}

struct Driver<'a> {
    p: &'a Program,
    opts: &'a FlattenOptions,
    work: IndexMap<String, Work>,
    index: IndexMap<MemoKey, String>,
    taken: HashSet<String>,
    total: u64,
    /// Specializations created while resolving the current module.
    fresh: Vec<String>,
}

#[derive(Clone, Default)]
pub(crate) struct Env {
    pub(crate) vals: HashMap<String, Option<Value>>,
}

impl Env {
    fn get(&self, n: &str) -> Option<Value> {
        self.vals.get(n).copied().flatten()
    }

    fn fold(&self, e: &Expr) -> Expr {
        e.fold(&|n| self.get(n)).unwrap_or_else(|_| e.clone())
    }

    pub(crate) fn forget(&mut self, names: &[String]) {
        for n in names {
            self.vals.insert(n.clone(), None);
        }
    }
}

pub(crate) fn module_def<'p>(p: &'p Program, name: &str, pos: Pos) -> Result<&'p ModuleDef> {
    p.modules.get(name).ok_or_else(|| Error::UndefinedModule {
        pos,
        name: name.to_string(),
    })
}

/// Evaluate a qubit-array size under the given parameter values.
pub(crate) fn eval_size(e: &Expr, env: &dyn Fn(&str) -> Option<Value>, what: &str) -> Result<u64> {
    let v = e.eval(&|n| env(n))?;
    match v.as_int() {
        Some(n) if n > 0 => Ok(n as u64),
        _ => Err(Error::TypeMismatch {
            pos: e.pos,
            msg: format!("size of `{what}` must be a positive integer, got {v}"),
        }),
    }
}

/// Parameter and local register declarations of `m` specialized to `args`.
pub(crate) fn specialize_regs(
    m: &ModuleDef,
    env: &dyn Fn(&str) -> Option<Value>,
) -> Result<(Vec<RegDecl>, Vec<RegDecl>)> {
    let mut params = Vec::new();
    for prm in &m.params {
        match &prm.kind {
            ParamKind::Qubits { size, scalar } => params.push(RegDecl {
                name: prm.name.clone(),
                size: eval_size(size, env, &prm.name)?,
                scalar: *scalar,
            }),
            ParamKind::Register(w) => params.push(RegDecl {
                name: prm.name.clone(),
                size: *w as u64,
                scalar: false,
            }),
            ParamKind::Classical(_) => {}
        }
    }
    let locals = m
        .locals
        .iter()
        .map(|l| {
            Ok(RegDecl {
                name: l.name.clone(),
                size: eval_size(&l.size, env, &l.name)?,
                scalar: l.scalar,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((params, locals))
}

/// Coerce call arguments to the callee's declared classical types.
pub(crate) fn typed_args(m: &ModuleDef, args: &[Value]) -> Vec<Value> {
    m.classical_params()
        .zip(args)
        .map(|((_, ty), v)| coerce(ty, *v))
        .collect()
}

impl Driver<'_> {
    /// Name of the specialization of `orig` for `args`, creating it if new.
    fn specialize(&mut self, orig: &str, args: &[Value], pos: Pos) -> Result<String> {
        if self.opts.external.contains_key(orig) {
            let key = MemoKey::new(orig, &[]);
            self.index.entry(key).or_insert_with(|| orig.to_string());
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
        if let Some(n) = self.index.get(&key) {
            return Ok(n.clone());
        }
        let name = if args.is_empty() {
            orig.to_string()
        } else {
            unique_name(specialized_name(orig, &args), &mut self.taken)
        };
        let env: HashMap<&str, Value> = m
            .classical_params()
            .map(|(n, _)| n)
            .zip(args.iter().copied())
            .collect();
        let (params, locals) = specialize_regs(m, &|n| env.get(n).copied())?;
        let mut body: Vec<Inst> = m
            .classical_params()
            .zip(&args)
            .map(|((n, ty), v)| {
                Inst::new(
                    InstKind::Let {
                        name: n.to_string(),
                        ty,
                        value: Some(Expr::lit(*v, m.pos)),
                    },
                    m.pos,
                )
            })
            .collect();
        body.extend(m.body.iter().cloned());
        self.grow(body_size(&body))?;
        self.work.insert(
            name.clone(),
            Work {
                body,
                params,
                locals,
            },
        );
        self.index.insert(key, name.clone());
        self.fresh.push(name.clone());
        Ok(name)
    }

    fn grow(&mut self, n: u64) -> Result<()> {
        self.total = self.total.saturating_add(n);
        if self.total > self.opts.instruction_budget {
            return Err(Error::BlowupLimit {
                budget: self.opts.instruction_budget,
            });
        }
        Ok(())
    }

    fn resolve_module(&mut self, name: &str) -> Result<()> {
        let mut body = std::mem::take(&mut self.work[name].body);
        loop {
            let mut changed = fold_block(&mut body, &mut Env::default());
            changed |= resolve_conds(&mut body);
            changed |= self.clone_calls(&mut body)?;
            changed |= eliminate_dead(&mut body);
            classify_body(&mut body);
            changed |= self.unroll(&mut body)?;
            if !changed {
                break;
            }
        }
        self.work[name].body = body;
        Ok(())
    }

    fn clone_calls(&mut self, body: &mut [Inst]) -> Result<bool> {
        let mut changed = false;
        for inst in body {
            let pos = inst.pos;
            match &mut inst.kind {
                InstKind::Call { callee, args } => {
                    if !args.iter().any(|a| matches!(a, CallArg::Classical(_))) {
                        continue;
                    }
                    let vals: Option<Vec<Value>> = args
                        .iter()
                        .filter_map(|a| match a {
                            CallArg::Classical(e) => Some(e.as_lit()),
                            _ => None,
                        })
                        .collect();
                    let Some(vals) = vals else { continue };
                    let name = self.specialize(callee, &vals, pos)?;
                    *callee = name;
                    args.retain(|a| matches!(a, CallArg::Qubits(_)));
                    changed = true;
                }
                InstKind::Loop { body, .. } => changed |= self.clone_calls(body)?,
                InstKind::Cond { then, els, .. } => {
                    changed |= self.clone_calls(then)?;
                    changed |= self.clone_calls(els)?;
                }
                _ => {}
            }
        }
        Ok(changed)
    }

    /// Unroll innermost classical loops with literal bounds.
    fn unroll(&mut self, body: &mut Vec<Inst>) -> Result<bool> {
        let mut changed = false;
        let mut out = Vec::with_capacity(body.len());
        for mut inst in body.drain(..) {
            let pos = inst.pos;
            match &mut inst.kind {
                InstKind::Loop {
                    var,
                    init,
                    cond,
                    bound,
                    step,
                    body: inner,
                    class: LoopClass::Classical,
                } => {
                    if contains_classical_loop(inner) {
                        changed |= self.unroll(inner)?;
                        out.push(inst);
                        continue;
                    }
                    let (Some(i0), Some(b), Some(s)) =
                        (lit_int(init), lit_int(bound), lit_int(step))
                    else {
                        out.push(inst);
                        continue;
                    };
                    let trip = trip_count(i0, *cond, b, s).ok_or_else(|| {
                        Error::non_const(pos, format!("loop over `{var}` does not terminate"))
                    })?;
                    let per = body_size(inner) + 1;
                    self.grow((trip as u128 * per as u128).min(u64::MAX as u128) as u64)?;
                    let mut v = i0;
                    for _ in 0..trip {
                        out.push(assign(var, v, pos));
                        out.extend(inner.iter().cloned());
                        v += s;
                    }
                    out.push(assign(var, v, pos));
                    changed = true;
                }
                InstKind::Cond { then, els, .. } => {
                    changed |= self.unroll(then)?;
                    changed |= self.unroll(els)?;
                    out.push(inst);
                }
                _ => out.push(inst),
            }
        }
        *body = out;
        Ok(changed)
    }

    fn convert(&mut self, name: &str) -> Result<FlatModule> {
        let w = &self.work[name];
        let (params, locals, body) = (w.params.clone(), w.locals.clone(), w.body.clone());
        let regs: HashMap<&str, (u32, &RegDecl)> = params
            .iter()
            .chain(&locals)
            .enumerate()
            .map(|(i, d)| (d.name.as_str(), (i as u32, d)))
            .collect();
        let flat = self.convert_body(&body, &regs)?;
        drop(regs);
        Ok(FlatModule {
            name: name.to_string(),
            params,
            locals,
            body: flat,
        })
    }

    fn convert_body(
        &mut self,
        body: &[Inst],
        regs: &HashMap<&str, (u32, &RegDecl)>,
    ) -> Result<Vec<FlatInst>> {
        let mut out = Vec::with_capacity(body.len());
        for inst in body {
            let pos = inst.pos;
            let residue = |what: &str| Error::non_const(pos, what.to_string());
            match &inst.kind {
                InstKind::Gate {
                    kind,
                    operands,
                    angle,
                } => {
                    let mut qubits = Vec::with_capacity(operands.len());
                    for o in operands {
                        let ix = lit_int(&o.index)
                            .ok_or_else(|| residue(&format!("index `{}` is not constant", o.index)))?;
                        qubits.push(qubit_ref(regs, &o.name, ix, pos)?);
                    }
                    out.push(FlatInst::Gate {
                        kind: *kind,
                        qubits,
                        angle: angle_value(angle.as_ref(), pos)?,
                    });
                }
                InstKind::Call { callee, args } => {
                    let callee = if self.p.modules.contains_key(callee) {
                        self.specialize(callee, &[], pos)?
                    } else {
                        callee.clone()
                    };
                    let params = self.callee_params(&callee)?;
                    let mut slices = Vec::new();
                    for a in args {
                        match a {
                            CallArg::Qubits(q) => slices.push(arg_slice(regs, q, pos)?),
                            CallArg::Classical(e) => {
                                return Err(residue(&format!("argument `{e}` is not constant")))
                            }
                        }
                    }
                    check_binding(&callee, &params, &slices, pos)?;
                    out.push(FlatInst::Call {
                        callee,
                        args: slices,
                    });
                }
                InstKind::Loop {
                    var,
                    init,
                    step,
                    body,
                    class,
                    ..
                } => match class {
                    LoopClass::Forall { trip } => {
                        let i0 = lit_int(init).unwrap_or(0);
                        let s = lit_int(step).unwrap_or(1);
                        for g in body {
                            let InstKind::Gate {
                                kind,
                                operands,
                                angle,
                            } = &g.kind
                            else {
                                return Err(residue("forall body must contain only gates"));
                            };
                            let mut spans = Vec::new();
                            for o in operands {
                                let (a, b) = o.index.affine_in(var).ok_or_else(|| {
                                    residue(&format!("index `{}` is not affine", o.index))
                                })?;
                                spans.push(forall_span(regs, &o.name, a * i0 + b, a * s, *trip, g.pos)?);
                            }
                            out.push(FlatInst::Forall {
                                kind: *kind,
                                operands: spans,
                                count: *trip,
                                angle: angle_value(angle.as_ref(), g.pos)?,
                            });
                        }
                    }
                    LoopClass::Repeat { trip } => out.push(FlatInst::Repeat {
                        count: *trip,
                        body: self.convert_body(body, regs)?,
                    }),
                    LoopClass::Classical => {
                        return Err(residue(&format!(
                            "bounds of the loop over `{var}` are not constant"
                        )))
                    }
                },
                InstKind::Cond { guard, .. } => {
                    return Err(residue(&format!("condition `{guard}` is not constant")))
                }
                InstKind::Let { name, .. } | InstKind::Assign { name, .. } => {
                    return Err(residue(&format!("value of `{name}` is not constant")))
                }
            }
        }
        Ok(out)
    }

    fn callee_params(&self, callee: &str) -> Result<Vec<RegDecl>> {
        if let Some(w) = self.work.get(callee) {
            return Ok(w.params.clone());
        }
        if let Some(m) = self.opts.external.get(callee) {
            return Ok(m.params.clone());
        }
        Err(Error::Invalid(format!("module `{callee}` is not specialized")))
    }
}

fn assign(var: &str, v: i64, pos: Pos) -> Inst {
    Inst::new(
        InstKind::Assign {
            name: var.to_string(),
            value: Expr::lit(Value::Int(v), pos),
        },
        pos,
    )
}

fn contains_classical_loop(body: &[Inst]) -> bool {
    body.iter().any(|i| match &i.kind {
        InstKind::Loop {
            class: LoopClass::Classical,
            ..
        } => true,
        InstKind::Loop { body, .. } => contains_classical_loop(body),
        InstKind::Cond { then, els, .. } => {
            contains_classical_loop(then) || contains_classical_loop(els)
        }
        _ => false,
    })
}

/// Fold every expression with sequentially propagated constants.
pub(crate) fn fold_block(body: &mut [Inst], env: &mut Env) -> bool {
    let mut changed = false;
    let set = |e: &mut Expr, env: &Env, changed: &mut bool| {
        let f = env.fold(e);
        if f != *e {
            *e = f;
            *changed = true;
        }
    };
    for inst in body {
        match &mut inst.kind {
            InstKind::Let { name, ty, value } => {
                let v = match value {
                    Some(e) => {
                        set(e, env, &mut changed);
                        e.as_lit().map(|v| coerce(*ty, v))
                    }
                    None => None,
                };
                if let (Some(v), Some(e)) = (v, value.as_mut()) {
                    if e.as_lit() != Some(v) {
                        *e = Expr::lit(v, e.pos);
                        changed = true;
                    }
                }
                env.vals.insert(name.clone(), v);
            }
            InstKind::Assign { name, value } => {
                set(value, env, &mut changed);
                let v = value.as_lit();
                env.vals.insert(name.clone(), v);
            }
            InstKind::Gate {
                operands, angle, ..
            } => {
                for o in operands {
                    set(&mut o.index, env, &mut changed);
                }
                if let Some(a) = angle {
                    set(a, env, &mut changed);
                }
            }
            InstKind::Call { args, .. } => {
                for a in args {
                    match a {
                        CallArg::Classical(e)
                        | CallArg::Qubits(QubitArg::Index(_, e)) => set(e, env, &mut changed),
                        CallArg::Qubits(QubitArg::Slice(_, lo, hi)) => {
                            set(lo, env, &mut changed);
                            set(hi, env, &mut changed);
                        }
                        CallArg::Qubits(QubitArg::Whole(_)) => {}
                    }
                }
            }
            InstKind::Cond { guard, then, els } => {
                set(guard, env, &mut changed);
                let mut t_env = env.clone();
                let mut e_env = env.clone();
                changed |= fold_block(then, &mut t_env);
                changed |= fold_block(els, &mut e_env);
                let mut names = Vec::new();
                assigned_vars(then, &mut names);
                assigned_vars(els, &mut names);
                for n in names {
                    let (a, b) = (t_env.get(&n), e_env.get(&n));
                    env.vals.insert(n, if a == b { a } else { None });
                }
            }
            InstKind::Loop {
                var,
                init,
                bound,
                step,
                body,
                ..
            } => {
                set(init, env, &mut changed);
                set(bound, env, &mut changed);
                set(step, env, &mut changed);
                let mut names = vec![var.clone()];
                assigned_vars(body, &mut names);
                let mut inner = env.clone();
                inner.forget(&names);
                changed |= fold_block(body, &mut inner);
                env.forget(&names);
            }
        }
    }
    changed
}

/// Replace conditionals with literal guards by the taken branch.
pub(crate) fn resolve_conds(body: &mut Vec<Inst>) -> bool {
    let mut changed = false;
    let mut out = Vec::with_capacity(body.len());
    for mut inst in body.drain(..) {
        match &mut inst.kind {
            InstKind::Cond { guard, then, els } => {
                changed |= resolve_conds(then);
                changed |= resolve_conds(els);
                if let Some(g) = guard.as_lit() {
                    out.append(if g.truthy() { then } else { els });
                    changed = true;
                } else {
                    out.push(inst);
                }
            }
            InstKind::Loop { body, .. } => {
                changed |= resolve_conds(body);
                out.push(inst);
            }
            _ => out.push(inst),
        }
    }
    *body = out;
    changed
}

/// Remove assignments to variables that are never read.
fn eliminate_dead(body: &mut Vec<Inst>) -> bool {
    let mut changed = false;
    loop {
        let mut read = HashSet::new();
        collect_reads(body, &mut read);
        if !remove_unread(body, &read) {
            break;
        }
        changed = true;
    }
    changed
}

/// Variables whose current value may be observed. Inside a loop, reads of
/// its own variable see the loop-assigned value, not earlier writes.
fn collect_reads(body: &[Inst], read: &mut HashSet<String>) {
    for i in body {
        i.for_each_expr(&mut |e| {
            e.for_each_var(&mut |v| {
                read.insert(v.to_string());
            })
        });
        match &i.kind {
            InstKind::Loop { var, body, .. } => {
                let mut inner = HashSet::new();
                collect_reads(body, &mut inner);
                inner.remove(var);
                read.extend(inner);
            }
            _ => {
                for b in i.children() {
                    collect_reads(b, read);
                }
            }
        }
    }
}

fn remove_unread(body: &mut Vec<Inst>, read: &HashSet<String>) -> bool {
    let before = body.len();
    body.retain(|i| match &i.kind {
        InstKind::Let { name, .. } | InstKind::Assign { name, .. } => read.contains(name),
        _ => true,
    });
    let mut changed = body.len() != before;
    for i in body.iter_mut() {
        match &mut i.kind {
            InstKind::Loop { body, .. } => changed |= remove_unread(body, read),
            InstKind::Cond { then, els, .. } => {
                changed |= remove_unread(then, read);
                changed |= remove_unread(els, read);
            }
            _ => {}
        }
    }
    changed
}

pub(crate) fn angle_value(angle: Option<&Expr>, pos: Pos) -> Result<Option<f64>> {
    angle
        .map(|a| {
            a.as_lit()
                .map(|v| v.as_f64())
                .ok_or_else(|| Error::non_const(pos, format!("angle `{a}` is not constant")))
        })
        .transpose()
}

pub(crate) fn qubit_ref(
    regs: &HashMap<&str, (u32, &RegDecl)>,
    name: &str,
    ix: i64,
    pos: Pos,
) -> Result<QubitRef> {
    let (reg, d) = regs.get(name).ok_or_else(|| Error::Undefined {
        pos,
        name: name.to_string(),
    })?;
    if ix < 0 || ix as u64 >= d.size {
        return Err(Error::TypeMismatch {
            pos,
            msg: format!("index {ix} is out of range for `{name}` of size {}", d.size),
        });
    }
    Ok(QubitRef {
        reg: *reg,
        index: ix as u64,
    })
}

pub(crate) fn forall_span(
    regs: &HashMap<&str, (u32, &RegDecl)>,
    name: &str,
    start: i64,
    stride: i64,
    count: u64,
    pos: Pos,
) -> Result<Span> {
    let first = qubit_ref(regs, name, start, pos)?;
    qubit_ref(regs, name, start + stride * (count as i64 - 1), pos)?;
    Ok(Span {
        reg: first.reg,
        start: first.index,
        stride,
    })
}

/// Evaluate a qubit argument whose index expressions are literals.
pub(crate) fn arg_slice(
    regs: &HashMap<&str, (u32, &RegDecl)>,
    q: &QubitArg,
    pos: Pos,
) -> Result<ArgSlice> {
    let lit = |e: &Expr| {
        lit_int(e).ok_or_else(|| Error::non_const(pos, format!("index `{e}` is not constant")))
    };
    let (lo, hi) = match q {
        QubitArg::Whole(n) => {
            let (reg, d) = regs.get(n.as_str()).ok_or_else(|| Error::Undefined {
                pos,
                name: n.clone(),
            })?;
            return Ok(ArgSlice {
                reg: *reg,
                start: 0,
                len: d.size,
            });
        }
        QubitArg::Index(_, e) => {
            let i = lit(e)?;
            (i, i)
        }
        QubitArg::Slice(_, a, b) => (lit(a)?, lit(b)?),
    };
    if hi < lo {
        return Err(Error::TypeMismatch {
            pos,
            msg: format!("slice `{}[{lo}:{hi}]` is empty or descending", q.name()),
        });
    }
    let first = qubit_ref(regs, q.name(), lo, pos)?;
    qubit_ref(regs, q.name(), hi, pos)?;
    Ok(ArgSlice {
        reg: first.reg,
        start: first.index,
        len: (hi - lo + 1) as u64,
    })
}

pub(crate) fn check_binding(
    callee: &str,
    params: &[RegDecl],
    args: &[ArgSlice],
    pos: Pos,
) -> Result<()> {
    if params.len() != args.len() {
        return Err(Error::ArityMismatch {
            pos,
            name: callee.to_string(),
            expected: format!("{} qubit arguments", params.len()),
            found: args.len(),
        });
    }
    for (p, a) in params.iter().zip(args) {
        if p.size != a.len {
            return Err(Error::TypeMismatch {
                pos,
                msg: format!(
                    "`{callee}` expects {} qubits for `{}`, got {}",
                    p.size, p.name, a.len
                ),
            });
        }
    }
    Ok(())
}
