use std::fmt;

use crate::expr::{BinOp, Expr, Value};

use super::{body_mentions, CallArg, Inst, InstKind, ModuleDef};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopClass {
    /// Must be unrolled by classical control resolution.
    Classical,
    /// Iterations act on disjoint qubits and may run in parallel.
    Forall { trip: u64 },
    /// A loop-invariant quantum body executed `trip` times in sequence.
    Repeat { trip: u64 },
}

impl fmt::Display for LoopClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoopClass::Classical => f.write_str("classical"),
            LoopClass::Forall { trip } => write!(f, "forall({trip})"),
            LoopClass::Repeat { trip } => write!(f, "repeat({trip})"),
        }
    }
}

/// Number of iterations of `for (v = init; v cond bound; v += step)`, or
/// `None` if the loop would not terminate.
pub fn trip_count(init: i64, cond: BinOp, bound: i64, step: i64) -> Option<u64> {
    let holds = |v: i64| match cond {
        BinOp::Lt => v < bound,
        BinOp::Le => v <= bound,
        BinOp::Gt => v > bound,
        BinOp::Ge => v >= bound,
        BinOp::Ne => v != bound,
        _ => false,
    };
    if !holds(init) {
        return Some(0);
    }
    if step == 0 {
        return None;
    }
    let (init, bound, step) = (init as i128, bound as i128, step as i128);
    let span = match cond {
        BinOp::Lt if step > 0 => bound - 1 - init,
        BinOp::Le if step > 0 => bound - init,
        BinOp::Gt if step < 0 => init - (bound + 1),
        BinOp::Ge if step < 0 => init - bound,
        BinOp::Ne if (bound - init) % step == 0 && (bound - init) / step > 0 => {
            return Some(((bound - init) / step) as u64)
        }
        _ => return None,
    };
    Some((span / step.abs() + 1) as u64)
}

/// Integer value of a literal expression.
pub fn lit_int(e: &Expr) -> Option<i64> {
    e.as_lit().and_then(Value::as_int)
}

/// Whether all qubit indices of a single-gate-per-iteration sequence are
/// disjoint across iterations. Each operand is `(array, coeff, offset)`
/// with the index at iteration `k` equal to `coeff * k + offset`.
pub fn iterations_disjoint(operands: &[(&str, i64, i64)], trip: u64) -> bool {
    let t = trip as i128;
    for (x, &(a1, c1, o1)) in operands.iter().enumerate() {
        for &(a2, c2, o2) in &operands[x..] {
            if a1 != a2 {
                continue;
            }
            let (c1, o1, c2, o2) = (c1 as i128, o1 as i128, c2 as i128, o2 as i128);
            let clash = if c1 == c2 {
                let d = (o2 - o1) * c1;
                d != 0 && d.abs() < t
            } else {
                let s = (o2 - o1) * c1;
                s >= 1 && s <= 2 * t - 3
            };
            if clash {
                return false;
            }
        }
    }
    true
}

/// Classify one loop whose bounds are literals and whose nested loops are
/// already classified.
pub fn classify_loop(
    var: &str,
    init: &Expr,
    cond: BinOp,
    bound: &Expr,
    step: &Expr,
    body: &[Inst],
) -> LoopClass {
    let (Some(i0), Some(b), Some(s)) = (lit_int(init), lit_int(bound), lit_int(step)) else {
        return LoopClass::Classical;
    };
    let Some(trip) = trip_count(i0, cond, b, s) else {
        return LoopClass::Classical;
    };
    if trip < 2 || body.is_empty() {
        return LoopClass::Classical;
    }
    if is_forall_body(var, i0, s, trip, body) {
        return LoopClass::Forall { trip };
    }
    if !body_mentions(body, var) && body.iter().all(is_pure_invariant) {
        return LoopClass::Repeat { trip };
    }
    LoopClass::Classical
}

fn is_forall_body(var: &str, init: i64, step: i64, trip: u64, body: &[Inst]) -> bool {
    let mut refs = Vec::new();
    for inst in body {
        let InstKind::Gate {
            operands, angle, ..
        } = &inst.kind
        else {
            return false;
        };
        if angle.as_ref().is_some_and(|a| !a.is_const()) {
            return false;
        }
        for o in operands {
            let Some((a, b)) = o.index.affine_in(var) else {
                return false;
            };
            let coeff = a * step;
            if coeff != 1 && coeff != -1 {
                return false;
            }
            refs.push((o.name.as_str(), coeff, a * init + b));
        }
    }
    iterations_disjoint(&refs, trip)
}

fn is_pure_invariant(inst: &Inst) -> bool {
    let mut consts = true;
    inst.for_each_expr(&mut |e| consts &= e.is_const());
    if !consts {
        return false;
    }
    match &inst.kind {
        InstKind::Gate { .. } => true,
        InstKind::Call { args, .. } => args.iter().all(|a| matches!(a, CallArg::Qubits(_))),
        InstKind::Loop { class, body, .. } => {
            !matches!(class, LoopClass::Classical) && body.iter().all(is_pure_invariant)
        }
        _ => false,
    }
}

/// Tag every loop of the module, innermost first. Conservative: any loop
/// that is not provably forall or repeat stays classical.
pub fn classify_loops(m: &ModuleDef) -> ModuleDef {
    let mut out = m.clone();
    classify_body(&mut out.body);
    out
}

pub fn classify_body(body: &mut [Inst]) {
    for inst in body {
        match &mut inst.kind {
            InstKind::Loop {
                var,
                init,
                cond,
                bound,
                step,
                body,
                class,
            } => {
                classify_body(body);
                *class = classify_loop(var, init, *cond, bound, step, body);
            }
            InstKind::Cond { then, els, .. } => {
                classify_body(then);
                classify_body(els);
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend::compile_source;

    use super::*;

    fn classes(src: &str, module: &str) -> Vec<LoopClass> {
        let p = compile_source(src).unwrap();
        let m = classify_loops(&p.modules[module]);
        let mut out = Vec::new();
        fn walk(b: &[Inst], out: &mut Vec<LoopClass>) {
            for i in b {
                if let InstKind::Loop { class, body, .. } = &i.kind {
                    out.push(*class);
                    walk(body, out);
                }
            }
        }
        walk(&m.body, &mut out);
        out
    }

    #[test]
    fn trip_counts() {
        assert_eq!(trip_count(0, BinOp::Lt, 1000, 1), Some(1000));
        assert_eq!(trip_count(1, BinOp::Le, 3000, 1), Some(3000));
        assert_eq!(trip_count(9, BinOp::Ge, 0, -2), Some(5));
        assert_eq!(trip_count(0, BinOp::Lt, 0, 1), Some(0));
        assert_eq!(trip_count(0, BinOp::Lt, 5, -1), None);
        assert_eq!(trip_count(0, BinOp::Ne, 7, 2), None);
    }

    #[test]
    fn parallel_layer_inner_loop_is_forall() {
        let c = classes(
            "module foo(qbit q[1000]){ for(int i=0;i<1000;i++) H(q[i]); CNOT(q[999],q[0]); } module main(){ qbit b[1000]; foo(b); }",
            "foo",
        );
        assert_eq!(c, vec![LoopClass::Forall { trip: 1000 }]);
    }

    #[test]
    fn oracle_loop_loops_are_classical_before_specialization() {
        let src = "module o(qbit a[1], qbit b[1], int j){ X(a[0]); } module main(){ qbit a[1], b[1]; int i, j; for (i=1; i<=3000; i++) { for (j=0; j<=3; j++) { o(a, b, j); } } }";
        assert_eq!(
            classes(src, "main"),
            vec![LoopClass::Classical, LoopClass::Classical]
        );
    }

    #[test]
    fn mixed_body_is_classical() {
        let src = "module main(){ qbit q[8]; int s; s = 0; for (int i=0;i<8;i++) { H(q[i]); s = s + i; } }";
        assert_eq!(classes(src, "main"), vec![LoopClass::Classical]);
    }

    #[test]
    fn overlapping_iterations_are_not_forall() {
        let src = "module main(){ qbit q[9]; for (int i=0;i<8;i++) CNOT(q[i+1], q[i]); }";
        assert_eq!(classes(src, "main"), vec![LoopClass::Classical]);
        let src = "module main(){ qbit q[9]; for (int i=0;i<4;i++) CNOT(q[i+4], q[i]); }";
        assert_eq!(classes(src, "main"), vec![LoopClass::Forall { trip: 4 }]);
    }

    #[test]
    fn invariant_body_is_repeat() {
        let src = "module main(){ qbit q[2]; for (int i=0;i<7;i++) { H(q[0]); CNOT(q[1], q[0]); } }";
        assert_eq!(classes(src, "main"), vec![LoopClass::Repeat { trip: 7 }]);
    }

    #[test]
    fn idempotent() {
        let p = compile_source(
            "module main(){ qbit q[9]; for (int i=0;i<4;i++) CNOT(q[i+4], q[i]); }",
        )
        .unwrap();
        let once = classify_loops(&p.modules["main"]);
        assert_eq!(classify_loops(&once), once);
    }
}
