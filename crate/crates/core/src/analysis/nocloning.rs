use std::collections::{HashMap, HashSet};

use crate::flatten::{FlatInst, FlatModule, Span, SpecializedProgram};

use super::{DiagKind, Diagnostic, Severity};

/// Where each register of a module lives: an alias group and an offset.
/// Registers in different groups never share qubits.
type Binding = Vec<(u32, u64)>;

/// Aliasing pattern of the parameters: groups renumbered by first use,
/// offsets relative to the smallest offset in the group.
fn canonical(b: &[(u32, u64)]) -> Binding {
    let mut ids: HashMap<u32, u32> = HashMap::new();
    let mut min: HashMap<u32, u64> = HashMap::new();
    for (g, o) in b {
        let m = min.entry(*g).or_insert(*o);
        *m = (*m).min(*o);
    }
    b.iter()
        .map(|(g, o)| {
            let n = ids.len() as u32;
            (*ids.entry(*g).or_insert(n), o - min[g])
        })
        .collect()
}

/// Errors for every multi-qubit gate whose operands resolve to the same
/// qubit, including through call bindings. Each module is checked once per
/// distinct aliasing pattern of its parameters.
pub fn check_no_cloning(p: &SpecializedProgram) -> Vec<Diagnostic> {
    let mut c = Checker {
        p,
        seen: HashSet::new(),
        out: Vec::new(),
    };
    if let Some(m) = p.modules.get(&p.entry) {
        let b: Binding = (0..m.params.len() as u32).map(|g| (g, 0)).collect();
        c.module(m, b, "");
    }
    c.out
}

struct Checker<'a> {
    p: &'a SpecializedProgram,
    seen: HashSet<(String, Binding)>,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn module(&mut self, m: &FlatModule, params: Binding, via: &str) {
        if !self.seen.insert((m.name.clone(), params.clone())) {
            return;
        }
        let next = params.iter().map(|(g, _)| g + 1).max().unwrap_or(0);
        let mut regs = params;
        regs.extend((0..m.locals.len() as u32).map(|k| (next + k, 0)));
        for (idx, inst) in m.body.iter().enumerate() {
            self.inst(m, inst, idx, &regs, via);
        }
    }

    fn report(&mut self, m: &FlatModule, idx: usize, what: String, via: &str) {
        self.out.push(Diagnostic {
            severity: Severity::Error,
            kind: DiagKind::Cloning,
            message: format!("{what}{via}"),
            module: m.name.clone(),
            index: idx,
        });
    }

    fn inst(&mut self, m: &FlatModule, inst: &FlatInst, idx: usize, regs: &Binding, via: &str) {
        match inst {
            FlatInst::Gate { kind, qubits, .. } => {
                let phys: Vec<(u32, u64)> = qubits
                    .iter()
                    .map(|q| {
                        let (g, o) = regs[q.reg as usize];
                        (g, o + q.index)
                    })
                    .collect();
                for i in 0..phys.len() {
                    for j in i + 1..phys.len() {
                        if phys[i] == phys[j] {
                            let what = format!(
                                "{kind} operands {} and {} are the same qubit",
                                m.qubit_name(qubits[i]),
                                m.qubit_name(qubits[j])
                            );
                            self.report(m, idx, what, via);
                            return;
                        }
                    }
                }
            }
            FlatInst::Forall {
                kind,
                operands,
                count,
                ..
            } => {
                for i in 0..operands.len() {
                    for j in i + 1..operands.len() {
                        if let Some(k) = collision(&operands[i], &operands[j], *count, regs) {
                            let what = format!(
                                "{kind} operands {} and {} are the same qubit",
                                m.qubit_name(operands[i].at(k)),
                                m.qubit_name(operands[j].at(k))
                            );
                            self.report(m, idx, what, via);
                            return;
                        }
                    }
                }
            }
            FlatInst::Repeat { body, .. } => {
                for i in body {
                    self.inst(m, i, idx, regs, via);
                }
            }
            FlatInst::Call { callee, args } => {
                let Some(c) = self.p.modules.get(callee) else {
                    return;
                };
                let b: Binding = args
                    .iter()
                    .map(|a| {
                        let (g, o) = regs[a.reg as usize];
                        (g, o + a.start)
                    })
                    .collect();
                let shared = b
                    .iter()
                    .enumerate()
                    .any(|(i, x)| b[..i].iter().any(|y| y.0 == x.0));
                let via = if shared {
                    let names: Vec<String> = args
                        .iter()
                        .map(|a| m.reg(a.reg).name.clone())
                        .collect();
                    format!(" (arguments {} of the call at {}#{idx})", names.join(", "), m.name)
                } else {
                    via.to_string()
                };
                self.module(c, canonical(&b), &via);
            }
        }
    }
}

/// First iteration at which two spans name the same qubit.
fn collision(a: &Span, b: &Span, count: u64, regs: &Binding) -> Option<u64> {
    let (ga, oa) = regs[a.reg as usize];
    let (gb, ob) = regs[b.reg as usize];
    if ga != gb {
        return None;
    }
    let (sa, sb) = (oa as i128 + a.start as i128, ob as i128 + b.start as i128);
    if a.stride == b.stride {
        return (sa == sb && count > 0).then_some(0);
    }
    // sa + da*k == sb + db*k with da - db = ±2.
    let diff = sb - sa;
    let dd = (a.stride - b.stride) as i128;
    if diff % dd != 0 {
        return None;
    }
    let k = diff / dd;
    (k >= 0 && k < count as i128).then_some(k as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatten::{flatten_pass_driven, FlattenOptions};
    use crate::frontend::compile_source;

    fn errors(src: &str) -> Vec<Diagnostic> {
        let p = flatten_pass_driven(&compile_source(src).unwrap(), &FlattenOptions::default())
            .unwrap();
        check_no_cloning(&p)
    }

    #[test]
    fn direct_duplicate() {
        let d = errors("module main(){ qbit q[2]; CNOT(q[0], q[0]); }");
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("q[0] and q[0]"), "{}", d[0]);
        assert!(errors("module main(){ qbit q[2]; CNOT(q[0], q[1]); }").is_empty());
    }

    #[test]
    fn through_binding() {
        let src = "module m(qbit a[1], qbit b[1]){ CNOT(a[0], b[0]); }
                   module main(){ qbit q[1]; qbit r[1]; m(q, q); m(q, r); m(q, q); }";
        let d = errors(src);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].module, "m");
    }

    #[test]
    fn overlapping_slices() {
        let src = "module m(qbit a[2], qbit b[2]){ CNOT(a[1], b[0]); }
                   module main(){ qbit q[4]; m(q[0:1], q[1:2]); m(q[0:1], q[2:3]); }";
        let d = errors(src);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].message.contains("a[1] and b[0]"));
    }

    #[test]
    fn reversed_forall_meets_itself() {
        let src = "module main(){ qbit q[9]; for (int i = 0; i < 9; i++) { CNOT(q[i], q[8-i]); } }";
        assert_eq!(errors(src).len(), 1);
        let src = "module main(){ qbit q[10]; for (int i = 0; i < 10; i++) { CNOT(q[i], q[9-i]); } }";
        assert!(errors(src).is_empty());
    }

    #[test]
    fn forall_collisions() {
        let regs: Binding = vec![(0, 0)];
        let up = Span { reg: 0, start: 0, stride: 1 };
        let down = Span { reg: 0, start: 9, stride: -1 };
        assert_eq!(collision(&up, &down, 10, &regs), None);
        let down8 = Span { reg: 0, start: 8, stride: -1 };
        assert_eq!(collision(&up, &down8, 10, &regs), Some(4));
        assert_eq!(collision(&up, &up, 10, &regs), Some(0));
    }
}
