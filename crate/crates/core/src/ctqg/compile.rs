//! Lowering of a reversible-logic module to a NOT/CNOT/Toffoli netlist.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Pos, Result};
use crate::expr::{BinOp, Expr, Value};
use crate::frontend::ast::{CtqgOperand, Stmt, StmtKind};
use crate::ir::loops::trip_count;
use crate::ir::ModuleDef;

use crate::flatten::{FlatInst, FlatModule, QubitRef, RegDecl};
use crate::gate::GateKind;

use super::circuit::{CountingSink, GateCounts, GateSink, Line, RevCircuit, RevGate, Register};
use super::control::Mcx;
use super::synth::{reduce, Rhs, Synth};

/// Compile `m` into a netlist held in memory.
pub fn compile_ctqg_module(m: &ModuleDef) -> Result<RevCircuit> {
    let mut gates = Vec::new();
    let mut c = compile_ctqg_streaming(m, &mut gates)?;
    c.gates = gates;
    Ok(c)
}

/// Compile `m`, handing each gate to `sink` as soon as it is produced. The
/// returned circuit describes the lines and has no gates.
pub fn compile_ctqg_streaming(m: &ModuleDef, sink: &mut dyn GateSink) -> Result<RevCircuit> {
    let ir = m.ctqg.as_ref().ok_or_else(|| {
        Error::Invalid(format!("`{}` is not a reversible-logic module", m.name))
    })?;
    let mut registers = Vec::new();
    let mut signals = Vec::new();
    let mut next: Line = 0;
    for (name, w) in &ir.registers {
        let lines: Vec<Line> = (next..next + w).collect();
        next += w;
        signals.extend((0..*w).map(|k| format!("{name}[{k}]")));
        registers.push(Register {
            name: name.clone(),
            lines,
        });
    }
    let param_count = m.qubit_params().count();
    let mut cx = Ctx {
        regs: registers.iter().map(|r| (r.name.clone(), r.lines.clone())).collect(),
        env: HashMap::new(),
        written: HashSet::new(),
        synth: Synth::new(sink, next),
    };
    cx.block(&ir.body)?;
    let ancillas = cx.synth.mgr.created().to_vec();
    debug_assert_eq!(cx.synth.mgr.live(), 0);
    signals.extend((0..ancillas.len()).map(|k| format!("anc[{k}]")));
    Ok(RevCircuit {
        signals,
        registers,
        param_count,
        ancillas,
        gates: Vec::new(),
    })
}

struct Ctx<'a> {
    regs: HashMap<String, Vec<Line>>,
    env: HashMap<String, Value>,
    /// Registers written so far, for the `:=` freshness rule.
    written: HashSet<String>,
    synth: Synth<'a>,
}

/// Registers a statement list may modify.
fn writes(body: &[Stmt], out: &mut HashSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::CtqgInit { reg, .. }
            | StmtKind::CtqgAdd { reg, .. }
            | StmtKind::CtqgSub { reg, .. } => {
                out.insert(reg.clone());
            }
            StmtKind::For { body, .. } => writes(body, out),
            StmtKind::If { then, els, .. } | StmtKind::CtqgIf { then, els, .. } => {
                writes(then, out);
                writes(els, out);
            }
            _ => {}
        }
    }
}

enum Side {
    Reg(Vec<Line>, String),
    Const(i64),
}

impl Ctx<'_> {
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

    fn reg(&self, name: &str, pos: Pos) -> Result<Vec<Line>> {
        self.regs.get(name).cloned().ok_or_else(|| Error::Undefined {
            pos,
            name: name.to_string(),
        })
    }

    fn block(&mut self, body: &[Stmt]) -> Result<()> {
        for s in body {
            self.stmt(s).map_err(|e| e.at(s.pos))?;
        }
        Ok(())
    }

    fn side(&self, o: &CtqgOperand, pos: Pos) -> Result<Side> {
        match o {
            CtqgOperand::Const(e) => Ok(Side::Const(self.eval_int(e)?)),
            CtqgOperand::Reg(r) => Ok(Side::Reg(self.reg(r, pos)?, r.clone())),
            CtqgOperand::Mul(..) => Err(Error::Invalid(
                "a product cannot be compared".to_string(),
            )),
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Result<()> {
        let pos = s.pos;
        match &s.kind {
            StmtKind::RegisterDecl { .. } => Ok(()),
            StmtKind::ClassicalDecl { name, ty, init } => {
                match init {
                    Some(e) => {
                        let v = crate::flatten::coerce(*ty, self.eval(e)?);
                        self.env.insert(name.clone(), v);
                    }
                    None => {
                        self.env.remove(name);
                    }
                }
                Ok(())
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(value)?;
                self.env.insert(name.clone(), v);
                Ok(())
            }
            StmtKind::For {
                var,
                init,
                cond,
                bound,
                step,
                body,
                ..
            } => {
                let i0 = self.eval_int(init)?;
                let b = self.eval_int(bound)?;
                let st = self.eval_int(step)?;
                let trip = trip_count(i0, *cond, b, st).ok_or_else(|| {
                    Error::non_const(pos, format!("loop over `{var}` does not terminate"))
                })?;
                let mut v = i0;
                for _ in 0..trip {
                    self.env.insert(var.clone(), Value::Int(v));
                    self.block(body)?;
                    v += st;
                }
                self.env.insert(var.clone(), Value::Int(v));
                Ok(())
            }
            StmtKind::If { cond, then, els } => {
                let branch = if self.eval(cond)?.truthy() { then } else { els };
                self.block(branch)
            }
            StmtKind::CtqgInit { reg, value } => {
                let lines = self.reg(reg, pos)?;
                if self.written.contains(reg) || !self.synth.controls().is_empty() {
                    return Err(Error::Ctqg {
                        pos,
                        msg: format!(
                            "`{reg} := ...` must be the first, unconditional write to `{reg}`"
                        ),
                    });
                }
                let k = self.eval_int(value)?;
                if k < 0 || (lines.len() < 64 && k as u64 >> lines.len() != 0) {
                    return Err(Error::Width {
                        msg: format!("{k} does not fit in the {}-bit register `{reg}`", lines.len()),
                    });
                }
                self.written.insert(reg.clone());
                for (bit, l) in lines.iter().enumerate() {
                    if (k as u64 >> bit) & 1 == 1 {
                        self.synth.emit(Mcx::not(*l))?;
                    }
                }
                Ok(())
            }
            StmtKind::CtqgAdd { reg, operand } => self.update(reg, operand, false, pos),
            StmtKind::CtqgSub { reg, operand } => self.update(reg, operand, true, pos),
            StmtKind::CtqgIf {
                lhs,
                op,
                rhs,
                then,
                els,
            } => self.ctqg_if(lhs, *op, rhs, then, els, pos),
            StmtKind::Gate { .. }
            | StmtKind::Call { .. }
            | StmtKind::QubitDecl { .. } => Err(Error::Invalid(
                "quantum statements are not allowed in reversible-logic modules".to_string(),
            )),
        }
    }

    fn update(&mut self, reg: &str, operand: &CtqgOperand, sub: bool, pos: Pos) -> Result<()> {
        let a = self.reg(reg, pos)?;
        self.written.insert(reg.to_string());
        match operand {
            CtqgOperand::Const(e) => {
                let k = self.eval_int(e)?;
                let k = if sub { k.wrapping_neg() } else { k };
                self.synth.add_const(&a, reduce(k, a.len()) as i64)
            }
            CtqgOperand::Reg(x) => {
                let x = self.reg(x, pos)?;
                self.synth.add_reg(&a, &x, sub)
            }
            CtqgOperand::Mul(b, c) => {
                let b = self.reg(b, pos)?;
                let c = self.reg(c, pos)?;
                self.synth.mul_acc(&a, &b, &c, sub)
            }
        }
    }

    fn ctqg_if(
        &mut self,
        lhs: &CtqgOperand,
        op: BinOp,
        rhs: &CtqgOperand,
        then: &[Stmt],
        els: &[Stmt],
        pos: Pos,
    ) -> Result<()> {
        let (l, r) = (self.side(lhs, pos)?, self.side(rhs, pos)?);
        let (reg, name, op, rhs_side) = match (l, r) {
            (Side::Const(a), Side::Const(b)) => {
                let truth = Expr::new(
                    crate::expr::ExprKind::Binary(
                        op,
                        Box::new(Expr::int(a)),
                        Box::new(Expr::int(b)),
                    ),
                    pos,
                )
                .eval_const()?
                .truthy();
                return self.block(if truth { then } else { els });
            }
            (Side::Reg(a, n), Side::Const(k)) => (a, n, op, Side::Const(k)),
            (Side::Const(k), Side::Reg(a, n)) => (a, n, mirror(op), Side::Const(k)),
            (Side::Reg(a, n), Side::Reg(b, m)) => (a, n, op, Side::Reg(b, m)),
        };
        let mut modified = HashSet::new();
        writes(then, &mut modified);
        writes(els, &mut modified);
        let mut used = vec![name.clone()];
        if let Side::Reg(_, m) = &rhs_side {
            used.push(m.clone());
        }
        if let Some(u) = used.iter().find(|u| modified.contains(*u)) {
            return Err(Error::Ctqg {
                pos,
                msg: format!("register `{u}` is tested by the condition and modified in its body"),
            });
        }
        let rhs_lines;
        let rhs = match &rhs_side {
            Side::Const(k) => Rhs::Const(*k),
            Side::Reg(b, _) => {
                rhs_lines = b.clone();
                Rhs::Reg(&rhs_lines)
            }
        };
        let out = self.synth.mgr.alloc(&mut self.synth.next_line);
        let anc = self.synth.compare(&reg, op, rhs, out)?;
        self.synth.push_control(out);
        let r = self.block(then);
        self.synth.pop_control();
        r?;
        if !els.is_empty() {
            self.synth.emit_raw(Mcx::not(out))?;
            self.synth.push_control(out);
            let r = self.block(els);
            self.synth.pop_control();
            r?;
            self.synth.emit_raw(Mcx::not(out))?;
        }
        self.synth.uncompare(&reg, op, rhs, out, anc)?;
        self.synth.mgr.release(out);
        Ok(())
    }
}

/// `k op r` as `r op' k`.
fn mirror(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Gt => BinOp::Lt,
        BinOp::Le => BinOp::Ge,
        BinOp::Ge => BinOp::Le,
        other => other,
    }
}

/// Name of the ancilla register: `anc`, or a variant not used by `c`.
fn ancilla_name(c: &RevCircuit) -> String {
    let mut name = "anc".to_string();
    while c.registers.iter().any(|r| r.name == name) {
        name.push('_');
    }
    name
}

/// `c` as a module over qubits: parameter registers stay parameters, the
/// other registers and the ancilla lines become locals.
pub fn to_flat_module(c: &RevCircuit, name: &str) -> FlatModule {
    let mut params = Vec::new();
    let mut locals = Vec::new();
    // Line -> (register number, index).
    let mut map: Vec<QubitRef> = vec![QubitRef { reg: 0, index: 0 }; c.width()];
    for (k, r) in c.registers.iter().enumerate() {
        for (i, l) in r.lines.iter().enumerate() {
            map[*l as usize] = QubitRef {
                reg: k as u32,
                index: i as u64,
            };
        }
        let d = RegDecl {
            name: r.name.clone(),
            size: r.lines.len() as u64,
            scalar: false,
        };
        if k < c.param_count {
            params.push(d);
        } else {
            locals.push(d);
        }
    }
    if !c.ancillas.is_empty() {
        let reg = c.registers.len() as u32;
        for (i, l) in c.ancillas.iter().enumerate() {
            map[*l as usize] = QubitRef {
                reg,
                index: i as u64,
            };
        }
        locals.push(RegDecl {
            name: ancilla_name(c),
            size: c.ancillas.len() as u64,
            scalar: false,
        });
    }
    let body = c
        .gates
        .iter()
        .map(|g| {
            let (kind, lines) = qasm_gate(*g);
            FlatInst::Gate {
                kind,
                qubits: lines.iter().map(|l| map[*l as usize]).collect(),
                angle: None,
            }
        })
        .collect();
    FlatModule {
        name: name.to_string(),
        params,
        locals,
        body,
    }
}

/// Kind and operands, target first.
fn qasm_gate(g: RevGate) -> (GateKind, Vec<Line>) {
    match g {
        RevGate::Not(t) => (GateKind::X, vec![t]),
        RevGate::Cnot(c, t) => (GateKind::Cnot, vec![t, c]),
        RevGate::Toffoli(a, b, t) => (GateKind::Toffoli, vec![t, a, b]),
    }
}

/// Writes a netlist line per gate: `not t`, `cnot t,c`, `toffoli t,a,b`,
/// target first.
pub struct NetlistWriter<W: std::io::Write> {
    out: W,
    names: Vec<String>,
}

impl<W: std::io::Write> NetlistWriter<W> {
    fn line_name(&self, l: Line) -> &str {
        &self.names[l as usize]
    }
}

impl<W: std::io::Write> GateSink for NetlistWriter<W> {
    fn gate(&mut self, g: RevGate) -> Result<()> {
        let (kind, lines) = qasm_gate(g);
        let word = match kind {
            GateKind::X => "not",
            GateKind::Cnot => "cnot",
            _ => "toffoli",
        };
        let ops: Vec<&str> = lines.iter().map(|l| self.line_name(*l)).collect();
        writeln!(self.out, "  {word} {};", ops.join(","))
            .map_err(|e| Error::Invalid(format!("write failed: {e}")))
    }
}

/// Compile `m` and write its netlist as a one-module flat document. The
/// module is compiled twice, first to size the ancilla register, so the
/// gate list is never held in memory.
pub fn write_netlist(m: &ModuleDef, out: impl std::io::Write) -> Result<GateCounts> {
    let mut counts = CountingSink::default();
    let shape = compile_ctqg_streaming(m, &mut counts)?;
    let anc = ancilla_name(&shape);
    let mut names = vec![String::new(); shape.width()];
    for r in &shape.registers {
        for (i, l) in r.lines.iter().enumerate() {
            names[*l as usize] = format!("{}[{i}]", r.name);
        }
    }
    for (i, l) in shape.ancillas.iter().enumerate() {
        names[*l as usize] = format!("{anc}[{i}]");
    }
    let mut w = NetlistWriter { out, names };
    let params: Vec<String> = shape.registers[..shape.param_count]
        .iter()
        .map(|r| format!("qbit* {}", r.name))
        .collect();
    let io = |e: std::io::Error| Error::Invalid(format!("write failed: {e}"));
    w.out
        .write_all(crate::qasm::emit::header(&m.name, &params).as_bytes())
        .map_err(io)?;
    for r in &shape.registers[shape.param_count..] {
        writeln!(w.out, "  qbit {}[{}];", r.name, r.lines.len()).map_err(io)?;
    }
    if !shape.ancillas.is_empty() {
        writeln!(w.out, "  qbit {anc}[{}];", shape.ancillas.len()).map_err(io)?;
    }
    compile_ctqg_streaming(m, &mut w)?;
    writeln!(w.out, "}}").map_err(io)?;
    Ok(counts.counts)
}

/// The netlist document of `m` as a string.
pub fn netlist_text(m: &ModuleDef) -> Result<String> {
    let mut buf = Vec::new();
    write_netlist(m, &mut buf)?;
    Ok(String::from_utf8(buf).expect("netlist is ASCII"))
}

/// Run `c` on the named register values (others start at 0) and return every
/// register's final value. Fails if an ancilla line does not end at 0.
pub fn simulate(c: &RevCircuit, inputs: &[(&str, u64)]) -> Result<Vec<(String, u64)>> {
    let bits = c.input(inputs)?;
    let out = super::circuit::simulate_reversible(c, &bits)?;
    if let Some(a) = c.ancillas.iter().find(|a| out[**a as usize]) {
        return Err(Error::Invalid(format!(
            "ancilla line {} was left dirty",
            c.signals[*a as usize]
        )));
    }
    Ok(c.registers
        .iter()
        .map(|r| (r.name.clone(), c.read(&out, &r.name).unwrap_or(0)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile_library;

    const SUMMATION: &str = include_str!("../../fixtures/summation.scf");

    fn module(src: &str) -> ModuleDef {
        let p = compile_library(src).unwrap();
        p.modules.into_values().find(|m| m.is_ctqg()).unwrap()
    }

    fn value(out: &[(String, u64)], name: &str) -> u64 {
        out.iter().find(|(n, _)| n == name).unwrap().1
    }

    #[test]
    fn summation_loop() {
        let c = compile_ctqg_module(&module(SUMMATION)).unwrap();
        let out = simulate(&c, &[("n", 5)]).unwrap();
        assert_eq!(value(&out, "sum"), 15);
        assert_eq!(value(&out, "i"), 101);
        assert_eq!(value(&out, "n"), 5);
        let out = simulate(&c, &[("n", 0)]).unwrap();
        assert_eq!(value(&out, "sum"), 0);
    }

    #[test]
    fn streaming_matches_materialized() {
        let m = module(SUMMATION);
        let full = compile_ctqg_module(&m).unwrap();
        let mut counts = CountingSink::default();
        let shape = compile_ctqg_streaming(&m, &mut counts).unwrap();
        assert!(shape.gates.is_empty());
        assert_eq!(shape.signals, full.signals);
        assert_eq!(counts.counts, full.counts());
    }

    #[test]
    fn inverse_undoes_the_circuit() {
        let c = compile_ctqg_module(&module(SUMMATION)).unwrap();
        let inv = c.inverse();
        for n in [0u64, 3, 77, 65535] {
            let bits = c.input(&[("n", n), ("sum", 9)]).unwrap();
            let fwd = simulate_reversible_checked(&c, &bits);
            assert_eq!(simulate_reversible_checked(&inv, &fwd), bits);
        }
    }

    fn simulate_reversible_checked(c: &RevCircuit, bits: &[bool]) -> Vec<bool> {
        super::super::circuit::simulate_reversible(c, bits).unwrap()
    }

    #[test]
    fn arithmetic_statements() {
        let src = "module m(qint[6] a, qint[3] b, qint[3] c){ $ a += 5; $ a -= b; $ a += b * c; }";
        let c = compile_ctqg_module(&module(src)).unwrap();
        for b in 0..8u64 {
            for cv in 0..8u64 {
                for a in [0u64, 17, 63] {
                    let out = simulate(&c, &[("a", a), ("b", b), ("c", cv)]).unwrap();
                    let want = (a + 5 + 64 - b + b * cv) % 64;
                    assert_eq!(value(&out, "a"), want, "a={a} b={b} c={cv}");
                    assert_eq!(value(&out, "b"), b);
                    assert_eq!(value(&out, "c"), cv);
                }
            }
        }
    }

    #[test]
    fn if_else_selects_branch() {
        let src = "module m(qint[4] x, qint[4] y, qint[4] z){ $if (x < y) $ z += 1; $else $ z += 2; $endif $if (3 >= x) $ z += 4; $endif }";
        let c = compile_ctqg_module(&module(src)).unwrap();
        for x in 0..16u64 {
            for y in 0..16u64 {
                let out = simulate(&c, &[("x", x), ("y", y)]).unwrap();
                let mut z = if x < y { 1 } else { 2 };
                if x <= 3 {
                    z += 4;
                }
                assert_eq!(value(&out, "z"), z);
            }
        }
    }

    #[test]
    fn condition_register_cannot_change() {
        let src = "module m(qint[4] x){ $if (x < 3) $ x += 1; $endif }";
        let err = compile_ctqg_module(&module(src)).unwrap_err();
        assert!(err.to_string().contains("modified"), "{err}");
    }

    #[test]
    fn netlist_reads_back_as_qasm() {
        let m = module("module add2(qint[2] s, qint[2] x){ $ s += x; }");
        let text = netlist_text(&m).unwrap();
        assert!(text.starts_with("module add2 ( qbit* s , qbit* x )\n{\n"), "{text}");
        let p = crate::qasm::parse_qasm_hl(&text).unwrap();
        let flat = to_flat_module(&compile_ctqg_module(&m).unwrap(), "add2");
        assert_eq!(p.modules["add2"], flat);
        let counts = compile_ctqg_module(&m).unwrap().counts();
        assert_eq!((counts.cnot, counts.toffoli), (4, 2));
    }

    #[test]
    fn flat_module_keeps_summation_behaviour() {
        let c = compile_ctqg_module(&module(SUMMATION)).unwrap();
        let f = to_flat_module(&c, "main_ctqg");
        assert_eq!(f.params.len(), 3);
        assert_eq!(f.locals.len(), 1);
        assert_eq!(f.body.len(), c.gates.len());
    }

    #[test]
    fn late_initialization_is_rejected() {
        let src = "module m(qint[4] x){ $ x += 1; $ x := 2; }";
        assert!(compile_ctqg_module(&module(src)).is_err());
    }
}
