//! Streaming gate emitter with a stack of active controls and a shared
//! ancilla pool.

use crate::error::{Error, Result};
use crate::expr::BinOp;

use super::ancilla::AncillaManager;
use super::arith::{
    add_wide_gates, adder_carry_gates, adder_gates, check_disjoint, controlled_adder_plan, reversed,
};
use super::circuit::{GateSink, Line, RevGate};
use super::control::{lower_mcx, AllLines, Mcx};

pub struct Synth<'a> {
    sink: &'a mut dyn GateSink,
    controls: Vec<Line>,
    /// Lines `0..next_line` exist.
    pub next_line: Line,
    pub mgr: AncillaManager,
    emitted: u64,
}

/// Right-hand side of a comparison.
#[derive(Clone, Copy, Debug)]
pub enum Rhs<'l> {
    Reg(&'l [Line]),
    Const(i64),
}

impl<'a> Synth<'a> {
    pub fn new(sink: &'a mut dyn GateSink, lines: Line) -> Self {
        Self {
            sink,
            controls: Vec::new(),
            next_line: lines,
            mgr: AncillaManager::new(),
            emitted: 0,
        }
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn controls(&self) -> &[Line] {
        &self.controls
    }

    pub fn push_control(&mut self, c: Line) {
        self.controls.push(c);
    }

    pub fn pop_control(&mut self) {
        self.controls.pop();
    }

    /// Emit `g` under every active control.
    pub fn emit(&mut self, g: impl Into<Mcx>) -> Result<()> {
        let mut g = g.into();
        for &c in &self.controls {
            if g.touches(c) {
                return Err(Error::ControlOverlap { line: c as usize });
            }
        }
        g.controls.extend(self.controls.iter().copied());
        self.lower(&g)
    }

    /// Emit `g` ignoring the active controls.
    pub fn emit_raw(&mut self, g: impl Into<Mcx>) -> Result<()> {
        self.lower(&g.into())
    }

    fn lower(&mut self, g: &Mcx) -> Result<()> {
        let borrow = AllLines(self.next_line);
        let emitted = &mut self.emitted;
        let sink = &mut *self.sink;
        lower_mcx(
            g,
            &borrow,
            &mut super::circuit::FnSink(|p: RevGate| {
                *emitted += 1;
                sink.gate(p)
            }),
        )
    }

    pub fn emit_all(&mut self, gates: impl IntoIterator<Item = RevGate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.emit(g))
    }

    /// Lines that may be borrowed dirty by an arithmetic fragment under
    /// the active controls.
    fn free_lines(&self, exclude: &[&[Line]]) -> Vec<Line> {
        (0..self.next_line)
            .filter(|l| !self.controls.contains(l) && exclude.iter().all(|e| !e.contains(l)))
            .collect()
    }

    /// Load `k` into pooled ancillas, uncontrolled.
    fn load_const(&mut self, width: usize, k: u64) -> Result<Vec<Line>> {
        let anc = self.mgr.alloc_n(width, &mut self.next_line);
        for (bit, l) in anc.iter().enumerate() {
            if (k >> bit) & 1 == 1 {
                self.emit_raw(Mcx::not(*l))?;
            }
        }
        Ok(anc)
    }

    fn unload_const(&mut self, anc: Vec<Line>, k: u64) -> Result<()> {
        for (bit, l) in anc.iter().enumerate().rev() {
            if (k >> bit) & 1 == 1 {
                self.emit_raw(Mcx::not(*l))?;
            }
        }
        self.mgr.release_all(&anc);
        Ok(())
    }

    /// `a := a + k mod 2^|a|` through `|a|` pooled ancillas holding `k`.
    pub fn add_const(&mut self, a: &[Line], k: i64) -> Result<()> {
        let k = reduce(k, a.len());
        if k == 0 {
            return Ok(());
        }
        let anc = self.load_const(a.len(), k)?;
        self.emit_all(adder_gates(a, &anc)?)?;
        self.unload_const(anc, k)
    }

    /// `a := a ± x mod 2^|a|`.
    pub fn add_reg(&mut self, a: &[Line], x: &[Line], subtract: bool) -> Result<()> {
        let free = self.free_lines(&[a, x]);
        let g = add_wide_gates(a, x, &free)?;
        self.emit_all(if subtract { reversed(g) } else { g })
    }

    /// `a := a ± b·c mod 2^|a|`: one addition of `b` into `a[i..]` per bit
    /// `c[i]`, controlled by that bit. Carries ripple through one pooled
    /// ancilla. Rows wider than `b` widen it with borrowed dirty lines.
    pub fn mul_acc(&mut self, a: &[Line], b: &[Line], c: &[Line], subtract: bool) -> Result<()> {
        check_disjoint(&[("target", a), ("multiplicand", b), ("multiplier", c)])?;
        let free = self.free_lines(&[a, b, c]);
        let rows = c.len().min(a.len());
        let z = self.mgr.alloc(&mut self.next_line);
        let mut plan: Vec<(Line, RevGate, bool)> = Vec::new();
        for (i, &ci) in c[..rows].iter().enumerate() {
            let s = &a[i..];
            if b.len() >= s.len() {
                for (g, ctl) in controlled_adder_plan(s, &b[..s.len()], z)? {
                    plan.push((ci, g, ctl));
                }
            } else {
                let borrow: Vec<Line> = c
                    .iter()
                    .copied()
                    .filter(|&l| l != ci)
                    .chain(a[..i].iter().copied())
                    .chain(free.iter().copied().filter(|&l| l != ci))
                    .collect();
                for g in add_wide_gates(s, b, &borrow)? {
                    plan.push((ci, g, true));
                }
            }
        }
        if subtract {
            plan.reverse();
        }
        let mut result = Ok(());
        for (ci, g, ctl) in plan {
            result = if ctl {
                self.push_control(ci);
                let r = self.emit(g);
                self.pop_control();
                r
            } else {
                self.emit_raw(g)
            };
            if result.is_err() {
                break;
            }
        }
        self.mgr.release(z);
        result
    }

    /// Compute `[a op rhs]` into the zeroed line `out`, uncontrolled. Returns
    /// the ancillas holding a loaded constant, to be passed to
    /// [`Synth::uncompare`] along with the same arguments.
    pub fn compare(&mut self, a: &[Line], op: BinOp, rhs: Rhs, out: Line) -> Result<Vec<Line>> {
        let (gates, anc) = self.compare_gates(a, op, rhs, out)?;
        for g in gates {
            self.emit_raw(g)?;
        }
        Ok(anc)
    }

    pub fn uncompare(
        &mut self,
        a: &[Line],
        op: BinOp,
        rhs: Rhs,
        out: Line,
        anc: Vec<Line>,
    ) -> Result<()> {
        let gates = self.compare_plan(a, op, rhs, out, &anc)?;
        for g in gates.into_iter().rev() {
            self.emit_raw(g)?;
        }
        if let Rhs::Const(k) = rhs {
            if let Some(k) = fits(k, a.len()) {
                self.unload_const(anc, k)?;
            }
        }
        Ok(())
    }

    fn compare_gates(
        &mut self,
        a: &[Line],
        op: BinOp,
        rhs: Rhs,
        out: Line,
    ) -> Result<(Vec<Mcx>, Vec<Line>)> {
        let anc = match rhs {
            Rhs::Const(k) => match fits(k, a.len()) {
                Some(k) => self.load_const(a.len(), k)?,
                None => Vec::new(),
            },
            Rhs::Reg(_) => Vec::new(),
        };
        let g = self.compare_plan(a, op, rhs, out, &anc)?;
        Ok((g, anc))
    }

    /// Gates computing the predicate, given the constant (if any) already
    /// loaded into `anc`.
    fn compare_plan(
        &self,
        a: &[Line],
        op: BinOp,
        rhs: Rhs,
        out: Line,
        anc: &[Line],
    ) -> Result<Vec<Mcx>> {
        let b: &[Line] = match rhs {
            Rhs::Reg(b) => b,
            Rhs::Const(k) => match fits(k, a.len()) {
                Some(_) => anc,
                None => {
                    // The constant is outside the register's range, so the
                    // predicate does not depend on `a`.
                    let truth = match op {
                        BinOp::Lt | BinOp::Le | BinOp::Ne => k > 0,
                        BinOp::Gt | BinOp::Ge => k < 0,
                        _ => false,
                    };
                    return Ok(if truth { vec![Mcx::not(out)] } else { Vec::new() });
                }
            },
        };
        compare_gates(a, b, op, out)
    }
}

/// `k mod 2^width` as an unsigned value.
pub fn reduce(k: i64, width: usize) -> u64 {
    if width >= 64 {
        k as u64
    } else {
        (k as u64) & ((1u64 << width) - 1)
    }
}

/// `k` if it is representable in `width` unsigned bits.
fn fits(k: i64, width: usize) -> Option<u64> {
    if k < 0 {
        None
    } else if width >= 64 || (k as u64) < (1u64 << width) {
        Some(k as u64)
    } else {
        None
    }
}

/// Gates setting the zeroed line `out` to `[a op b]` and restoring `a`, `b`.
/// Order tests borrow through a subtraction with carry into `out`;
/// equality tests XOR `b` into `a` and detect all-zero.
pub fn compare_gates(a: &[Line], b: &[Line], op: BinOp, out: Line) -> Result<Vec<Mcx>> {
    if a.len() != b.len() {
        return Err(Error::Width {
            msg: format!("compared registers have widths {} and {}", a.len(), b.len()),
        });
    }
    let less = |x: &[Line], y: &[Line]| -> Result<Vec<Mcx>> {
        let mut g: Vec<Mcx> = reversed(adder_carry_gates(x, y, out)?)
            .into_iter()
            .map(Mcx::from)
            .collect();
        g.extend(adder_gates(x, y)?.into_iter().map(Mcx::from));
        Ok(g)
    };
    let equal = || -> Result<Vec<Mcx>> {
        adder_gates(a, b)?; // operand checks
        let mut g: Vec<Mcx> = Vec::new();
        let flip: Vec<Mcx> = a
            .iter()
            .zip(b)
            .flat_map(|(&x, &y)| [Mcx::cnot(y, x), Mcx::not(x)])
            .collect();
        g.extend(flip.iter().cloned());
        g.push(Mcx {
            controls: a.to_vec(),
            target: out,
        });
        g.extend(flip.into_iter().rev());
        Ok(g)
    };
    let not_out = Mcx::not(out);
    let mut g = match op {
        BinOp::Lt => less(a, b)?,
        BinOp::Gt => less(b, a)?,
        BinOp::Ge => less(a, b)?,
        BinOp::Le => less(b, a)?,
        BinOp::Eq | BinOp::Ne => equal()?,
        _ => {
            return Err(Error::Invalid(format!(
                "`{}` is not a comparison",
                op.symbol()
            )))
        }
    };
    if matches!(op, BinOp::Ge | BinOp::Le | BinOp::Ne) {
        g.push(not_out);
    }
    Ok(g)
}
