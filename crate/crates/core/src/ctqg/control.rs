//! Multi-controlled NOT gates, their lowering to Toffoli/CNOT/NOT with
//! borrowed dirty lines, and control insertion.

use crate::error::{Error, Result};

use super::circuit::{check_distinct, GateSink, Line, RevGate};

/// NOT on `target` conditioned on every line in `controls` being 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mcx {
    pub controls: Vec<Line>,
    pub target: Line,
}

impl Mcx {
    pub fn not(t: Line) -> Self {
        Self {
            controls: Vec::new(),
            target: t,
        }
    }

    pub fn cnot(c: Line, t: Line) -> Self {
        Self {
            controls: vec![c],
            target: t,
        }
    }

    pub fn toffoli(a: Line, b: Line, t: Line) -> Self {
        Self {
            controls: vec![a, b],
            target: t,
        }
    }

    pub fn touches(&self, l: Line) -> bool {
        self.target == l || self.controls.contains(&l)
    }
}

impl From<RevGate> for Mcx {
    fn from(g: RevGate) -> Self {
        match g {
            RevGate::Not(t) => Mcx::not(t),
            RevGate::Cnot(c, t) => Mcx::cnot(c, t),
            RevGate::Toffoli(a, b, t) => Mcx::toffoli(a, b, t),
        }
    }
}

/// Lines a decomposition may borrow in an unknown state and must restore.
pub trait Borrow {
    /// Some line not in `exclude`.
    fn pick(&self, exclude: &[Line]) -> Option<Line>;
}

/// Any of the lines `0..n`.
pub struct AllLines(pub Line);

impl Borrow for AllLines {
    fn pick(&self, exclude: &[Line]) -> Option<Line> {
        (0..self.0).find(|l| !exclude.contains(l))
    }
}

impl Borrow for [Line] {
    fn pick(&self, exclude: &[Line]) -> Option<Line> {
        self.iter().copied().find(|l| !exclude.contains(l))
    }
}

/// Emit `g` as primitive gates. Three or more controls are split around one
/// borrowed line `d`: with controls `g1 ++ g2`,
/// `C(g2+d -> t); C(g1 -> d); C(g2+d -> t); C(g1 -> d)` flips `t` by
/// `AND(g2) & (d ^ d ^ AND(g1))` and leaves `d` as it was. Each half may in
/// turn borrow the lines of the other half.
pub fn lower_mcx(g: &Mcx, borrow: &(impl Borrow + ?Sized), out: &mut dyn GateSink) -> Result<()> {
    lower_with(g, borrow, &[], out)
}

fn lower_with(
    g: &Mcx,
    borrow: &(impl Borrow + ?Sized),
    spare: &[Line],
    out: &mut dyn GateSink,
) -> Result<()> {
    let c = &g.controls;
    let t = g.target;
    let prim = match c.len() {
        0 => Some(RevGate::Not(t)),
        1 => Some(RevGate::Cnot(c[0], t)),
        2 => Some(RevGate::Toffoli(c[0], c[1], t)),
        _ => None,
    };
    if let Some(p) = prim {
        check_distinct(p)?;
        return out.gate(p);
    }
    let mut used = c.clone();
    used.push(t);
    let d = spare
        .iter()
        .copied()
        .find(|l| !used.contains(l))
        .or_else(|| borrow.pick(&used))
        .ok_or(Error::NoBorrowAvailable { controls: c.len() })?;
    let k1 = c.len().div_ceil(2);
    let (g1, g2) = c.split_at(k1);
    let upper = Mcx {
        controls: g2.iter().copied().chain([d]).collect(),
        target: t,
    };
    let lower = Mcx {
        controls: g1.to_vec(),
        target: d,
    };
    let upper_spare: Vec<Line> = g1.iter().chain(spare).copied().collect();
    let lower_spare: Vec<Line> = g2.iter().chain([&t]).chain(spare).copied().collect();
    for _ in 0..2 {
        lower_with(&upper, borrow, &upper_spare, out)?;
        lower_with(&lower, borrow, &lower_spare, out)?;
    }
    Ok(())
}

/// Lower a `k`-control NOT (`k >= 2`) using only the listed dirty lines.
pub fn decompose_multi_control(
    controls: &[Line],
    target: Line,
    borrowable: &[Line],
) -> Result<Vec<RevGate>> {
    let mut out = Vec::new();
    let g = Mcx {
        controls: controls.to_vec(),
        target,
    };
    lower_mcx(&g, borrowable, &mut out)?;
    Ok(out)
}

/// Add `ctrl` as an extra control to every gate of `body`; gates that end
/// up with three or more controls are lowered, borrowing among the lines
/// `0..width`.
pub fn controlize(body: &[RevGate], ctrl: Line, width: Line) -> Result<Vec<RevGate>> {
    let mut out = Vec::new();
    for g in body {
        if g.touches(ctrl) {
            return Err(Error::ControlOverlap {
                line: ctrl as usize,
            });
        }
        let mut m = Mcx::from(*g);
        m.controls.push(ctrl);
        lower_mcx(&m, &AllLines(width), &mut out)?;
    }
    Ok(out)
}
