use std::fmt;

use crate::error::{Error, Result};

/// A signal (line) number within one reversible circuit.
pub type Line = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RevGate {
    Not(Line),
    Cnot(Line, Line),
    Toffoli(Line, Line, Line),
}

impl RevGate {
    pub fn target(self) -> Line {
        match self {
            RevGate::Not(t) | RevGate::Cnot(_, t) | RevGate::Toffoli(_, _, t) => t,
        }
    }

    /// All operand lines, controls first.
    pub fn lines(self) -> Vec<Line> {
        match self {
            RevGate::Not(t) => vec![t],
            RevGate::Cnot(c, t) => vec![c, t],
            RevGate::Toffoli(a, b, t) => vec![a, b, t],
        }
    }

    pub fn touches(self, l: Line) -> bool {
        self.lines().contains(&l)
    }

    /// Apply to a bit vector.
    pub fn apply(self, bits: &mut [bool]) {
        match self {
            RevGate::Not(t) => bits[t as usize] ^= true,
            RevGate::Cnot(c, t) => bits[t as usize] ^= bits[c as usize],
            RevGate::Toffoli(a, b, t) => bits[t as usize] ^= bits[a as usize] & bits[b as usize],
        }
    }
}

impl fmt::Display for RevGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RevGate::Not(t) => write!(f, "not {t}"),
            RevGate::Cnot(c, t) => write!(f, "cnot {c},{t}"),
            RevGate::Toffoli(a, b, t) => write!(f, "toffoli {a},{b},{t}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub not: u64,
    pub cnot: u64,
    pub toffoli: u64,
}

impl GateCounts {
    pub fn add(&mut self, g: RevGate) {
        match g {
            RevGate::Not(_) => self.not += 1,
            RevGate::Cnot(..) => self.cnot += 1,
            RevGate::Toffoli(..) => self.toffoli += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.not + self.cnot + self.toffoli
    }
}

/// Receiver of synthesized gates, in order.
pub trait GateSink {
    fn gate(&mut self, g: RevGate) -> Result<()>;
}

impl GateSink for Vec<RevGate> {
    fn gate(&mut self, g: RevGate) -> Result<()> {
        self.push(g);
        Ok(())
    }
}

/// Counts gates without retaining them.
#[derive(Clone, Copy, Debug, Default)]
pub struct CountingSink {
    pub counts: GateCounts,
}

impl GateSink for CountingSink {
    fn gate(&mut self, g: RevGate) -> Result<()> {
        self.counts.add(g);
        Ok(())
    }
}

/// Forwards to a closure.
pub struct FnSink<F>(pub F);

impl<F: FnMut(RevGate) -> Result<()>> GateSink for FnSink<F> {
    fn gate(&mut self, g: RevGate) -> Result<()> {
        (self.0)(g)
    }
}

/// A named group of lines; bit 0 is the least significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub lines: Vec<Line>,
}

impl Register {
    pub fn width(&self) -> usize {
        self.lines.len()
    }
}

/// A synthesized reversible netlist.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RevCircuit {
    /// Display name of every line.
    pub signals: Vec<String>,
    /// Data registers, parameters first.
    pub registers: Vec<Register>,
    /// Number of parameter registers at the front of `registers`.
    pub param_count: usize,
    /// Lines allocated as zero-initialized ancillas, in allocation order.
    pub ancillas: Vec<Line>,
    pub gates: Vec<RevGate>,
}

impl RevCircuit {
    pub fn width(&self) -> usize {
        self.signals.len()
    }

    pub fn ancilla_count(&self) -> usize {
        self.ancillas.len()
    }

    pub fn counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            c.add(*g);
        }
        c
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    /// The same circuit with its gate list reversed (its inverse).
    pub fn inverse(&self) -> RevCircuit {
        let mut c = self.clone();
        c.gates.reverse();
        c
    }

    /// Bit vector with the given register values; every other line is 0.
    pub fn input(&self, values: &[(&str, u64)]) -> Result<Vec<bool>> {
        let mut bits = vec![false; self.width()];
        for (name, v) in values {
            let r = self
                .register(name)
                .ok_or_else(|| Error::Invalid(format!("no register named `{name}`")))?;
            write_bits(&mut bits, &r.lines, *v);
        }
        Ok(bits)
    }

    pub fn read(&self, bits: &[bool], name: &str) -> Option<u64> {
        self.register(name).map(|r| read_bits(bits, &r.lines))
    }
}

pub fn write_bits(bits: &mut [bool], lines: &[Line], v: u64) {
    for (k, l) in lines.iter().enumerate() {
        bits[*l as usize] = k < 64 && (v >> k) & 1 == 1;
    }
}

pub fn read_bits(bits: &[bool], lines: &[Line]) -> u64 {
    lines
        .iter()
        .enumerate()
        .filter(|(k, l)| *k < 64 && bits[**l as usize])
        .fold(0, |acc, (k, _)| acc | 1 << k)
}

/// Run `gates` on `input`, which must cover exactly `width` signals.
pub fn simulate_gates(gates: &[RevGate], width: usize, input: &[bool]) -> Result<Vec<bool>> {
    if input.len() != width {
        return Err(Error::WidthMismatch {
            expected: width,
            found: input.len(),
        });
    }
    let mut bits = input.to_vec();
    for g in gates {
        g.apply(&mut bits);
    }
    Ok(bits)
}

pub fn simulate_reversible(c: &RevCircuit, input: &[bool]) -> Result<Vec<bool>> {
    simulate_gates(&c.gates, c.width(), input)
}

/// Reject gates whose operands are not pairwise distinct.
pub fn check_distinct(g: RevGate) -> Result<()> {
    let ok = match g {
        RevGate::Not(_) => true,
        RevGate::Cnot(c, t) => c != t,
        RevGate::Toffoli(a, b, t) => a != b && a != t && b != t,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Overlap {
            msg: format!("gate `{g}` repeats an operand line"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_tables() {
        let out = simulate_gates(&[RevGate::Cnot(0, 1)], 2, &[true, false]).unwrap();
        assert_eq!(out, vec![true, true]);
        let out = simulate_gates(&[], 3, &[true, false, true]).unwrap();
        assert_eq!(out, vec![true, false, true]);
        assert!(matches!(
            simulate_gates(&[], 3, &[true]),
            Err(Error::WidthMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn bits_roundtrip() {
        let mut b = vec![false; 8];
        write_bits(&mut b, &[7, 6, 5, 4], 0b1011);
        assert_eq!(read_bits(&b, &[7, 6, 5, 4]), 0b1011);
        assert!(b[7] && b[6] && !b[5] && b[4]);
    }
}
