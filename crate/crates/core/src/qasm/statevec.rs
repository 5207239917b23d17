use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gate::GateKind;

pub const MAX_QUBITS: usize = 10;

/// Dense state of up to `MAX_QUBITS` qubits; qubit `k` is bit `k` of the
/// basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

/// One gate on qubit numbers, target first.
#[derive(Clone, Debug, PartialEq)]
pub struct SimGate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angle: Option<f64>,
}

impl SimGate {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Self {
        Self {
            kind,
            qubits: qubits.to_vec(),
            angle: None,
        }
    }
}

impl StateVector {
    pub fn basis(n: usize, state: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                max: MAX_QUBITS,
                found: n,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[state] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn flip_if(&mut self, t: usize, controls: &[usize]) {
        let bit = 1 << t;
        let mask: usize = controls.iter().map(|c| 1 << c).sum();
        for i in 0..self.amps.len() {
            if i & bit == 0 && i & mask == mask {
                self.amps.swap(i, i | bit);
            }
        }
    }

    pub fn apply(&mut self, g: &SimGate) -> Result<()> {
        if g.qubits.len() != g.kind.arity() || g.qubits.iter().any(|q| *q >= self.n) {
            return Err(Error::Invalid(format!("bad operands for {}", g.kind)));
        }
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let t = c(r, r);
        let th = g.angle.unwrap_or(0.0) / 2.0;
        let q = g.qubits[0];
        match g.kind {
            GateKind::X => self.flip_if(q, &[]),
            GateKind::Y => self.single(q, [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]]),
            GateKind::Z => self.single(q, [[o, z], [z, -o]]),
            GateKind::H => self.single(q, [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]]),
            GateKind::S => self.single(q, [[o, z], [z, c(0.0, 1.0)]]),
            GateKind::Sdag => self.single(q, [[o, z], [z, c(0.0, -1.0)]]),
            GateKind::T => self.single(q, [[o, z], [z, t]]),
            GateKind::Tdag => self.single(q, [[o, z], [z, t.conj()]]),
            GateKind::Rx => self.single(
                q,
                [[c(th.cos(), 0.0), c(0.0, -th.sin())], [c(0.0, -th.sin()), c(th.cos(), 0.0)]],
            ),
            GateKind::Ry => self.single(
                q,
                [[c(th.cos(), 0.0), c(-th.sin(), 0.0)], [c(th.sin(), 0.0), c(th.cos(), 0.0)]],
            ),
            GateKind::Rz => self.single(q, [[Complex64::from_polar(1.0, -th), z], [z, Complex64::from_polar(1.0, th)]]),
            GateKind::Cnot | GateKind::Toffoli => self.flip_if(q, &g.qubits[1..]),
            GateKind::PrepZ | GateKind::MeasZ => {
                return Err(Error::Invalid(format!("{} is not unitary", g.kind)))
            }
        }
        Ok(())
    }
}

/// Evolve basis state `initial` of `n` qubits through `gates`.
pub fn simulate_statevector(gates: &[SimGate], n: usize, initial: usize) -> Result<StateVector> {
    let mut s = StateVector::basis(n, initial)?;
    for g in gates {
        s.apply(g)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_and_not() {
        let s = simulate_statevector(&[SimGate::new(GateKind::H, &[0])], 1, 0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amps[0].re - r).abs() < 1e-15 && (s.amps[1].re - r).abs() < 1e-15);
        let s = simulate_statevector(&[SimGate::new(GateKind::X, &[0])], 1, 0).unwrap();
        assert_eq!(s.amps[1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn too_many_qubits() {
        assert!(matches!(
            simulate_statevector(&[], 11, 0),
            Err(Error::TooManyQubits { max: 10, found: 11 })
        ));
    }

    #[test]
    fn rotations_keep_norm() {
        let mut gates = Vec::new();
        for (k, kind) in [GateKind::Rx, GateKind::Ry, GateKind::Rz].into_iter().enumerate() {
            gates.push(SimGate {
                kind,
                qubits: vec![k % 2],
                angle: Some(0.3 + k as f64),
            });
            gates.push(SimGate::new(GateKind::Cnot, &[1, 0]));
        }
        let s = simulate_statevector(&gates, 2, 0).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }
}
