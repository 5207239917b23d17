use std::collections::HashSet;

use crate::flatten::{FlatInst, QubitRef, Span, SpecializedProgram};
use crate::gate::GateKind;

/// The 15-gate Clifford+T network for `Toffoli(t, a, b)`, as
/// `(kind, operand positions)` with 0 = t, 1 = a, 2 = b, target first.
pub fn toffoli_sequence() -> [(GateKind, &'static [usize]); 15] {
    use GateKind::*;
    [
        (H, &[0]),
        (Cnot, &[0, 2]),
        (Tdag, &[0]),
        (Cnot, &[0, 1]),
        (T, &[0]),
        (Cnot, &[0, 2]),
        (Tdag, &[0]),
        (Cnot, &[0, 1]),
        (T, &[2]),
        (T, &[0]),
        (H, &[0]),
        (Cnot, &[2, 1]),
        (T, &[1]),
        (Tdag, &[2]),
        (Cnot, &[2, 1]),
    ]
}

/// Replace every Toffoli by the fixed network; other gates are unchanged.
/// A parallel Toffoli slice stays a slice when its iterations touch
/// disjoint qubits, and is unrolled otherwise.
pub fn lower_toffoli(p: &SpecializedProgram) -> SpecializedProgram {
    let mut out = p.clone();
    for m in out.modules.values_mut() {
        m.body = lower_body(&m.body);
    }
    out
}

fn lower_body(body: &[FlatInst]) -> Vec<FlatInst> {
    let mut out = Vec::with_capacity(body.len());
    for i in body {
        match i {
            FlatInst::Gate {
                kind: GateKind::Toffoli,
                qubits,
                ..
            } => {
                for (kind, pos) in toffoli_sequence() {
                    out.push(FlatInst::Gate {
                        kind,
                        qubits: pos.iter().map(|k| qubits[*k]).collect::<Vec<QubitRef>>(),
                        angle: None,
                    });
                }
            }
            FlatInst::Forall {
                kind: GateKind::Toffoli,
                operands,
                count,
                ..
            } => {
                let mut seen = HashSet::new();
                let disjoint = (0..*count)
                    .flat_map(|k| operands.iter().map(move |s| s.at(k)))
                    .all(|q| seen.insert(q));
                if disjoint {
                    for (kind, pos) in toffoli_sequence() {
                        out.push(FlatInst::Forall {
                            kind,
                            operands: pos.iter().map(|k| operands[*k]).collect::<Vec<Span>>(),
                            count: *count,
                            angle: None,
                        });
                    }
                } else {
                    for k in 0..*count {
                        for (kind, pos) in toffoli_sequence() {
                            out.push(FlatInst::Gate {
                                kind,
                                qubits: pos.iter().map(|p| operands[*p].at(k)).collect(),
                                angle: None,
                            });
                        }
                    }
                }
            }
            FlatInst::Repeat { count, body } => out.push(FlatInst::Repeat {
                count: *count,
                body: lower_body(body),
            }),
            other => out.push(other.clone()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::super::statevec::{simulate_statevector, SimGate};
    use super::*;

    #[test]
    fn network_equals_toffoli_up_to_phase() {
        let gates: Vec<SimGate> = toffoli_sequence()
            .iter()
            .map(|(k, pos)| SimGate::new(*k, pos))
            .collect();
        assert_eq!(gates.len(), 15);
        let mut phase: Option<Complex64> = None;
        for input in 0..8usize {
            let s = simulate_statevector(&gates, 3, input).unwrap();
            // Qubit 0 is the target, flipped when qubits 1 and 2 are set.
            let want = if input & 6 == 6 { input ^ 1 } else { input };
            let ph = *phase.get_or_insert(s.amps[want]);
            for (k, a) in s.amps.iter().enumerate() {
                let expect = if k == want { ph } else { Complex64::new(0.0, 0.0) };
                assert!((a - expect).norm() <= 1e-10, "input {input} amp {k}: {a}");
            }
        }
    }
}
