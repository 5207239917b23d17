//! Ancilla-free ripple-carry arithmetic on little-endian registers.
//!
//! The adder keeps the carries on the addend lines and restores them at the
//! end. Registers narrower than the target are widened with borrowed dirty
//! lines `g`: adding `x + g·2^n` and then subtracting `g·2^n` leaves exactly
//! `x` added.

use std::collections::HashSet;

use crate::error::{Error, Result};

use super::circuit::{Line, RevGate};

pub(crate) fn check_disjoint(groups: &[(&str, &[Line])]) -> Result<()> {
    let mut seen: HashSet<Line> = HashSet::new();
    for (name, lines) in groups {
        for l in *lines {
            if !seen.insert(*l) {
                return Err(Error::Overlap {
                    msg: format!("line {l} of `{name}` is shared with another operand"),
                });
            }
        }
    }
    Ok(())
}

/// `s := s + x mod 2^n` with `|s| == |x| == n`; `x` is unchanged.
/// Uses `5n - 6` CNOTs and `2n - 2` Toffolis for `n >= 2`.
pub fn adder_gates(s: &[Line], x: &[Line]) -> Result<Vec<RevGate>> {
    width_eq(s, x)?;
    check_disjoint(&[("target", s), ("addend", x)])?;
    let n = s.len();
    let mut g = Vec::new();
    match n {
        0 => {}
        1 => g.push(RevGate::Cnot(x[0], s[0])),
        _ => {
            for i in 1..n {
                g.push(RevGate::Cnot(x[i], s[i]));
            }
            for i in (1..n - 1).rev() {
                g.push(RevGate::Cnot(x[i], x[i + 1]));
            }
            for i in 0..n - 1 {
                g.push(RevGate::Toffoli(s[i], x[i], x[i + 1]));
            }
            for i in (1..n).rev() {
                g.push(RevGate::Cnot(x[i], s[i]));
                g.push(RevGate::Toffoli(s[i - 1], x[i - 1], x[i]));
            }
            for i in 1..n - 1 {
                g.push(RevGate::Cnot(x[i], x[i + 1]));
            }
            for i in 0..n {
                g.push(RevGate::Cnot(x[i], s[i]));
            }
        }
    }
    Ok(g)
}

/// `(s, z) := (s, z) + x mod 2^(n+1)`, i.e. the carry out of `s + x` is
/// XORed into `z`.
pub fn adder_carry_gates(s: &[Line], x: &[Line], z: Line) -> Result<Vec<RevGate>> {
    width_eq(s, x)?;
    check_disjoint(&[("target", s), ("addend", x), ("carry", &[z])])?;
    let n = s.len();
    let mut g = Vec::new();
    match n {
        0 => return Ok(g),
        1 => {
            g.push(RevGate::Toffoli(s[0], x[0], z));
            g.push(RevGate::Cnot(x[0], s[0]));
            return Ok(g);
        }
        _ => {}
    }
    // Carry line i+1 is x[i+1], or z above the top.
    let up = |i: usize| if i + 1 < n { x[i + 1] } else { z };
    for i in 1..n {
        g.push(RevGate::Cnot(x[i], s[i]));
    }
    g.push(RevGate::Cnot(x[n - 1], z));
    for i in (1..n - 1).rev() {
        g.push(RevGate::Cnot(x[i], x[i + 1]));
    }
    for i in 0..n {
        g.push(RevGate::Toffoli(s[i], x[i], up(i)));
    }
    for i in (1..n).rev() {
        g.push(RevGate::Cnot(x[i], s[i]));
        g.push(RevGate::Toffoli(s[i - 1], x[i - 1], x[i]));
    }
    for i in 1..n - 1 {
        g.push(RevGate::Cnot(x[i], x[i + 1]));
    }
    for i in 0..n {
        g.push(RevGate::Cnot(x[i], s[i]));
    }
    Ok(g)
}

fn width_eq(s: &[Line], x: &[Line]) -> Result<()> {
    if s.len() != x.len() {
        return Err(Error::Width {
            msg: format!("operand widths differ: {} and {}", s.len(), x.len()),
        });
    }
    Ok(())
}

/// Inverse of a self-inverse gate list.
pub fn reversed(mut g: Vec<RevGate>) -> Vec<RevGate> {
    g.reverse();
    g
}

/// `s := s - x mod 2^n`: the adder's gate list reversed.
pub fn subtractor_gates(s: &[Line], x: &[Line]) -> Result<Vec<RevGate>> {
    adder_gates(s, x).map(reversed)
}

/// `s := s + x mod 2^|s|` for `|x| <= |s|`. Bits of `x` above `|s|` are
/// ignored. Borrows `|s| - 1 - |x|` lines from `borrow` when `x` is narrower.
pub fn add_wide_gates(s: &[Line], x: &[Line], borrow: &[Line]) -> Result<Vec<RevGate>> {
    let x = &x[..x.len().min(s.len())];
    if x.len() == s.len() {
        return adder_gates(s, x);
    }
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let m = s.len() - 1;
    let extra = m - x.len();
    let g: Vec<Line> = borrow
        .iter()
        .copied()
        .filter(|l| !s.contains(l) && !x.contains(l))
        .take(extra)
        .collect();
    if g.len() < extra {
        return Err(Error::Width {
            msg: format!(
                "widening a {}-bit addend to {} bits needs {extra} borrowable lines, found {}",
                x.len(),
                s.len(),
                g.len()
            ),
        });
    }
    let z = s[m];
    let wide: Vec<Line> = x.iter().chain(&g).copied().collect();
    let mut gates = adder_carry_gates(&s[..m], &wide, z)?;
    if !g.is_empty() {
        gates.extend(reversed(adder_carry_gates(&s[x.len()..m], &g, z)?));
    }
    Ok(gates)
}

/// A gate of [`controlled_adder_plan`] and whether it needs the adder's
/// control.
pub type PlanGate = (RevGate, bool);

/// `s := s + ctl·x mod 2^m` for `|s| == |x| == m`, as a ripple of majority
/// gates whose carry starts on the clean line `z`. Only the gates marked
/// `true` need `ctl`; the others compute and then uncompute the carries, so
/// they cancel when `ctl` is 0. `x` and `z` are restored. Gate count is
/// `7m - 5` for `m >= 2`.
pub fn controlled_adder_plan(s: &[Line], x: &[Line], z: Line) -> Result<Vec<PlanGate>> {
    width_eq(s, x)?;
    check_disjoint(&[("target", s), ("addend", x), ("carry", &[z])])?;
    let m = s.len();
    let mut g = Vec::new();
    if m == 0 {
        return Ok(g);
    }
    if m == 1 {
        g.push((RevGate::Cnot(x[0], s[0]), true));
        return Ok(g);
    }
    let carry = |i: usize| if i == 0 { z } else { x[i - 1] };
    for i in 0..m - 1 {
        g.push((RevGate::Cnot(x[i], s[i]), false));
        g.push((RevGate::Cnot(x[i], carry(i)), false));
        g.push((RevGate::Toffoli(carry(i), s[i], x[i]), false));
    }
    g.push((RevGate::Cnot(x[m - 1], s[m - 1]), true));
    g.push((RevGate::Cnot(carry(m - 1), s[m - 1]), true));
    for i in (0..m - 1).rev() {
        g.push((RevGate::Toffoli(carry(i), s[i], x[i]), false));
        g.push((RevGate::Cnot(x[i], s[i]), false));
        g.push((RevGate::Cnot(carry(i), s[i]), true));
        g.push((RevGate::Cnot(x[i], carry(i)), false));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::super::circuit::{read_bits, simulate_gates, write_bits};
    use super::*;

    fn lines(start: Line, n: usize) -> Vec<Line> {
        (start..start + n as Line).collect()
    }

    #[test]
    fn adder_exhaustive() {
        for n in 1..=5usize {
            let s = lines(0, n);
            let x = lines(n as Line, n);
            let g = adder_gates(&s, &x).unwrap();
            let mask = (1u64 << n) - 1;
            for a in 0..=mask {
                for b in 0..=mask {
                    let mut bits = vec![false; 2 * n];
                    write_bits(&mut bits, &s, a);
                    write_bits(&mut bits, &x, b);
                    let out = simulate_gates(&g, 2 * n, &bits).unwrap();
                    assert_eq!(read_bits(&out, &s), (a + b) & mask, "n={n} a={a} b={b}");
                    assert_eq!(read_bits(&out, &x), b);
                }
            }
        }
    }

    #[test]
    fn adder_counts() {
        for n in 2..=32usize {
            let g = adder_gates(&lines(0, n), &lines(n as Line, n)).unwrap();
            let cnot = g.iter().filter(|g| matches!(g, RevGate::Cnot(..))).count();
            let tof = g.iter().filter(|g| matches!(g, RevGate::Toffoli(..))).count();
            assert_eq!(cnot, 5 * n - 6);
            assert_eq!(tof, 2 * n - 2);
        }
    }

    #[test]
    fn carry_adder_exhaustive() {
        for n in 1..=4usize {
            let s = lines(0, n);
            let x = lines(n as Line, n);
            let z = 2 * n as Line;
            let g = adder_carry_gates(&s, &x, z).unwrap();
            let mut sz = s.clone();
            sz.push(z);
            let mask = (1u64 << (n + 1)) - 1;
            for a in 0..=mask {
                for b in 0..(1u64 << n) {
                    let mut bits = vec![false; 2 * n + 1];
                    write_bits(&mut bits, &sz, a);
                    write_bits(&mut bits, &x, b);
                    let out = simulate_gates(&g, bits.len(), &bits).unwrap();
                    assert_eq!(read_bits(&out, &sz), (a + b) & mask);
                    assert_eq!(read_bits(&out, &x), b);
                }
            }
        }
    }

    #[test]
    fn wide_add_restores_borrowed_lines() {
        // s: 6 bits, x: 2 bits, 3 dirty lines.
        let s = lines(0, 6);
        let x = lines(6, 2);
        let d = lines(8, 3);
        let g = add_wide_gates(&s, &x, &d).unwrap();
        for a in 0..64u64 {
            for b in 0..4u64 {
                for dv in [0u64, 5, 7] {
                    let mut bits = vec![false; 11];
                    write_bits(&mut bits, &s, a);
                    write_bits(&mut bits, &x, b);
                    write_bits(&mut bits, &d, dv);
                    let out = simulate_gates(&g, 11, &bits).unwrap();
                    assert_eq!(read_bits(&out, &s), (a + b) % 64);
                    assert_eq!(read_bits(&out, &x), b);
                    assert_eq!(read_bits(&out, &d), dv);
                }
            }
        }
    }

    #[test]
    fn controlled_adder_exhaustive() {
        use super::super::control::{lower_mcx, AllLines, Mcx};
        for m in 1..=4usize {
            let s = lines(0, m);
            let x = lines(m as Line, m);
            let (z, ctl) = (2 * m as Line, 2 * m as Line + 1);
            let width = 2 * m + 2;
            let plan = controlled_adder_plan(&s, &x, z).unwrap();
            if m >= 2 {
                assert_eq!(plan.len(), 7 * m - 5);
            }
            let mut prim = Vec::new();
            for (g, c) in &plan {
                let mut g: Mcx = (*g).into();
                if *c {
                    g.controls.push(ctl);
                }
                lower_mcx(&g, &AllLines(width as Line), &mut prim).unwrap();
            }
            let mask = (1u64 << m) - 1;
            for on in [false, true] {
                for a in 0..=mask {
                    for b in 0..=mask {
                        let mut bits = vec![false; width];
                        write_bits(&mut bits, &s, a);
                        write_bits(&mut bits, &x, b);
                        bits[ctl as usize] = on;
                        let out = simulate_gates(&prim, width, &bits).unwrap();
                        let want = if on { (a + b) & mask } else { a };
                        assert_eq!(read_bits(&out, &s), want, "m={m} {a}+{b} ctl={on}");
                        assert_eq!(read_bits(&out, &x), b);
                        assert!(!out[z as usize]);
                        assert_eq!(out[ctl as usize], on);
                    }
                }
            }
        }
    }

    #[test]
    fn overlap_rejected() {
        assert!(matches!(
            adder_gates(&[0, 1], &[1, 2]),
            Err(Error::Overlap { .. })
        ));
    }
}
