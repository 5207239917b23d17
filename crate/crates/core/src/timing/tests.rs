use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::flatten::{
    expand_trace, flatten_pass_driven, FlatInst, FlatModule, FlattenOptions, QubitRef, RegDecl,
    SpecializedProgram,
};
use crate::frontend::compile_source;
use crate::gate::GateKind;

fn program(src: &str) -> SpecializedProgram {
    flatten_pass_driven(&compile_source(src).unwrap(), &FlattenOptions::default()).unwrap()
}

fn fixtures() -> Vec<(String, SpecializedProgram)> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/timing");
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scf"))
        .collect();
    v.sort();
    v.into_iter()
        .map(|p| {
            let src = std::fs::read_to_string(&p).unwrap();
            (p.file_name().unwrap().to_string_lossy().into_owned(), program(&src))
        })
        .collect()
}

fn leaf(regs: &[&str], gates: &[(GateKind, &[(u32, u64)])]) -> FlatModule {
    FlatModule {
        name: "leaf".into(),
        params: Vec::new(),
        locals: regs
            .iter()
            .map(|n| RegDecl {
                name: n.to_string(),
                size: 1,
                scalar: true,
            })
            .collect(),
        body: gates
            .iter()
            .map(|(k, qs)| FlatInst::Gate {
                kind: *k,
                qubits: qs.iter().map(|(r, i)| QubitRef { reg: *r, index: *i }).collect(),
                angle: None,
            })
            .collect(),
    }
}

fn q(reg: u32) -> QubitRef {
    QubitRef { reg, index: 0 }
}

#[test]
fn asap_examples() {
    use GateKind::*;
    let m = leaf(&["q0", "q1"], &[(H, &[(0, 0)]), (Cnot, &[(1, 0), (0, 0)]), (X, &[(1, 0)])]);
    let s = schedule_asap(&m).unwrap();
    assert_eq!((0..3).map(|i| s.inst_time(i)).collect::<Vec<_>>(), [1, 2, 3]);
    assert_eq!(s.length, 3);

    let m = leaf(&["q0", "q1"], &[(H, &[(0, 0)]), (H, &[(1, 0)])]);
    let s = schedule_asap(&m).unwrap();
    assert_eq!((s.inst_time(0), s.inst_time(1), s.length), (1, 1, 1));

    let m = leaf(
        &["a", "b", "c"],
        &[(Cnot, &[(1, 0), (0, 0)]), (H, &[(2, 0)]), (Cnot, &[(2, 0), (1, 0)])],
    );
    let s = schedule_asap(&m).unwrap();
    assert_eq!((0..3).map(|i| s.inst_time(i)).collect::<Vec<_>>(), [1, 1, 2]);
    assert_eq!(s.length, 2);
    assert_eq!((s.last_use[&q(0)], s.last_use[&q(1)], s.last_use[&q(2)]), (1, 2, 2));
}

#[test]
fn center_examples() {
    use GateKind::*;
    let chain = leaf(&["a"], &[(X, &[(0, 0)]), (X, &[(0, 0)]), (X, &[(0, 0)])]);
    assert_eq!(schedule_center_aligned(&chain).unwrap(), schedule_asap(&chain).unwrap());

    let m = leaf(&["a", "b"], &[(H, &[(0, 0)]), (H, &[(1, 0)]), (Cnot, &[(1, 0), (0, 0)])]);
    let s = schedule_center_aligned(&m).unwrap();
    assert_eq!((s.inst_time(0), s.inst_time(1)), (1, 1));
    assert_eq!((s.first_use[&q(0)], s.first_use[&q(1)]), (1, 1));

    let m = leaf(
        &["a", "b"],
        &[(X, &[(0, 0)]), (X, &[(1, 0)]), (X, &[(1, 0)]), (Cnot, &[(1, 0), (0, 0)])],
    );
    let asap = schedule_asap(&m).unwrap();
    assert_eq!(asap.length, 3);
    let s = schedule_center_aligned(&m).unwrap();
    assert_eq!(s.length, 3);
    assert_eq!((0..4).map(|i| s.inst_time(i)).collect::<Vec<_>>(), [2, 1, 2, 3]);
    assert_eq!(s.first_use[&q(0)], 2);
}

#[test]
fn call_composition_examples() {
    let p = program(include_str!("../../fixtures/timing/t02_disjoint.scf"));
    let leaf_len = compose_critical_path(&p, SchedulingMode::Modular).unwrap().schedules["leaf"].length;
    for mode in SchedulingMode::ALL {
        assert_eq!(compose_critical_path(&p, mode).unwrap().length, leaf_len);
    }
    let p = program(include_str!("../../fixtures/timing/t03_bottom_slack.scf"));
    let m = compose_critical_path(&p, SchedulingMode::Modular).unwrap();
    let b = compose_critical_path(&p, SchedulingMode::BottomSlack).unwrap();
    assert_eq!(m.length, 2 * m.schedules["leaf"].length);
    assert!(b.length < m.length);
    assert!(b.length >= oracle_critical_path(&p, None).unwrap());
}

#[test]
fn oracle_examples() {
    let p = program("module main(){ qbit q[1]; H(q[0]); X(q[0]); Z(q[0]); }");
    assert_eq!(oracle_critical_path(&p, None).unwrap(), 3);
    let p = program(include_str!("../../fixtures/parallel_layer.scf"));
    assert_eq!(oracle_critical_path(&p, None).unwrap(), 2);
    for mode in SchedulingMode::ALL {
        assert_eq!(compose_critical_path(&p, mode).unwrap().length, 2);
    }
    assert!(matches!(
        oracle_critical_path(&p, Some(10)),
        Err(crate::Error::BudgetExceeded { .. })
    ));
}

#[test]
fn empty_program_is_valid() {
    let p = program("module main(){ }");
    let est = compose_critical_path(&p, SchedulingMode::CenterAligned).unwrap();
    assert_eq!(est.length, 0);
    let c = validate_schedule(&p, &est, None).unwrap();
    assert!(c.is_valid(), "{c:?}");
}

#[test]
fn swapped_dependent_gates_are_one_violation() {
    use crate::flatten::PhysQubit;
    let a = PhysQubit { array: 0, index: 0 };
    let b = PhysQubit { array: 0, index: 1 };
    let mut ok = TimedChecker::new();
    ok.gate(&[a], 1);
    ok.gate(&[a, b], 2);
    ok.gate(&[b], 3);
    assert!(ok.finish(3).is_valid());
    let mut bad = TimedChecker::new();
    bad.gate(&[a], 2);
    bad.gate(&[a, b], 1);
    bad.gate(&[b], 3);
    let c = bad.finish(3);
    assert_eq!(c.violation_count, 1, "{:?}", c.violations);
}

#[test]
fn repeat_is_k_times_the_body() {
    let p = program(include_str!("../../fixtures/timing/t06_repeat_serial.scf"));
    let est = compose_critical_path(&p, SchedulingMode::Modular).unwrap();
    assert_eq!(est.length, 10);
    assert_eq!(oracle_critical_path(&p, None).unwrap(), 10);
    let src = "module body(qbit a[2]){ H(a[0]); CNOT(a[1], a[0]); H(a[1]); }
               module main(){ qbit q[2]; for (int i = 0; i < 7; i++) { body(q); } }";
    let p = program(src);
    let est = compose_critical_path(&p, SchedulingMode::Modular).unwrap();
    assert_eq!(est.length, 7 * est.schedules["body"].length);
}

#[test]
fn remodularize_thresholds() {
    let src = "module five(qbit a[1]){ for (int i = 0; i < 5; i++) { X(a[0]); H(a[0]); } }
               module fifty(qbit a[1]){ for (int i = 0; i < 25; i++) { X(a[0]); H(a[0]); } }
               module main(){ qbit q[2]; five(q[0:0]); fifty(q[1:1]); }";
    let p = program(src);
    assert_eq!(remodularize(&p, 0, 1 << 20).unwrap(), p);
    let r = remodularize(&p, 11, 1 << 20).unwrap();
    assert_eq!(r.modules.len(), 2);
    assert!(r.modules.keys().any(|k| k.starts_with("fifty")));
    assert!(!r.modules.keys().any(|k| k.starts_with("five")));
    let flat = remodularize(&p, u128::MAX, 1 << 20).unwrap();
    assert_eq!(flat.modules.len(), 1);
    assert!(flat.modules[&flat.entry]
        .body
        .iter()
        .all(|i| matches!(i, FlatInst::Gate { .. })));
    assert!(matches!(
        remodularize(&p, u128::MAX, 10),
        Err(crate::Error::BudgetExceeded { .. })
    ));
}

#[test]
fn remodularize_keeps_the_expansion() {
    for (name, p) in fixtures() {
        for t in [3, 10, 100, u128::MAX] {
            let r = remodularize(&p, t, 1 << 22).unwrap();
            let (a, b) = (expand_trace(&p, None).unwrap(), expand_trace(&r, None).unwrap());
            assert_eq!(a.kind_counts(), b.kind_counts(), "{name} t={t}");
            assert_eq!(
                oracle_critical_path(&p, None).unwrap(),
                oracle_critical_path(&r, None).unwrap(),
                "{name} t={t}"
            );
        }
    }
}

#[test]
fn fixture_suite_properties() {
    let suite = fixtures();
    assert!(suite.len() >= 10);
    for (name, p) in &suite {
        let oracle = oracle_critical_path(p, None).unwrap();
        let mut by_mode = HashMap::new();
        for mode in SchedulingMode::ALL {
            let est = compose_critical_path(p, mode).unwrap();
            let check = validate_schedule(p, &est, None).unwrap();
            assert!(check.is_valid(), "{name} {mode}: {:?}", check.violations);
            assert!(est.length >= oracle, "{name} {mode}");
            by_mode.insert(mode, est.length);
            let flat = remodularize(p, u128::MAX, 1 << 22).unwrap();
            assert_eq!(compose_critical_path(&flat, mode).unwrap().length, oracle, "{name} {mode}");
        }
        let (m, b, c) = (
            by_mode[&SchedulingMode::Modular],
            by_mode[&SchedulingMode::BottomSlack],
            by_mode[&SchedulingMode::CenterAligned],
        );
        assert!(c <= b && b <= m, "{name}: center {c} bottom {b} modular {m}");
        let mut prev = u64::MAX;
        for t in [0, 2, 4, 8, 16, 64, 256, 4096, u128::MAX] {
            let r = remodularize(p, t, 1 << 22).unwrap();
            let est = compose_critical_path(&r, SchedulingMode::Modular).unwrap();
            assert!(validate_schedule(&r, &est, None).unwrap().is_valid());
            assert!(est.length <= prev, "{name} t={t}");
            prev = est.length;
        }
    }
}

#[test]
fn center_keeps_length_and_instructions() {
    for (name, p) in fixtures() {
        for m in p.modules.values() {
            let a = schedule_body(m, &m.body, SchedulingMode::BottomSlack, &leaf_summaries(&p, SchedulingMode::BottomSlack)).unwrap();
            let c = schedule_body(m, &m.body, SchedulingMode::CenterAligned, &leaf_summaries(&p, SchedulingMode::BottomSlack)).unwrap();
            assert_eq!(a.length, c.length, "{name}");
            assert_eq!(a.starts.len(), c.starts.len());
            for (x, y) in a.starts.iter().zip(&c.starts) {
                assert!(y >= x);
            }
            for (qb, f) in &a.first_use {
                assert!(c.first_use[qb] >= *f);
            }
        }
    }
}

fn leaf_summaries(p: &SpecializedProgram, mode: SchedulingMode) -> HashMap<String, Block> {
    let est = compose_critical_path(p, mode).unwrap();
    est.schedules
        .iter()
        .map(|(n, s)| {
            let m = &p.modules[n];
            (n.clone(), s.summary(mode, |q| m.is_param(q.reg)))
        })
        .collect()
}

fn random_module(ops: &[(u8, u8, u8)], regs: u32) -> FlatModule {
    let names: Vec<String> = (0..regs).map(|r| format!("r{r}")).collect();
    let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut m = leaf(&names, &[]);
    for (k, a, b) in ops {
        let (a, b) = (*a as u32 % regs, *b as u32 % regs);
        let inst = if k % 3 == 0 || a == b {
            FlatInst::Gate { kind: GateKind::H, qubits: vec![q(a)], angle: None }
        } else {
            FlatInst::Gate { kind: GateKind::Cnot, qubits: vec![q(a), q(b)], angle: None }
        };
        m.body.push(inst);
    }
    m
}

proptest! {
    #[test]
    fn schedules_respect_dependencies(ops in prop::collection::vec((0u8..6, 0u8..6, 0u8..6), 0..40)) {
        let m = random_module(&ops, 5);
        let a = schedule_asap(&m).unwrap();
        let c = schedule_center_aligned(&m).unwrap();
        prop_assert_eq!(a.length, c.length);
        for s in [&a, &c] {
            let mut last: HashMap<QubitRef, u64> = HashMap::new();
            for (i, inst) in m.body.iter().enumerate() {
                let FlatInst::Gate { qubits, .. } = inst else { unreachable!() };
                let t = s.inst_time(i);
                prop_assert!(t >= 1 && t <= s.length);
                for qb in qubits {
                    let prev = last.entry(*qb).or_insert(0);
                    prop_assert!(t > *prev);
                    *prev = t;
                }
            }
            for (qb, f) in &s.first_use {
                prop_assert!(1 <= *f && *f <= s.last_use[qb] && s.last_use[qb] <= s.length);
            }
        }
    }
}
