use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qhl_core::flatten::expand_trace;
use qhl_core::qasm::parse_qasm_hl;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn qhl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhl"))
        .args(args)
        .output()
        .expect("qhl runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[track_caller]
fn ok(args: &[&str]) -> String {
    let o = qhl(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn compile_folds_the_parallel_layer() {
    let out = ok(&["compile", path(&fixture("parallel_layer.scf")), "--format", "qasm-hl"]);
    assert!(out.contains("  H ( q[0:999] );\n"), "{out}");
}

#[test]
fn compile_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.qasmhl");
    let b = dir.path().join("b.qasmhl");
    let src = fixture("oracle_loop.scf");
    ok(&["compile", path(&src), "-o", a.to_str().unwrap()]);
    ok(&["compile", path(&src), "-o", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn strategies_give_the_same_expansion() {
    let src = fixture("oracle_loop.scf");
    let traces: Vec<_> = ["pass", "dynamic"]
        .iter()
        .map(|s| {
            let text = ok(&["compile", path(&src), "--strategy", s]);
            expand_trace(&parse_qasm_hl(&text).unwrap(), None).unwrap()
        })
        .collect();
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn lowering_removes_toffolis() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("add.scf");
    std::fs::write(
        &src,
        "module add2(qint[2] a, qint[2] b) { $a += b; }\nmodule main() { qbit x[2], y[2]; add2(x, y); }\n",
    )
    .unwrap();
    let plain = ok(&["compile", path(&src), "--format", "qasm-f"]);
    assert!(plain.contains("Toffoli"), "{plain}");
    let lowered = ok(&["compile", path(&src), "--format", "qasm-f", "--lower-toffoli"]);
    assert!(!lowered.contains("Toffoli"));
    assert!(lowered.contains("Tdag"));
}

#[test]
fn missing_input_is_a_usage_error() {
    let o = qhl(&["compile", "/nonexistent/in.scf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn syntax_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("bad.scf");
    std::fs::write(&src, "module main( {").unwrap();
    assert_eq!(qhl(&["compile", path(&src)]).status.code(), Some(1));
}

#[test]
fn entanglement_report_ends_with_the_final_classes() {
    let out = ok(&["analyze", path(&fixture("uncompute.qasmhl")), "--entangle", "--module", "uncompute"]);
    assert!(out.ends_with("final entanglements: (d1, d2)\n"), "{out}");
}

#[test]
fn cloning_bug_exits_one_with_one_error() {
    let o = qhl(&["analyze", path(&fixture("cloning/direct.scf")), "--nocloning"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("error")).count(), 1);
}

#[test]
fn resource_table_has_main_and_four_oracles() {
    let out = ok(&["analyze", path(&fixture("oracle_loop.scf")), "--resources", "--csv"]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.iter().filter(|r| r.starts_with("Oracle,")).count(), 4, "{out}");
    assert_eq!(rows.iter().filter(|r| r.starts_with("main,")).count(), 1, "{out}");
}

#[test]
fn timing_reports_chain_length() {
    let out = ok(&["timing", path(&fixture("timing/t01_chain.scf")), "--mode", "modular"]);
    assert!(out.contains("length=3"), "{out}");
}

#[test]
fn timing_estimate_is_at_least_the_oracle() {
    for name in ["timing/t03_bottom_slack.scf", "timing/t09_specialized.scf", "timing/t12_mixed.scf"] {
        let out = ok(&[
            "timing", path(&fixture(name)), "--mode", "center", "--threshold", "10", "--oracle", "--csv",
        ]);
        let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
        let (length, oracle): (u64, u64) = (row[2].parse().unwrap(), row[4].parse().unwrap());
        assert!(length >= oracle, "{name}: {out}");
    }
}

#[test]
fn unknown_mode_is_a_usage_error() {
    let o = qhl(&["timing", path(&fixture("timing/t01_chain.scf")), "--mode", "fastest"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulation_sums_up_to_n() {
    let src = fixture("summation.scf");
    let out = ok(&["ctqg", "simulate", path(&src), "--in", "n=5"]);
    assert!(out.lines().any(|l| l == "sum=15"), "{out}");
    assert!(out.lines().any(|l| l == "n=5"), "{out}");
    let out = ok(&["ctqg", "simulate", path(&src), "--in", "n=0"]);
    assert!(out.lines().any(|l| l == "sum=0"), "{out}");
}

#[test]
fn simulation_rejects_unknown_registers() {
    let o = qhl(&["ctqg", "simulate", path(&fixture("summation.scf")), "--in", "m=5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synthesized_adder_netlist() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("adder8.scf");
    std::fs::write(&src, "module adder8(qint[8] a, qint[8] b) { $a += b; }\n").unwrap();
    let out = ok(&["ctqg", "synth", path(&src)]);
    let count = |w: &str| out.lines().filter(|l| l.trim_start().starts_with(w)).count();
    assert_eq!(count("toffoli "), 14);
    assert_eq!(count("cnot "), 34);
    assert!(parse_qasm_hl(&out).is_ok());
}
