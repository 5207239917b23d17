use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use qhl_bench::{adder, call_tree, layered_program, multiplier};
use qhl_core::analysis::{analyze_program_entanglement, estimate_resources};
use qhl_core::ctqg::compile_ctqg_module;
use qhl_core::flatten::{flatten_dynamic, flatten_pass_driven, FlattenOptions, SpecializedProgram};
use qhl_core::frontend::{compile_library, compile_source};
use qhl_core::pipeline::{specialize, PipelineOptions};
use qhl_core::qasm::{emit_qasm, QasmFormat};
use qhl_core::timing::{compose_critical_path, oracle_critical_path, remodularize, SchedulingMode};

fn specialized(src: &str) -> SpecializedProgram {
    specialize(&compile_source(src).unwrap(), &PipelineOptions::default()).unwrap()
}

fn flattening(c: &mut Criterion) {
    let mut g = c.benchmark_group("flatten");
    for depth in [4u32, 8] {
        let p = compile_source(&call_tree(depth)).unwrap();
        let opts = FlattenOptions::default();
        g.bench_with_input(BenchmarkId::new("pass", depth), &p, |b, p| {
            b.iter(|| flatten_pass_driven(black_box(p), &opts).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("dynamic", depth), &p, |b, p| {
            b.iter(|| flatten_dynamic(black_box(p), &opts).unwrap())
        });
    }
    g.finish();
}

fn emission(c: &mut Criterion) {
    let p = specialized(&layered_program(1000, 1000));
    let mut g = c.benchmark_group("emit");
    g.bench_function("qasm-hl/1000x1000", |b| {
        b.iter(|| emit_qasm(black_box(&p), QasmFormat::HierLoops).unwrap())
    });
    let small = specialized(&layered_program(100, 10));
    g.bench_function("qasm-f/100x10", |b| {
        b.iter(|| emit_qasm(black_box(&small), QasmFormat::Flat).unwrap())
    });
    g.finish();
}

fn analyses(c: &mut Criterion) {
    let p = specialized(&layered_program(1000, 1_000_000));
    let tree = specialized(&call_tree(8));
    let mut g = c.benchmark_group("analysis");
    g.bench_function("resources/2e9-gates", |b| {
        b.iter(|| estimate_resources(black_box(&p)).unwrap())
    });
    g.bench_function("entanglement/call-tree-8", |b| {
        b.iter(|| analyze_program_entanglement(black_box(&tree)).unwrap())
    });
    g.finish();
}

fn timing(c: &mut Criterion) {
    let p = specialized(&call_tree(8));
    let mut g = c.benchmark_group("timing");
    for mode in SchedulingMode::ALL {
        g.bench_with_input(BenchmarkId::new("compose", mode), &p, |b, p| {
            b.iter(|| compose_critical_path(black_box(p), mode).unwrap())
        });
    }
    g.bench_function("remodularize/inf", |b| {
        b.iter(|| remodularize(black_box(&p), u128::MAX, 1 << 24).unwrap())
    });
    g.bench_function("oracle", |b| {
        b.iter(|| oracle_critical_path(black_box(&p), None).unwrap())
    });
    g.finish();
}

fn synthesis(c: &mut Criterion) {
    let mut g = c.benchmark_group("ctqg");
    for (name, src) in [("adder32", adder(32)), ("mul8", multiplier(8))] {
        let p = compile_library(&src).unwrap();
        let m = p.modules.values().next().unwrap().clone();
        g.bench_function(name, |b| b.iter(|| compile_ctqg_module(black_box(&m)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, flattening, emission, analyses, timing, synthesis);
criterion_main!(benches);
