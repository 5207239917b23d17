//! Program generators shared by the benchmarks.

/// `rounds` repetitions of a layer of `n` Hadamards followed by a CNOT
/// chain, wrapped in a module.
pub fn layered_program(n: u64, rounds: u64) -> String {
    format!(
        "module layer(qbit q[{n}]) {{
  for (int i = 0; i < {n}; i++) {{ H(q[i]); }}
  for (int i = 0; i < {last}; i++) {{ CNOT(q[i + 1], q[i]); }}
}}
module main() {{
  qbit q[{n}];
  for (int r = 0; r < {rounds}; r++) {{ layer(q); }}
}}
",
        last = n - 1
    )
}

/// A call tree `depth` levels deep where each level calls the next one
/// twice with a different integer parameter, so every level is
/// specialized twice.
pub fn call_tree(depth: u32) -> String {
    let mut s = String::from("module leaf(qbit q[4], int k) {\n  for (int i = 0; i < k; i++) { H(q[i]); }\n  CNOT(q[3], q[0]);\n}\n");
    let mut prev = "leaf".to_string();
    for d in 0..depth {
        let name = format!("level{d}");
        s.push_str(&format!(
            "module {name}(qbit q[4], int k) {{\n  {prev}(q, 1);\n  {prev}(q, 2);\n  T(q[3]);\n}}\n"
        ));
        prev = name;
    }
    s.push_str(&format!("module main() {{\n  qbit q[4];\n  {prev}(q, 3);\n}}\n"));
    s
}

/// An in-place addition of two `n`-bit registers.
pub fn adder(n: u32) -> String {
    format!("module add(qint[{n}] a, qint[{n}] b) {{ $a += b; }}\n")
}

/// A multiply-accumulate on `n`-bit registers.
pub fn multiplier(n: u32) -> String {
    format!("module mul(qint[{n}] a, qint[{n}] b, qint[{n}] c) {{ $a += b * c; }}\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use qhl_core::frontend::{compile_library, compile_source};
    use qhl_core::pipeline::{specialize, PipelineOptions};

    #[test]
    fn generated_programs_compile() {
        for src in [layered_program(8, 3), call_tree(4)] {
            let p = compile_source(&src).unwrap();
            specialize(&p, &PipelineOptions::default()).unwrap();
        }
        for src in [adder(8), multiplier(4)] {
            compile_library(&src).unwrap();
        }
    }
}
