use std::fmt::Display;
use std::path::Path;
use std::time::Instant;

use qhl_core::analysis::{
    analyze_program_entanglement, check_disentangled, check_no_cloning, estimate_resources,
    has_errors, Diagnostic,
};
use qhl_core::ctqg::{compile_ctqg_module, simulate, write_netlist};
use qhl_core::flatten::{FlattenOptions, SpecializedProgram};
use qhl_core::frontend::{compile_library, compile_source};
use qhl_core::ir::{ModuleDef, Program};
use qhl_core::pipeline::{specialize, PipelineOptions};
use qhl_core::qasm::{emit_qasm_with_budget, lower_toffoli, parse_qasm_hl};
use qhl_core::timing::{compose_critical_path, oracle_critical_path, remodularize};
use qhl_core::Error;

use crate::args::{AnalyzeArgs, CompileArgs, CtqgArgs, Global, ProgramArgs, SimulateArgs, TimingArgs};
use crate::output::with_output;

/// Exit 2 for bad invocations and unreadable inputs, 1 for programs that
/// fail to compile or check.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Errors(String),
}

type Outcome = Result<(), Failure>;

fn errors(e: impl Display) -> Failure {
    Failure::Errors(e.to_string())
}

fn io_err(e: std::io::Error) -> String {
    format!("writing output: {e}")
}

fn stage<T>(g: &Global, what: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let v = f();
    if g.verbose {
        eprintln!("{what}: {:.3?}", start.elapsed());
    }
    v
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn is_qasm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.to_ascii_lowercase().starts_with("qasm"))
}

fn pipeline_options(g: &Global, a: &ProgramArgs, lower: bool) -> PipelineOptions {
    PipelineOptions {
        strategy: a.strategy,
        flatten: FlattenOptions {
            instruction_budget: g.budget_instructions,
            step_limit: g.step_limit,
            ..FlattenOptions::default()
        },
        lower_toffoli: lower,
    }
}

/// The input as a specialized program: QASM is read directly, source goes
/// through the full pipeline.
fn load_program(g: &Global, a: &ProgramArgs, lower: bool) -> Result<SpecializedProgram, Failure> {
    let text = read(&a.input)?;
    if is_qasm(&a.input) {
        let p = stage(g, "parse", || parse_qasm_hl(&text)).map_err(errors)?;
        return Ok(if lower { lower_toffoli(&p) } else { p });
    }
    let p = stage(g, "parse", || compile_source(&text)).map_err(errors)?;
    let opts = pipeline_options(g, a, lower);
    stage(g, "flatten", || specialize(&p, &opts)).map_err(errors)
}

pub fn compile(g: &Global, a: &CompileArgs) -> Outcome {
    let p = load_program(g, &a.program, a.lower_toffoli)?;
    let doc = stage(g, "emit", || emit_qasm_with_budget(&p, a.format, g.budget_gates)).map_err(errors)?;
    with_output(g.output.as_deref(), |w| w.write_all(doc.text.as_bytes()).map_err(io_err))
        .map_err(Failure::Usage)
}

fn diagnostic_lines(d: &[Diagnostic], csv: bool, out: &mut String) {
    for d in d {
        if csv {
            let msg = d.message.replace('"', "\"\"");
            out.push_str(&format!("{},{},{},{},\"{msg}\"\n", d.severity, d.kind, d.module, d.index));
        } else {
            out.push_str(&format!("{d}\n"));
        }
    }
}

pub fn analyze(g: &Global, a: &AnalyzeArgs) -> Outcome {
    let p = load_program(g, &a.program, false)?;
    let all = !(a.resources || a.entangle || a.nocloning);
    let mut out = String::new();
    let mut diags = Vec::new();
    if a.csv_header_needed(g) {
        out.push_str("severity,kind,module,index,message\n");
    }
    if all || a.nocloning {
        let d = stage(g, "no-cloning", || check_no_cloning(&p));
        diagnostic_lines(&d, g.csv, &mut out);
        if !g.csv {
            out.push_str(&format!("no-cloning: {} violation(s)\n", d.len()));
        }
        diags.extend(d);
    }
    if all || a.entangle {
        let name = a.module.clone().unwrap_or_else(|| p.entry.clone());
        let m = p
            .module(&name)
            .map_err(|_| Failure::Usage(format!("module `{name}` is not defined")))?;
        let reports = stage(g, "entanglement", || analyze_program_entanglement(&p)).map_err(errors)?;
        let r = reports
            .iter()
            .find(|r| r.module == name)
            .ok_or_else(|| Failure::Usage(format!("module `{name}` is not reachable")))?;
        let mut d = r.diagnostics.clone();
        d.extend(check_disentangled(m, r));
        if !g.csv {
            out.push_str(&r.annotated);
            if !r.annotated.ends_with('\n') {
                out.push('\n');
            }
        }
        diagnostic_lines(&d, g.csv, &mut out);
        if !g.csv {
            let classes: Vec<String> = r
                .final_classes
                .iter()
                .map(|c| format!("({})", c.join(", ")))
                .collect();
            let text = if classes.is_empty() { "none".to_string() } else { classes.join(", ") };
            out.push_str(&format!("final entanglements: {text}\n"));
        }
        diags.extend(d);
    }
    if all || a.resources {
        let table = stage(g, "resources", || estimate_resources(&p)).map_err(errors)?;
        out.push_str(&if g.csv { table.to_csv() } else { table.to_text() });
    }
    with_output(g.output.as_deref(), |w| w.write_all(out.as_bytes()).map_err(io_err))
        .map_err(Failure::Usage)?;
    if has_errors(&diags) {
        let n = diags.iter().filter(|d| d.severity == qhl_core::analysis::Severity::Error).count();
        return Err(Failure::Errors(format!("{n} error(s)")));
    }
    Ok(())
}

impl AnalyzeArgs {
    /// Diagnostics get a CSV header only when they are the sole report.
    fn csv_header_needed(&self, g: &Global) -> bool {
        g.csv && !self.resources && (self.nocloning || self.entangle)
    }
}

fn threshold_text(t: Option<u128>) -> String {
    match t {
        None => "none".into(),
        Some(u128::MAX) => "inf".into(),
        Some(n) => n.to_string(),
    }
}

pub fn timing(g: &Global, a: &TimingArgs) -> Outcome {
    let p = load_program(g, &a.program, false)?;
    let prepared = match a.threshold {
        Some(t) => stage(g, "remodularize", || remodularize(&p, t, g.budget_instructions)).map_err(errors)?,
        None => p.clone(),
    };
    let est = stage(g, "schedule", || compose_critical_path(&prepared, a.mode)).map_err(errors)?;
    let oracle = if a.oracle {
        match stage(g, "oracle", || oracle_critical_path(&p, Some(g.budget_gates))) {
            Ok(n) => Some(Ok(n)),
            Err(e @ Error::BudgetExceeded { .. }) => Some(Err(e.to_string())),
            Err(e) => return Err(errors(e)),
        }
    } else {
        None
    };
    let thr = threshold_text(a.threshold);
    let mut out = String::new();
    if g.csv {
        out.push_str("mode,threshold,length,modules");
        if oracle.is_some() {
            out.push_str(",oracle");
        }
        out.push('\n');
        out.push_str(&format!("{},{thr},{},{}", est.mode, est.length, est.modules_scheduled()));
        match &oracle {
            Some(Ok(n)) => out.push_str(&format!(",{n}")),
            Some(Err(_)) => out.push(','),
            None => {}
        }
        out.push('\n');
    } else {
        out.push_str(&format!(
            "mode={} threshold={thr} length={} modules={}\n",
            est.mode,
            est.length,
            est.modules_scheduled()
        ));
        match &oracle {
            Some(Ok(n)) => out.push_str(&format!("oracle={n}\n")),
            Some(Err(why)) => out.push_str(&format!("oracle=skipped ({why})\n")),
            None => {}
        }
    }
    with_output(g.output.as_deref(), |w| w.write_all(out.as_bytes()).map_err(io_err))
        .map_err(Failure::Usage)
}

fn ctqg_module<'a>(p: &'a Program, a: &CtqgArgs) -> Result<&'a ModuleDef, Failure> {
    match &a.module {
        Some(name) => p
            .modules
            .get(name)
            .filter(|m| m.is_ctqg())
            .ok_or_else(|| Failure::Usage(format!("no reversible-logic module named `{name}`"))),
        None => p
            .modules
            .values()
            .rev()
            .find(|m| m.is_ctqg())
            .ok_or_else(|| Failure::Usage("the file defines no reversible-logic module".into())),
    }
}

fn load_library(a: &CtqgArgs) -> Result<Program, Failure> {
    compile_library(&read(&a.input)?).map_err(errors)
}

pub fn ctqg_synth(g: &Global, a: &CtqgArgs) -> Outcome {
    let p = load_library(a)?;
    let m = ctqg_module(&p, a)?;
    let counts = stage(g, "synthesize", || {
        with_output(g.output.as_deref(), |w| write_netlist(m, w).map_err(|e| e.to_string()))
    })
    .map_err(Failure::Errors)?;
    eprintln!(
        "{}: {} NOT, {} CNOT, {} Toffoli",
        m.name, counts.not, counts.cnot, counts.toffoli
    );
    Ok(())
}

pub fn ctqg_simulate(g: &Global, a: &SimulateArgs) -> Outcome {
    let p = load_library(&a.ctqg)?;
    let m = ctqg_module(&p, &a.ctqg)?;
    let c = stage(g, "synthesize", || compile_ctqg_module(m)).map_err(errors)?;
    for (name, v) in &a.inputs {
        let r = c
            .register(name)
            .ok_or_else(|| Failure::Usage(format!("`{}` has no register `{name}`", m.name)))?;
        if r.width() < 64 && *v >> r.width() != 0 {
            return Err(Failure::Usage(format!(
                "{name}={v} does not fit in {} bits",
                r.width()
            )));
        }
    }
    let inputs: Vec<(&str, u64)> = a.inputs.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let values = stage(g, "simulate", || simulate(&c, &inputs)).map_err(errors)?;
    let mut out = String::new();
    if g.csv {
        out.push_str("register,value\n");
    }
    for (name, v) in values {
        let sep = if g.csv { ',' } else { '=' };
        out.push_str(&format!("{name}{sep}{v}\n"));
    }
    with_output(g.output.as_deref(), |w| w.write_all(out.as_bytes()).map_err(io_err))
        .map_err(Failure::Usage)
}
