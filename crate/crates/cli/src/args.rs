use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qhl_core::flatten::{DEFAULT_INSTRUCTION_BUDGET, DEFAULT_STEP_LIMIT};
use qhl_core::pipeline::Strategy;
use qhl_core::qasm::{QasmFormat, DEFAULT_EXPANSION_BUDGET};
use qhl_core::timing::SchedulingMode;

#[derive(Parser, Debug)]
#[command(name = "qhl", version, about = "Quantum program compiler and analyzer")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Write the main output here instead of standard output.
    #[arg(short = 'o', long = "output", global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Machine-readable comma-separated reports.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Bound on intermediate instructions during flattening and
    /// remodularization.
    #[arg(long, global = true, value_name = "N", default_value_t = DEFAULT_INSTRUCTION_BUDGET,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub budget_instructions: u64,
    /// Bound on gates produced by full expansion (QASM-F, the oracle).
    #[arg(long, global = true, value_name = "N", default_value_t = DEFAULT_EXPANSION_BUDGET,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub budget_gates: u64,
    /// Bound on classical steps of the dynamic strategy.
    #[arg(long, global = true, value_name = "N", default_value_t = DEFAULT_STEP_LIMIT,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub step_limit: u64,
    /// Report stage timings on standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit QASM for a source or QASM file.
    Compile(CompileArgs),
    /// Run program checks and resource estimation.
    Analyze(AnalyzeArgs),
    /// Estimate the critical path.
    Timing(TimingArgs),
    /// Reversible-logic modules.
    Ctqg {
        #[command(subcommand)]
        command: CtqgCommand,
    },
}

#[derive(Args, Debug)]
pub struct ProgramArgs {
    /// Source file, or QASM when the extension starts with `qasm`.
    pub input: PathBuf,
    #[arg(long, default_value_t = Strategy::Pass)]
    pub strategy: Strategy,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    #[command(flatten)]
    pub program: ProgramArgs,
    #[arg(long, default_value_t = QasmFormat::HierLoops)]
    pub format: QasmFormat,
    /// Replace Toffolis by their Clifford+T network.
    #[arg(long)]
    pub lower_toffoli: bool,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub program: ProgramArgs,
    /// Gate and qubit counts per specialized module.
    #[arg(long)]
    pub resources: bool,
    /// Entanglement annotations and the disentangled-qubit check.
    #[arg(long)]
    pub entangle: bool,
    /// Multi-qubit gates with repeated operands.
    #[arg(long)]
    pub nocloning: bool,
    /// Module for the entanglement report; defaults to the entry.
    #[arg(long, value_name = "NAME")]
    pub module: Option<String>,
}

#[derive(Args, Debug)]
pub struct TimingArgs {
    #[command(flatten)]
    pub program: ProgramArgs,
    #[arg(long, default_value_t = SchedulingMode::Modular)]
    pub mode: SchedulingMode,
    /// Inline modules smaller than this many gates first; `inf` inlines all.
    #[arg(long, value_name = "N", value_parser = parse_threshold)]
    pub threshold: Option<u128>,
    /// Also compute the exact critical path if within the gate budget.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Subcommand, Debug)]
pub enum CtqgCommand {
    /// Write the NOT/CNOT/Toffoli netlist of a module.
    Synth(CtqgArgs),
    /// Run a module on register values and print the final values.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct CtqgArgs {
    pub input: PathBuf,
    /// Reversible-logic module; defaults to the last one in the file.
    #[arg(long, value_name = "NAME")]
    pub module: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub ctqg: CtqgArgs,
    /// Initial register value; unnamed registers start at 0.
    #[arg(long = "in", value_name = "REG=VALUE", value_parser = parse_assignment)]
    pub inputs: Vec<(String, u64)>,
}

fn parse_threshold(s: &str) -> Result<u128, String> {
    match s {
        "inf" | "infinity" => Ok(u128::MAX),
        _ => s
            .parse()
            .map_err(|_| format!("`{s}` is not a gate count or `inf`")),
    }
}

fn parse_assignment(s: &str) -> Result<(String, u64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("`{s}` is not of the form REG=VALUE"))?;
    let value = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a non-negative integer"))?;
    Ok((name.trim().to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn thresholds_and_assignments() {
        assert_eq!(parse_threshold("inf"), Ok(u128::MAX));
        assert_eq!(parse_threshold("10"), Ok(10));
        assert!(parse_threshold("-1").is_err());
        assert_eq!(parse_assignment("n=5"), Ok(("n".into(), 5)));
        assert!(parse_assignment("n").is_err());
    }
}
