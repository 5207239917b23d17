//! `qhl`: compile, analyze and time quantum programs, and synthesize or
//! simulate reversible-logic modules.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, CtqgCommand};
use commands::Failure;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile(a) => commands::compile(&cli.global, a),
        Command::Analyze(a) => commands::analyze(&cli.global, a),
        Command::Timing(a) => commands::timing(&cli.global, a),
        Command::Ctqg { command } => match command {
            CtqgCommand::Synth(a) => commands::ctqg_synth(&cli.global, a),
            CtqgCommand::Simulate(a) => commands::ctqg_simulate(&cli.global, a),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("qhl: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Errors(msg)) => {
            eprintln!("qhl: {msg}");
            ExitCode::from(1)
        }
    }
}
