//! `evpipe`: inspect, generate, encode, evaluate and render event-camera
//! defect datasets.

mod args;
mod encode;
mod eval;
mod failure;
mod gen;
mod inspect;
mod manifest;
mod render;
mod settings;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Inspect(a) => inspect::run(&cli.global, a),
        Command::Gen(a) => gen::run(&cli.global, a),
        Command::Encode(a) => encode::run(&cli.global, a),
        Command::Eval(a) => eval::run(&cli.global, a),
        Command::Render(a) => render::run(&cli.global, a),
        Command::Verify(a) => verify::run(&cli.global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure::exit_code(&e))
        }
    }
}
