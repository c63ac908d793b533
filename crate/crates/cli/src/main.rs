mod args;
mod commands;
mod eval;
mod exit;
mod files;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Keygen(a) => commands::keygen(a),
        Command::Encode(a) => commands::encode_cmd(a),
        Command::Decode(a) => commands::decode_cmd(a),
        Command::Eval(a) => eval::eval_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit::code_for(&err))
        }
    }
}
