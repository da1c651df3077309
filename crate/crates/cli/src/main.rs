mod args;
mod commands;
mod failure;
mod serve;

use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use crate::args::{Cli, Command, ConfigFile};
use crate::failure::CmdResult;

fn run(cli: Cli) -> CmdResult {
    let command = match &cli.config {
        Some(path) => cli.command.with_config(ConfigFile::load(path)?),
        None => cli.command,
    };
    match command {
        Command::Prepare(a) => commands::prepare(a),
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train_model(a),
        Command::Predict(a) => commands::predict(a),
        Command::ExportCam(a) => commands::export_cam(a),
        Command::Serve(a) => serve::run(a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}
