mod args;
mod commands;
mod config;
mod error;
mod output;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use error::CliError;

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let argv = config::merge(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    let ctx = Context { seed: cli.seed };
    let outputs = lexica::pipeline::with_threads(cli.threads, || match cli.command {
        Command::Index(a) => commands::index(a, &ctx),
        Command::Rerank(a) => commands::rerank(a, &ctx),
        Command::Fuse(a) => commands::fuse(a, &ctx),
        Command::Sweep(a) => commands::sweep_cmd(a, &ctx),
        Command::Evaluate(a) => commands::evaluate_cmd(a, &ctx),
        Command::Expand(a) => commands::expand(a, &ctx),
        Command::Triplets(a) => commands::triplets(a, &ctx),
        Command::Significance(a) => commands::significance(a, &ctx),
    })??;
    outputs.commit()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let argv: Vec<String> = match std::env::args_os().map(|a| a.into_string()).collect() {
        Ok(v) => v,
        Err(bad) => {
            eprintln!("error: argument {bad:?} is not valid UTF-8");
            return ExitCode::from(1);
        }
    };
    let result = panic::catch_unwind(AssertUnwindSafe(|| run(argv)))
        .unwrap_or_else(|_| Err(CliError::Internal("internal error (panic)".into())));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let text = e.to_string();
            if text.starts_with("error:") {
                eprint!("{text}");
            } else {
                eprintln!("error: {text}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
