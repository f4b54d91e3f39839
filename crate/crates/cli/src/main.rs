mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format, OutputArgs};
use error::CliResult;

fn run(command: Command) -> CliResult<()> {
    let emit = |(report, output): (output::Report, OutputArgs)| {
        report.emit(output.format.unwrap_or(Format::Table), output.out.as_deref())
    };
    match command {
        Command::Estimate(a) => emit(commands::estimate(a).map(|(r, a)| (r, a.output))?),
        Command::Sensitivity(a) => emit(commands::sensitivity(a).map(|(r, a)| (r, a.output))?),
        Command::CheckIdent(a) => emit(commands::check_ident(a).map(|(r, a)| (r, a.output))?),
        Command::Counterexample(a) => emit(commands::counterexample(a).map(|(r, a)| (r, a.output))?),
        Command::Simulate(a) => emit(commands::simulate(a).map(|(r, a)| (r, a.output))?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error[ConfigError]: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.name(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
