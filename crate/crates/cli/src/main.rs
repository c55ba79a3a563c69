use std::process::ExitCode;

use clap::Parser;
use mtkit_cli::args::{Cli, Command};
use mtkit_cli::commands::{dispatch, Ctx};
use mtkit_cli::error::{CliError, EXIT_OK, EXIT_USAGE};
use mtkit_cli::run::{report_run, run};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::usage)?;
    }
    match &cli.command {
        Command::Run(a) => {
            let record = run(a, cli.quiet)?;
            if !cli.quiet {
                print!("{}", report_run(&record));
            }
            Ok(())
        }
        cmd => dispatch(cmd, &Ctx::new(cli.seed.unwrap_or(0), cli.quiet)).map(|_| ()),
    }
}
