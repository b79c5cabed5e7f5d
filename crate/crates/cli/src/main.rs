use std::process::ExitCode;

use clap::Parser;
use grasseig_cli::{configure_threads, run, summary_table, validate, Cli, Command, RunSpec};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| match &cli.command {
        Command::Run(args) => {
            let spec = RunSpec::from_args(args)?;
            let report = run(&spec)?;
            print!("{}", summary_table(&report));
            Ok(true)
        }
        Command::Validate(args) => validate(args, &mut std::io::stdout()),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
