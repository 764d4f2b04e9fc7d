use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use idm_cli::{error_json, run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            println!("{}", error_json(err.kind(), err.to_string()));
            let _ = e.print();
            return ExitCode::from(err.exit_code());
        }
    };
    let quiet = cli.command.output().quiet;
    match run(&cli.command) {
        Ok(report) => {
            println!("{}", report.to_json());
            if !quiet {
                for note in &report.diagnostics.notes {
                    eprintln!("warning: {note}");
                }
                eprint!("{}", report.summary());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("{}", error_json(err.kind(), err.to_string()));
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
