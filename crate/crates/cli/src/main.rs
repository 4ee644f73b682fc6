use std::io;
use std::process::ExitCode;

use clap::Parser;
use hproj_cli::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { hproj_cli::commands::EXIT_USAGE } else { 0 });
        }
    };
    ExitCode::from(hproj_cli::run(cli, &mut io::stdout().lock(), &mut io::stderr().lock()))
}
