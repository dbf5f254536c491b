use std::process::ExitCode;

use clap::Parser;
use thinset::cli::{emit, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, params, table, hash) = match execute(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("thinset: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&table, &params, &hash) {
        eprintln!("thinset: {e}");
        return ExitCode::from(2);
    }
    for f in &table.failures {
        eprintln!("{}: invariant failed: {f}", experiment.name());
    }
    if table.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
