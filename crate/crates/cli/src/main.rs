mod args;
mod commands;
mod experiment;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::UsageError;

const THREADS_VAR: &str = "METRICLAB_THREADS";

fn configure_threads() -> Result<(), UsageError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError(e.to_string()))
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict_cmd(a),
        Command::Search(a) => commands::search(a),
        Command::Lowcost(a) => commands::lowcost(a),
        Command::Report(a) => commands::report_cmd(a),
    }
}

/// Exit status: 0 on success, 1 for usage errors, 2 for data errors.
fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("metriclab {}: error: {e:#}", cli.command.name());
            if e.is::<UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
