mod cli;
mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};
use output::{Echo, Failure, Outcome};

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    // The echo leaves out --jobs and output paths: neither changes results.
    let config = serde_json::to_value(&cli.command).expect("arguments serialize");
    let config = config
        .as_object()
        .and_then(|o| o.values().next().cloned())
        .unwrap_or(config);
    let echo = Echo::new(cli.command.name(), cli.format, config);
    match &cli.command {
        Command::Subtract(a) => commands::subtract(a, &echo),
        Command::Estimate(a) => commands::estimate(a, &echo),
        Command::ExtractGt(a) => commands::extract_gt(a, &echo),
        Command::Evaluate(a) => commands::evaluate_cmd(a, &echo),
        Command::DiffGt(a) => commands::diff_gt(a, &echo),
        Command::Lint(a) => commands::lint(a, &echo),
        Command::Folds(a) => commands::folds(a, &echo),
        Command::Simulate(a) => commands::simulate(a, &echo),
        Command::OracleExperiment(a) => commands::oracle(a, &echo),
        Command::PlotChroma(a) => commands::plot_chroma(a, &echo),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ccbench: {f}");
            ExitCode::from(f.code())
        }
    }
}
