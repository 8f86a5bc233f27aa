//! `apkr`: generate instances, run the solvers, check their guarantees and
//! time them.
//!
//! Exit codes: 0 success, 1 guarantee or threshold failure, 2 usage error,
//! 3 numerical failure (rank, definiteness, overflow).

mod args;
mod bench;
mod gen;
mod output;
mod solve;
mod verify;

use clap::{Parser, Subcommand};
use output::{Format, Outcome};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "apkr", version, about = "Sketch-and-precondition solvers for power and attention kernel regression")]
struct Cli {
    /// Root seed; every random draw is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a test matrix and a `<path>.json` metadata sidecar.
    Gen(gen::GenArgs),
    /// Solve a regression problem and check the result against a dense oracle.
    Solve(solve::SolveArgs),
    /// Run a statistical property suite.
    Verify(verify::VerifyArgs),
    /// Time a parameter sweep.
    Bench(bench::BenchArgs),
}

fn exit_code(e: &apkr::Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn kind(e: &apkr::Error) -> &'static str {
    use apkr::Error::*;
    match e {
        Dimension(_) => "dimension",
        Rank(_) => "rank",
        Parameter(_) => "parameter",
        Definiteness(_) => "definiteness",
        Radius { .. } => "radius",
        Overflow(_) => "overflow",
        Size(_) => "size",
        Format(_) => "format",
        Io(_) => "io",
    }
}

/// Caps the worker pool at `APKR_THREADS` when set.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("APKR_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("APKR_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("{}", serde_json::json!({ "error": "parameter", "message": message }));
        return ExitCode::from(2);
    }
    let result: apkr::Result<Outcome> = match &cli.command {
        Command::Gen(a) => gen::run(a, cli.seed),
        Command::Solve(a) => solve::run(a, cli.seed),
        Command::Verify(a) => verify::run(a, cli.seed),
        Command::Bench(a) => bench::run(a, cli.seed),
    };
    match result {
        Ok(outcome) => {
            if let Err(e) = output::emit(&output::render(&outcome, cli.format), cli.out.as_deref()) {
                eprintln!("{}", serde_json::json!({ "error": "io", "message": e.to_string() }));
                return ExitCode::from(2);
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": kind(&e), "message": e.to_string() }));
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn numerical_errors_exit_with_three() {
        assert_eq!(exit_code(&apkr::Error::Rank("x".into())), 3);
        assert_eq!(exit_code(&apkr::Error::Definiteness("x".into())), 3);
        assert_eq!(exit_code(&apkr::Error::Parameter("x".into())), 2);
    }
}
