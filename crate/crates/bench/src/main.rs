use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ckm_bench::config::{CliArgs, RunConfig};
use ckm_bench::{cmd_baseline, cmd_diag, cmd_run, cmd_sweep, Outcome};

#[derive(Parser)]
#[command(name = "ckm", version, about = "Consistent k-median engine and benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the consistent engine and write steps.csv and summary.json.
    Run(CliArgs),
    /// Recompute local search after every insertion (same output schema).
    Baseline(CliArgs),
    /// Run every audit and write diag.json; exits 1 on any violation.
    Diag(CliArgs),
    /// Paired engine/baseline runs on uniform 2-D streams; writes sweep.csv.
    Sweep(CliArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let (args, f): (CliArgs, fn(&RunConfig) -> anyhow::Result<Outcome>) = match cli.cmd {
        Cmd::Run(a) => (a, cmd_run),
        Cmd::Baseline(a) => (a, cmd_baseline),
        Cmd::Diag(a) => (a, cmd_diag),
        // The sweep takes its k values from --sweep-k.
        Cmd::Sweep(a) => (CliArgs { k: a.k.or(Some(1)), ..a }, cmd_sweep),
    };
    let outcome = RunConfig::resolve(&args).and_then(|cfg| f(&cfg));
    match outcome {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::AuditFailed(violations)) => {
            for v in violations {
                eprintln!("audit failed: {v}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
