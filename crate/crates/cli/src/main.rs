//! `sepeval`: batch front end for the decomposition toolkit.
//!
//! Exit status is 0 on success, 1 for usage errors, 2 for bad input data
//! and 3 for internal failures; failures also print a JSON error record as
//! the last line on stderr.

mod commands;
mod dataset;
mod error;
mod output;

use clap::{Parser, Subcommand};
use sepeval::Execution;

use commands::{dsa, enhance, evaluate, loss, mix, oa, report, wer, Ctx};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "sepeval", version, about = "Decompose enhanced speech into target, interference, noise and artifact errors")]
struct Cli {
    /// Worker threads for utterance-level work; 1 runs everything on the
    /// calling thread.
    #[arg(long, global = true, env = "SEPEVAL_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mix source, interference and noise at target levels, or generate a
    /// synthetic dataset.
    Mix(mix::MixArgs),
    /// Run a reference enhancer over a dataset.
    Enhance(enhance::EnhanceArgs),
    /// Write the four components of each enhanced signal and their metrics.
    Decompose(evaluate::DecomposeArgs),
    /// SDR, SIR, SNR and SAR per utterance with a dataset summary.
    Metrics(evaluate::MetricsArgs),
    /// Rescale error components over a grid and score the results.
    Dsa(dsa::DsaArgs),
    /// Metrics of enhanced/observed interpolations over a weight grid.
    OaSweep(oa::SweepArgs),
    /// Mix the observation back into each enhanced signal.
    OaApply(oa::ApplyArgs),
    /// Artifact-boosted SDR loss per utterance and weight.
    Loss(loss::LossArgs),
    /// Compare the analytic loss gradient with finite differences.
    GradCheck(loss::GradCheckArgs),
    /// Word error rate of keyed hypothesis transcripts.
    Wer(wer::WerArgs),
    /// Pool saved records into summary tables.
    Report(report::ReportArgs),
}

fn context(workers: Option<usize>) -> CliResult<Ctx> {
    let exec = match workers {
        Some(0) => return Err(CliError::usage("--workers must be at least 1")),
        Some(1) => Execution::Sequential,
        Some(n) => {
            sepeval::par::init_global_workers(n);
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    Ok(Ctx { exec, workers })
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = context(cli.workers)?;
    match cli.command {
        Command::Mix(a) => mix::run(a, ctx),
        Command::Enhance(a) => enhance::run(a, ctx),
        Command::Decompose(a) => evaluate::run_decompose(a, ctx),
        Command::Metrics(a) => evaluate::run_metrics(a, ctx),
        Command::Dsa(a) => dsa::run(a, ctx),
        Command::OaSweep(a) => oa::run_sweep(a, ctx),
        Command::OaApply(a) => oa::run_apply(a, ctx),
        Command::Loss(a) => loss::run_loss(a, ctx),
        Command::GradCheck(a) => loss::run_grad_check(a, ctx),
        Command::Wer(a) => wer::run(a, ctx),
        Command::Report(a) => report::run(a, ctx),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            let _ = e.print();
            let err = CliError::usage(e.kind().to_string());
            eprintln!("{}", err.record());
            std::process::exit(err.kind.exit_code());
        }
    };
    let outcome = std::panic::catch_unwind(|| run(cli))
        .unwrap_or_else(|_| Err(CliError::internal("unexpected panic; see the message above")));
    if let Err(e) = outcome {
        eprintln!("{}", e.record());
        std::process::exit(e.kind.exit_code());
    }
}
