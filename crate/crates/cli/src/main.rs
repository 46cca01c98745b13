use std::path::PathBuf;
use std::process::ExitCode;

use budget_pricing_cli::commands::{self, RunContext};
use budget_pricing_cli::CliError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    version,
    about = "Posted-price mechanisms for budget-feasible procurement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML); optional for `bounds` and `gap`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `harness.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `harness.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo trials; overrides `harness.trials`.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the ex ante relaxation, write solution.csv.
    Solve,
    /// Simulate the configured mechanisms, write report.csv.
    Simulate,
    /// Theoretical bound table, write bounds.csv.
    Bounds,
    /// Correlation gap of the k-highest-value function, write gap.csv.
    Gap,
    /// All of the above.
    Report,
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    if cli.config.is_none() && !matches!(cli.command, Command::Bounds | Command::Gap) {
        return Err(CliError::Config("this subcommand needs --config".into()));
    }
    let config = commands::load_config(cli.config.as_deref())?;
    let ctx = RunContext::new(config, cli.seed, cli.trials, cli.out.clone())?;
    match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Bounds => commands::bounds(&ctx),
        Command::Gap => commands::gap(&ctx),
        Command::Report => commands::report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
