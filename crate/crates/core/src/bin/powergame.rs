use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use powergame::error::Error;
use powergame::experiment::{self, Task};

#[derive(Parser)]
#[command(version, about = "Energy-efficient power control as a stochastic game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Run {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `outputs.dir`, then `./out`.
    #[arg(long, env = "POWERGAME_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in the config (default: simulate).
    Simulate(Run),
    /// Run a named experiment preset.
    Preset {
        #[arg(long, value_parser = experiment::PRESETS)]
        name: String,
        #[arg(long, env = "POWERGAME_OUT_DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Two-player utility region of the config's game.
    Region(Run),
    /// Strategy comparison over the config's player counts.
    Dominance(Run),
    /// Discount-factor bound over the config's player counts.
    Lambdamax(Run),
    /// BUS configuration frequencies.
    Partition(Run),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Preset { name, out, seed } => experiment::preset(&name, seed)
            .and_then(|cfg| experiment::run_config(&cfg, &std::env::current_dir()?, &out)),
        Command::Simulate(r) => experiment::run_experiment(&r.config, None, r.out.as_deref()),
        Command::Region(r) => experiment::run_experiment(&r.config, Some(Task::Region), r.out.as_deref()),
        Command::Dominance(r) => experiment::run_experiment(&r.config, Some(Task::Dominance), r.out.as_deref()),
        Command::Lambdamax(r) => experiment::run_experiment(&r.config, Some(Task::LambdaMax), r.out.as_deref()),
        Command::Partition(r) => experiment::run_experiment(&r.config, Some(Task::Partition), r.out.as_deref()),
    };
    match result {
        Ok(outcome) => {
            for a in &outcome.manifest.artifacts {
                println!("{}  {}", a.sha256, outcome.dir.join(&a.file).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(e),
    }
}

fn report(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
