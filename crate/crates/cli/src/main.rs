use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use simlab_cli::{execute, Overrides, RunError, Scenario};

/// Monte Carlo experiments for Brownian motion on Schottky limit sets.
#[derive(Parser)]
#[command(name = "simlab", version)]
struct Cli {
    /// levy_check | exit_measure | measure_compare | accumulation | sigma_at_hit | torus_classify | recurrence
    #[arg(value_parser = |s: &str| s.parse::<Scenario>())]
    scenario: Scenario,
    /// TOML or JSON config document
    #[arg(long)]
    config: PathBuf,
    /// overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// output path (`.csv` for tabular scenarios); stdout when absent
    #[arg(long)]
    out: Option<String>,
    /// worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail(&RunError::ConfigInvalid(vec![format!("{}: {e}", cli.config.display())])),
    };
    let overrides = Overrides { seed: cli.seed, output: cli.out.clone(), workers: cli.workers };
    match execute(cli.scenario, &text, &overrides) {
        Ok(out) => {
            if out.path.is_none() {
                print!("{}", out.text);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("simlab: {e}");
    ExitCode::from(e.exit_code() as u8)
}
