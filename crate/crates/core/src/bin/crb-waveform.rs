use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use crb_waveform::experiments::{run, Command, ExperimentConfig, ExperimentSpec};
use crb_waveform::Error;

/// Design sensing waveforms and reproduce the evaluation experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Overrides the number of scenarios.
    #[arg(long)]
    scenarios: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = ExperimentConfig::load(&cli.config).and_then(|mut cfg| {
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(n) = cli.scenarios {
            cfg.scenarios = n;
        }
        run(&ExperimentSpec::new(cli.command, cfg, cli.out_dir)?)
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Numerical { .. } | Error::SingularFim { .. } | Error::DegenerateRetraction => 3,
                _ => 1,
            })
        }
    }
}
