//! Runs a small α sweep through the experiment harness and writes its CSV
//! and resolved config into a directory (default `sweep-out`).

use crb_waveform::experiments::{run, Command, ExperimentConfig, ExperimentSpec};
use crb_waveform::scenario::ScenarioConfig;

fn main() -> crb_waveform::Result<()> {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "sweep-out".into());
    let cfg = ExperimentConfig {
        scenario: ScenarioConfig { subcarriers: 8, ..Default::default() },
        scenarios: 4,
        seed: 42,
        ..Default::default()
    };
    let spec = ExperimentSpec::new(Command::AlphaSweep, cfg, out_dir)?;
    for path in run(&spec)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
