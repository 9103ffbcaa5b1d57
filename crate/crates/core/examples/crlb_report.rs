//! Square-root Cramér-Rao bounds of an optimized waveform, per parameter
//! and averaged over paths.

use crb_waveform::crlb::per_parameter_rmse;
use crb_waveform::optim::{repms, OptimizerConfig, SphereSpec};
use crb_waveform::scenario::{generate_scenario, substream, ScenarioConfig, Stream};

fn main() -> crb_waveform::Result<()> {
    let cfg = ScenarioConfig::default();
    let sc = generate_scenario(&cfg, &mut substream(9, 0, Stream::Scenario))?;
    let problem = sc.problem()?;
    let sphere = SphereSpec::for_power(cfg.n_tx, sc.grid.len(), cfg.power)?;
    let x0 = sphere.random_point(&mut substream(9, 0, Stream::InitialPoint));

    for (label, x) in [("initial", x0.clone()), ("optimized", repms(&problem, &sc.constraints, &OptimizerConfig::default(), &x0)?.x)] {
        let report = per_parameter_rmse(&problem.fim(&x)?, cfg.paths)?;
        println!("{label} waveform (normalised condition number {:.2e})", report.condition);
        for (kind, v) in report.by_type() {
            println!("  {:8} {v:.4e}", kind.name());
        }
    }
    Ok(())
}
