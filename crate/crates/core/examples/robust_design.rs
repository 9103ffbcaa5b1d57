//! Robust design under parameter uncertainty: the stochastic optimizer
//! against the nominal optimum, scored on shared random parameter draws.

use crb_waveform::optim::{repms, OptimizerConfig, SphereSpec};
use crb_waveform::scenario::{generate_scenario, substream, ScenarioConfig, Stream};
use crb_waveform::stochastic::{draw_parameter_set, mean_objective, srepms, PerturbationSpec, StochasticConfig};

fn main() -> crb_waveform::Result<()> {
    let cfg = ScenarioConfig::default();
    let sc = generate_scenario(&cfg, &mut substream(2, 0, Stream::Scenario))?;
    let problem = sc.problem()?;
    let sphere = SphereSpec::for_power(cfg.n_tx, sc.grid.len(), cfg.power)?;
    let x0 = sphere.random_point(&mut substream(2, 0, Stream::InitialPoint));
    let spec = PerturbationSpec::default();

    let nominal = repms(&problem, &sc.constraints, &OptimizerConfig::default(), &x0)?;
    let robust = srepms(
        &problem,
        &spec,
        &StochasticConfig { samples: 10, seed: 2 },
        &sc.constraints,
        &OptimizerConfig::stochastic_default(),
        &x0,
    )?;
    println!("robust run: {} iterations, max violation {:+.3e}", robust.iterations(), robust.final_record().max_violation);

    let mut rng = substream(2, 0, Stream::Evaluation);
    println!("sigma_e   nominal design   robust design");
    for sigma_e in [0.0, 10.0, 25.0, 50.0] {
        let draws = draw_parameter_set(problem.params(), &spec.at_sigma_e(sigma_e), 100, &mut rng);
        println!(
            "{sigma_e:7.1}   {:14.4}   {:13.4}",
            mean_objective(&nominal.x, &problem, &draws)?,
            mean_objective(&robust.x, &problem, &draws)?
        );
    }
    Ok(())
}
