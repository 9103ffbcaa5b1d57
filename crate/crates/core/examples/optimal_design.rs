//! Optimal waveform for a known desk-scale scenario, compared with a
//! random-phase uniform-power waveform.

use crb_waveform::optim::{repms, OptimizerConfig, SphereSpec};
use crb_waveform::scenario::{generate_scenario, substream, Alpha, ScenarioConfig, Stream};
use crb_waveform::{column_powers, Waveform};
use num_complex::Complex64;
use rand::Rng;

fn main() -> crb_waveform::Result<()> {
    let cfg = ScenarioConfig { alpha: Alpha(4.0), ..Default::default() };
    let sc = generate_scenario(&cfg, &mut substream(5, 0, Stream::Scenario))?;
    let problem = sc.problem()?;
    let m = sc.grid.len();
    let sphere = SphereSpec::for_power(cfg.n_tx, m, cfg.power)?;
    let x0 = sphere.random_point(&mut substream(5, 0, Stream::InitialPoint));

    let run = repms(&problem, &sc.constraints, &OptimizerConfig::default(), &x0)?;
    for r in run.trace.iter().step_by(50).chain(run.trace.last()) {
        println!(
            "iter {:3}  objective {:10.4}  max violation {:+.3e}  |grad| {:.3e}  rho {:.1e}  u {:.1e}",
            r.iter, r.objective, r.max_violation, r.grad_norm, r.rho, r.u
        );
    }
    println!("stopped: {:?} after {} iterations", run.stop, run.iterations());

    let mut rng = substream(5, 0, Stream::Evaluation);
    let amp = (cfg.power / cfg.n_tx as f64).sqrt();
    let baseline: Waveform =
        Waveform::from_fn(cfg.n_tx, m, |_, _| Complex64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU)));
    println!("uniform random-phase objective {:.4}", problem.objective(&baseline)?);

    let powers = column_powers(&run.x);
    let active = powers.iter().filter(|&&p| p > 0.01 * cfg.power).count();
    let peak = powers.iter().cloned().fold(0.0, f64::max);
    println!("{active} of {m} resource elements carry power; peak {peak:.3} (cap {:.1})", cfg.alpha.value() * cfg.power);
    Ok(())
}
