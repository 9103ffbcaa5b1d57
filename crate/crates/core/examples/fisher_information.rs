//! Compares the closed-form FIM with the element-wise Jacobian form and
//! evaluates the weighted log-det objective and its gradient.

use crb_waveform::fim::{fim_closed, fim_elementwise, objective, objective_gradient};
use crb_waveform::optim::SphereSpec;
use crb_waveform::scenario::{generate_scenario, substream, ScenarioConfig, Stream};
use crb_waveform::{frobenius_sq, real_inner};

fn main() -> crb_waveform::Result<()> {
    let cfg = ScenarioConfig { n_tx: 4, n_rx: 4, subcarriers: 4, symbols: 2, paths: 2, ..Default::default() };
    let sc = generate_scenario(&cfg, &mut substream(11, 0, Stream::Scenario))?;
    let sphere = SphereSpec::for_power(cfg.n_tx, sc.grid.len(), cfg.power)?;
    let x = sphere.random_point(&mut substream(11, 0, Stream::InitialPoint));

    let closed = fim_closed(&x, &sc.params, &sc.grid, &sc.numerology, &sc.geometry)?;
    let direct = fim_elementwise(&x, &sc.params, &sc.grid, &sc.numerology, &sc.geometry)?;
    let rel = (closed.matrix() - direct.matrix()).amax() / direct.max_abs();
    println!("FIM {0}x{0}, closed vs element-wise relative error {rel:.2e}", closed.dim());
    let ev = closed.eigenvalues();
    println!("eigenvalues span [{:.3e}, {:.3e}]", ev[0], ev[ev.len() - 1]);

    let f = objective(&x, &sc.params, &sc.grid, &sc.numerology, &sc.geometry, &sc.weight)?;
    let g = objective_gradient(&x, &sc.params, &sc.grid, &sc.numerology, &sc.geometry, &sc.weight)?;
    println!("log det(J'IJ) = {f:.6}, |grad| = {:.4e}", frobenius_sq(&g).sqrt());

    // directional derivative against a central difference
    let d = sphere.random_point(&mut substream(11, 1, Stream::InitialPoint));
    let h = 1e-5;
    let fp = objective(&(&x + &d * nalgebra::Complex::new(h, 0.0)), &sc.params, &sc.grid, &sc.numerology, &sc.geometry, &sc.weight)?;
    let fm = objective(&(&x - &d * nalgebra::Complex::new(h, 0.0)), &sc.params, &sc.grid, &sc.numerology, &sc.geometry, &sc.weight)?;
    println!("directional derivative: analytic {:.8e}, central difference {:.8e}", real_inner(&g, &d), (fp - fm) / (2.0 * h));
    Ok(())
}
