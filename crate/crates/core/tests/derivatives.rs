mod common;

use common::{random_complex, random_instance, rel_err, Instance};
use crb_waveform::channel::{channel_derivatives, channel_vector, MultipathParams, ParamKind};
use crb_waveform::fim::{objective, objective_gradient};
use crb_waveform::optim::{PenalizedLoss, PowerConstraints};
use crb_waveform::{frobenius_sq, real_inner, CMatrix};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Natural scale of each parameter type: one radian of phase across the
/// grid for delay and Doppler, one unit otherwise.
fn unit(inst: &Instance, kind: ParamKind) -> f64 {
    let n_max = inst.grid.elements().iter().map(|re| re.subcarrier).max().unwrap() as f64 + 1.0;
    let k_max = inst.grid.elements().iter().map(|re| re.symbol).max().unwrap() as f64 + 1.0;
    match kind {
        ParamKind::Delay => 1.0 / (2.0 * std::f64::consts::PI * inst.num.subcarrier_spacing() * n_max),
        ParamKind::Doppler => 1.0 / (2.0 * std::f64::consts::PI * inst.num.symbol_duration() * k_max),
        _ => 1.0,
    }
}

#[test]
fn channel_jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 4, 3, 2, 6);
        for &re in inst.grid.elements() {
            let jac = channel_derivatives(&inst.params, re, &inst.num, &inst.geom);
            let base = inst.params.to_vec();
            for i in 0..base.len() {
                let (kind, _) = inst.params.locate(i);
                let h = 1e-5 * unit(&inst, kind);
                let shifted = |s: f64| {
                    let mut v = base.clone();
                    v[i] += s;
                    channel_vector(&MultipathParams::from_slice(&v).unwrap(), re, &inst.num, &inst.geom)
                };
                let fd = (shifted(h) - shifted(-h)).unscale(2.0 * h);
                let col = jac.column(i);
                if col.norm() == 0.0 {
                    // delay is invisible on subcarrier 0, Doppler on symbol 0
                    assert!(
                        (kind == ParamKind::Delay && re.subcarrier == 0) || (kind == ParamKind::Doppler && re.symbol == 0)
                    );
                    assert!(fd.norm() <= 1e-9);
                    continue;
                }
                let err = (&fd - col).norm() / col.norm();
                assert!(err <= 1e-6, "column {i} ({}) rel err {err:e}", kind.name());
            }
        }
    }
}

#[test]
fn objective_gradient_matches_directional_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 4, 4, 2, 8);
        let x = inst.sphere(10.0).random_point(&mut rng);
        let g = objective_gradient(&x, &inst.params, &inst.grid, &inst.num, &inst.geom, &inst.weight).unwrap();
        let d = random_complex(&mut rng, x.nrows(), x.ncols());
        let d = d.unscale(frobenius_sq(&d).sqrt());
        let f = |t: f64| {
            let y = &x + &d * Complex64::new(t, 0.0);
            objective(&y, &inst.params, &inst.grid, &inst.num, &inst.geom, &inst.weight).unwrap()
        };
        let h = 1e-4;
        let fd = (f(h) - f(-h)) / (2.0 * h);
        let err = rel_err(real_inner(&g, &d), fd);
        assert!(err <= 1e-6, "rel err {err:e}");
    }
}

#[test]
fn riemannian_gradient_matches_differences_along_retraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 4, 4, 2, 8);
        let problem = inst.problem();
        let sphere = inst.sphere(10.0);
        let constraints = PowerConstraints::new(10.0, 1.3, inst.grid.len()).unwrap();
        let loss = PenalizedLoss::new(&problem, &constraints, 3.0, 0.7);
        let x = sphere.random_point(&mut rng);
        let eval = loss.riemannian(&sphere, &x).unwrap().unwrap();
        let xi: CMatrix = sphere.project_tangent(&x, &random_complex(&mut rng, x.nrows(), x.ncols()));
        let xi = xi.unscale(frobenius_sq(&xi).sqrt());
        let along = |t: f64| loss.value(&sphere.retract(&x, &xi, t).unwrap()).unwrap();
        let h = 1e-5;
        let fd = (along(h) - along(-h)) / (2.0 * h);
        let err = rel_err(real_inner(&eval.gradient, &xi), fd);
        assert!(err <= 1e-6, "rel err {err:e}");
        assert!(real_inner(&x, &eval.gradient).abs() <= 1e-10 * frobenius_sq(&x).sqrt() * frobenius_sq(&eval.gradient).sqrt());
    }
}
