#![allow(dead_code)]

use crb_waveform::channel::{ArrayGeometry, MultipathParams, OfdmNumerology, PathParams, ResourceElement};
use crb_waveform::fim::{ResourceGrid, SensingProblem, WeightMatrix};
use crb_waveform::optim::SphereSpec;
use crb_waveform::scenario::{default_weight_matrix, delay_from_length, doppler_from_velocity};
use crb_waveform::{CMatrix, Waveform};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub params: MultipathParams,
    pub grid: ResourceGrid,
    pub num: OfdmNumerology,
    pub geom: ArrayGeometry,
    pub weight: WeightMatrix,
}

impl Instance {
    pub fn problem(&self) -> SensingProblem {
        SensingProblem::new(self.params.clone(), self.grid.clone(), self.num, self.geom, self.weight.clone()).unwrap()
    }

    pub fn sphere(&self, power: f64) -> SphereSpec {
        SphereSpec::for_power(self.geom.n_tx, self.grid.len(), power).unwrap()
    }
}

pub fn random_params<R: Rng>(rng: &mut R, paths: usize, f_c: f64) -> MultipathParams {
    MultipathParams::new(
        (0..paths)
            .map(|_| PathParams {
                gain_re: rng.sample(StandardNormal),
                gain_im: rng.sample(StandardNormal),
                delay: delay_from_length(rng.random_range(10.0..800.0)),
                doppler: doppler_from_velocity(rng.random_range(0.0..80.0), f_c),
                aoa: rng.random_range(-80f64..80.0).to_radians(),
                aod: rng.random_range(-80f64..80.0).to_radians(),
            })
            .collect(),
    )
    .unwrap()
}

/// `m` distinct resource elements drawn from a 16×8 grid, unit noise
/// variance unless given.
pub fn random_instance<R: Rng>(rng: &mut R, n_tx: usize, n_rx: usize, paths: usize, m: usize) -> Instance {
    let num = OfdmNumerology::new(15e3, 3e9).unwrap();
    let geom = ArrayGeometry::new(n_tx, n_rx).unwrap();
    let params = random_params(rng, paths, num.carrier_frequency());
    let elements: Vec<ResourceElement> =
        sample(rng, 16 * 8, m).into_iter().map(|i| ResourceElement::new(i / 8, i % 8)).collect();
    let var = rng.random_range(0.5..2.0);
    let grid = ResourceGrid::uniform(elements, var).unwrap();
    let weight = default_weight_matrix(paths, &num);
    Instance { params, grid, num, geom, weight }
}

pub fn random_complex<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Uniform power `P` per symbol, equal across antennas, random phases.
pub fn random_phase_waveform<R: Rng>(rng: &mut R, n_tx: usize, m: usize, power: f64) -> Waveform {
    let amp = (power / n_tx as f64).sqrt();
    Waveform::from_fn(n_tx, m, |_, _| Complex64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU)))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
