//! Robust design under Gaussian parameter uncertainty.
//!
//! The expected log-det objective is replaced by a sample mean over `N`
//! parameter vectors drawn around the nominal estimate. [`srepms`] redraws
//! the batch after every retraction; within one line search the batch is
//! frozen.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{MultipathParams, ParamKind};
use crate::fim::SensingProblem;
use crate::optim::{
    penalty_cg, DesignObjective, ObjectiveSource, OptimizerConfig, PenalizedLoss, PowerConstraints, RunResult,
    SphereSpec,
};
use crate::{CMatrix, Error, Result, Waveform};

/// Redraws allowed per sample before a singular batch is reported.
pub const MAX_REDRAWS: usize = 100;

/// Distribution of the uncertainty level σ_e.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaEDist {
    Fixed(f64),
    Uniform { lo: f64, hi: f64 },
}

/// Per-parameter-type standard deviations, as multiples of σ_e.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    pub scale_gain_re: f64,
    pub scale_gain_im: f64,
    pub scale_delay: f64,
    pub scale_doppler: f64,
    pub scale_aoa: f64,
    pub scale_aod: f64,
    pub sigma_e: SigmaEDist,
}

impl Default for PerturbationSpec {
    /// Gains and angles `10⁻² σ_e`, delays `10⁻⁸ σ_e` s, Dopplers `5 σ_e` Hz,
    /// σ_e uniform on [0, 50].
    fn default() -> Self {
        Self {
            scale_gain_re: 1e-2,
            scale_gain_im: 1e-2,
            scale_delay: 1e-8,
            scale_doppler: 5.0,
            scale_aoa: 1e-2,
            scale_aod: 1e-2,
            sigma_e: SigmaEDist::Uniform { lo: 0.0, hi: 50.0 },
        }
    }
}

impl PerturbationSpec {
    /// No perturbation at all.
    pub fn none() -> Self {
        Self {
            scale_gain_re: 0.0,
            scale_gain_im: 0.0,
            scale_delay: 0.0,
            scale_doppler: 0.0,
            scale_aoa: 0.0,
            scale_aod: 0.0,
            sigma_e: SigmaEDist::Fixed(0.0),
        }
    }

    pub fn scale(&self, kind: ParamKind) -> f64 {
        match kind {
            ParamKind::GainRe => self.scale_gain_re,
            ParamKind::GainIm => self.scale_gain_im,
            ParamKind::Delay => self.scale_delay,
            ParamKind::Doppler => self.scale_doppler,
            ParamKind::Aoa => self.scale_aoa,
            ParamKind::Aod => self.scale_aod,
        }
    }

    /// Same scales at a fixed σ_e.
    pub fn at_sigma_e(&self, sigma_e: f64) -> Self {
        Self { sigma_e: SigmaEDist::Fixed(sigma_e), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if ParamKind::ALL.iter().any(|&k| !(self.scale(k) >= 0.0 && self.scale(k).is_finite())) {
            return Err(Error::InvalidParameter("perturbation scales must be non-negative".into()));
        }
        match self.sigma_e {
            SigmaEDist::Fixed(v) if !(v >= 0.0 && v.is_finite()) => {
                Err(Error::InvalidParameter(format!("sigma_e must be non-negative, got {v}")))
            }
            SigmaEDist::Uniform { lo, hi } if !(lo >= 0.0 && lo <= hi && hi.is_finite()) => {
                Err(Error::InvalidParameter(format!("sigma_e range [{lo}, {hi}] is invalid")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticConfig {
    /// Samples per batch, `N`.
    pub samples: usize,
    pub seed: u64,
}

pub fn sample_sigma_e<R: Rng + ?Sized>(spec: &PerturbationSpec, rng: &mut R) -> f64 {
    match spec.sigma_e {
        SigmaEDist::Fixed(v) => v,
        SigmaEDist::Uniform { lo, hi } => rng.random_range(lo..=hi),
    }
}

/// Draws σ_e, then `ξ ~ N(ξ̂, diag((scale·σ_e)²))`. Perturbed values are
/// not clamped to physical ranges.
pub fn sample_params<R: Rng + ?Sized>(
    center: &MultipathParams,
    spec: &PerturbationSpec,
    rng: &mut R,
) -> (MultipathParams, f64) {
    let sigma_e = sample_sigma_e(spec, rng);
    let mut out = center.clone();
    for kind in ParamKind::ALL {
        let std = spec.scale(kind) * sigma_e;
        for path in out.paths_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *path.get_mut(kind) += std * z;
        }
    }
    (out, sigma_e)
}

/// `N` scenario copies at perturbed parameters; its objective is the sample
/// mean of their log-dets.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    problems: Vec<SensingProblem>,
    sigma_e: Vec<f64>,
}

impl SampleBatch {
    /// Draws `n` samples, redrawing any whose FIM is singular at `x`.
    pub fn draw<R: Rng + ?Sized>(
        nominal: &SensingProblem,
        spec: &PerturbationSpec,
        n: usize,
        x: &Waveform,
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        let mut problems = Vec::with_capacity(n);
        let mut sigma_e = Vec::with_capacity(n);
        for _ in 0..n {
            let mut accepted = None;
            for _ in 0..MAX_REDRAWS {
                let (params, s) = sample_params(nominal.params(), spec, rng);
                let problem = nominal.with_params(params)?;
                if problem.objective(x)?.is_finite() {
                    accepted = Some((problem, s));
                    break;
                }
            }
            let Some((problem, s)) = accepted else {
                let min_eigenvalue = nominal.fim(x)?.min_eigenvalue();
                return Err(Error::SingularFim { min_eigenvalue });
            };
            problems.push(problem);
            sigma_e.push(s);
        }
        Ok(Self { problems, sigma_e })
    }

    pub fn problems(&self) -> &[SensingProblem] {
        &self.problems
    }

    pub fn sigma_e(&self) -> &[f64] {
        &self.sigma_e
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }
}

impl DesignObjective for SampleBatch {
    fn value(&self, x: &Waveform) -> Result<f64> {
        let mut sum = 0.0;
        for p in &self.problems {
            let v = p.objective(x)?;
            if !v.is_finite() {
                return Ok(f64::NEG_INFINITY);
            }
            sum += v;
        }
        Ok(sum / self.problems.len() as f64)
    }

    fn value_and_gradient(&self, x: &Waveform) -> Result<Option<(f64, CMatrix)>> {
        let mut sum = 0.0;
        let mut grad = CMatrix::zeros(x.nrows(), x.ncols());
        for p in &self.problems {
            let Some((v, g)) = p.objective_and_gradient(x)? else {
                return Ok(None);
            };
            sum += v;
            grad += g;
        }
        let n = self.problems.len() as f64;
        Ok(Some((sum / n, grad.unscale(n))))
    }
}

/// Penalised sample-mean loss on a freshly drawn batch; `+∞` if the batch
/// objective is undefined.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_loss<R: Rng + ?Sized>(
    x: &Waveform,
    nominal: &SensingProblem,
    spec: &PerturbationSpec,
    samples: usize,
    rng: &mut R,
    constraints: &PowerConstraints,
    rho: f64,
    u: f64,
) -> Result<f64> {
    let batch = SampleBatch::draw(nominal, spec, samples, x, rng)?;
    PenalizedLoss::new(&batch, constraints, rho, u).value(x)
}

struct Resampler<'a> {
    nominal: &'a SensingProblem,
    spec: &'a PerturbationSpec,
    samples: usize,
    rng: ChaCha8Rng,
    batch: SampleBatch,
}

impl ObjectiveSource for Resampler<'_> {
    type Objective = SampleBatch;

    fn current(&self) -> &SampleBatch {
        &self.batch
    }

    fn refresh(&mut self, x: &Waveform) -> Result<()> {
        self.batch = SampleBatch::draw(self.nominal, self.spec, self.samples, x, &mut self.rng)?;
        Ok(())
    }

    fn sigma_e(&self) -> Vec<f64> {
        self.batch.sigma_e.clone()
    }
}

/// Robust design: exact-penalty Riemannian CG on the resampled sample-mean
/// objective.
pub fn srepms(
    nominal: &SensingProblem,
    spec: &PerturbationSpec,
    stoch: &StochasticConfig,
    constraints: &PowerConstraints,
    cfg: &OptimizerConfig,
    x0: &Waveform,
) -> Result<RunResult> {
    spec.validate()?;
    nominal.check_waveform(x0)?;
    let sphere = SphereSpec::for_power(nominal.geometry().n_tx, nominal.grid().len(), constraints.power)?;
    let mut rng = ChaCha8Rng::seed_from_u64(stoch.seed);
    let batch = SampleBatch::draw(nominal, spec, stoch.samples, x0, &mut rng)?;
    let mut source = Resampler { nominal, spec, samples: stoch.samples, rng, batch };
    penalty_cg(&mut source, &sphere, constraints, cfg, x0)
}

/// Parameter draws around `center`, shared across designs when comparing them.
pub fn draw_parameter_set<R: Rng + ?Sized>(
    center: &MultipathParams,
    spec: &PerturbationSpec,
    count: usize,
    rng: &mut R,
) -> Vec<MultipathParams> {
    (0..count).map(|_| sample_params(center, spec, rng).0).collect()
}

/// Mean `log det(Jᴴ𝓘J)` of waveform `x` over the given parameter draws.
pub fn mean_objective(x: &Waveform, nominal: &SensingProblem, draws: &[MultipathParams]) -> Result<f64> {
    let mut sum = 0.0;
    for params in draws {
        sum += nominal.with_params(params.clone())?.objective(x)?;
    }
    Ok(sum / draws.len() as f64)
}
