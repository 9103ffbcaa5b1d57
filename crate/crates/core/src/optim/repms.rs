use serde::{Deserialize, Serialize};

use super::{cg_direction, line_search, ArmijoConfig, CgRule, DesignObjective, PenalizedLoss, PowerConstraints, SphereSpec};
use crate::fim::SensingProblem;
use crate::{frobenius_sq, real_inner, Error, Result, Waveform};

/// Penalty schedule, stopping rule and line-search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub rho0: f64,
    pub theta_rho: f64,
    pub rho_max: f64,
    pub u0: f64,
    pub theta_u: f64,
    pub u_min: f64,
    pub max_iter: usize,
    /// Stop once `‖grad 𝓛‖ ≤ grad_tol·√(MP)`; `0` disables the test.
    pub grad_tol: f64,
    pub cg_rule: CgRule,
    pub line_search: ArmijoConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let (u0, u_min) = (1.0, 1e-6);
        Self {
            rho0: 1.0,
            theta_rho: 2.0,
            rho_max: 2f64.powi(20),
            u0,
            theta_u: (u_min / u0).powf(1.0 / 30.0),
            u_min,
            max_iter: 500,
            grad_tol: 1e-6,
            cg_rule: CgRule::default(),
            line_search: ArmijoConfig::default(),
        }
    }
}

impl OptimizerConfig {
    /// Defaults for the stochastic variant: a fixed budget of 300
    /// iterations, no gradient-norm stopping.
    pub fn stochastic_default() -> Self {
        Self { max_iter: 300, grad_tol: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("optimizer: {what}")));
        if !(self.rho0 > 0.0) || !(self.rho_max >= self.rho0) {
            return bad("need 0 < rho0 <= rho_max");
        }
        if !(self.theta_rho > 1.0) {
            return bad("theta_rho must exceed 1");
        }
        if !(self.u0 > 0.0) || !(self.u_min > 0.0) || self.u_min > self.u0 {
            return bad("need 0 < u_min <= u0");
        }
        if !(self.theta_u > 0.0 && self.theta_u < 1.0) {
            return bad("theta_u must lie in (0, 1)");
        }
        if !(self.grad_tol >= 0.0) {
            return bad("grad_tol must be non-negative");
        }
        let ls = &self.line_search;
        if !(ls.initial_step > 0.0) || !(ls.contraction > 0.0 && ls.contraction < 1.0) || !(ls.sufficient_decrease > 0.0 && ls.sufficient_decrease < 1.0) {
            return bad("line search needs initial_step > 0 and contraction, sufficient_decrease in (0, 1)");
        }
        Ok(())
    }

    fn is_tight(&self, rho: f64, u: f64) -> bool {
        rho >= self.rho_max && u <= self.u_min
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub loss: f64,
    /// `log det(Jᴴ𝓘J)`; the batch mean for stochastic runs.
    pub objective: f64,
    pub max_violation: f64,
    pub grad_norm: f64,
    pub rho: f64,
    pub u: f64,
    /// Step accepted on the way into this iterate.
    pub step: f64,
    /// `‖X‖_F² − MP`.
    pub power_error: f64,
    /// `|Re⟨X, grad⟩| / (‖X‖‖grad‖)`.
    pub tangency: f64,
    /// σ_e of every sample in the batch, empty for deterministic runs.
    pub sigma_e: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    Stalled,
    SingularFim,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub x: Waveform,
    pub trace: Vec<IterationRecord>,
    pub stop: StopReason,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.iter)
    }

    pub fn final_record(&self) -> &IterationRecord {
        self.trace.last().expect("trace holds the initial point")
    }

    /// Iteration at which the FIM became singular, if it did.
    pub fn failed_iteration(&self) -> Option<usize> {
        if self.stop != StopReason::SingularFim {
            return None;
        }
        let last = self.final_record();
        Some(if last.loss.is_infinite() { last.iter } else { last.iter + 1 })
    }
}

/// Supplies the objective the driver works on. Deterministic sources keep
/// one objective; stochastic ones redraw their sample batch on `refresh`.
pub trait ObjectiveSource {
    type Objective: DesignObjective + ?Sized;

    fn current(&self) -> &Self::Objective;

    /// Called once per iteration, right after the retraction.
    fn refresh(&mut self, x: &Waveform) -> Result<()>;

    /// σ_e values behind the current objective.
    fn sigma_e(&self) -> Vec<f64> {
        Vec::new()
    }
}

pub struct FixedObjective<'a, O: ?Sized>(pub &'a O);

impl<O: DesignObjective + ?Sized> ObjectiveSource for FixedObjective<'_, O> {
    type Objective = O;

    fn current(&self) -> &O {
        self.0
    }

    fn refresh(&mut self, _x: &Waveform) -> Result<()> {
        Ok(())
    }
}

/// Exact-penalty Riemannian conjugate gradient on `sphere`.
///
/// Every iteration runs an Armijo search along the current direction,
/// retracts, lets the source refresh, tightens `ρ ← min(θ_ρ ρ, ρ_max)` and
/// `u ← max(θ_u u, u_min)`, then builds the next direction from the
/// gradient at the new point and parameters.
pub fn penalty_cg<S: ObjectiveSource>(
    source: &mut S,
    sphere: &SphereSpec,
    constraints: &PowerConstraints,
    cfg: &OptimizerConfig,
    x0: &Waveform,
) -> Result<RunResult> {
    cfg.validate()?;
    if x0.shape() != (sphere.n_tx, sphere.m) {
        return Err(Error::DimensionMismatch { context: "initial waveform columns", expected: sphere.m, actual: x0.ncols() });
    }
    if constraints.caps.len() != sphere.m {
        return Err(Error::DimensionMismatch { context: "power caps", expected: sphere.m, actual: constraints.caps.len() });
    }
    if sphere.power_error(x0).abs() > 1e-9 * sphere.radius_sq {
        return Err(Error::InvalidParameter("initial waveform is not on the power sphere".into()));
    }

    let tol = cfg.grad_tol * sphere.radius_sq.sqrt();
    let mut x = x0.clone();
    let (mut rho, mut u) = (cfg.rho0, cfg.u0);
    let mut trace = Vec::new();

    let Some(mut cur) = PenalizedLoss::new(source.current(), constraints, rho, u).riemannian(sphere, &x)? else {
        let singular = super::penalty::LossEval {
            loss: f64::INFINITY,
            objective: f64::NEG_INFINITY,
            gradient: Waveform::zeros(sphere.n_tx, sphere.m),
        };
        trace.push(record(0, &x, sphere, constraints, &singular, rho, u, 0.0, source.sigma_e()));
        return Ok(RunResult { x, trace, stop: StopReason::SingularFim });
    };
    trace.push(record(0, &x, sphere, constraints, &cur, rho, u, 0.0, source.sigma_e()));
    let (mut dir, mut steepest) = (-&cur.gradient, true);
    let mut t_init = cfg.line_search.initial_step;

    let mut k = 0;
    let stop = loop {
        let grad_norm = frobenius_sq(&cur.gradient).sqrt();
        if tol > 0.0 && grad_norm <= tol {
            break StopReason::Converged;
        }
        if k >= cfg.max_iter {
            break StopReason::MaxIterations;
        }

        let ls = {
            let loss = PenalizedLoss::new(source.current(), constraints, rho, u);
            line_search(sphere, &cfg.line_search, &x, &dir, cur.loss, &cur.gradient, t_init, |y| loss.value(y))?
        };
        if ls.stalled && steepest && cfg.is_tight(rho, u) {
            break StopReason::Stalled;
        }
        if ls.stalled {
            t_init = cfg.line_search.initial_step;
        } else {
            x = ls.point;
            t_init = 2.0 * ls.step;
        }

        match source.refresh(&x) {
            Err(Error::SingularFim { .. }) => break StopReason::SingularFim,
            other => other?,
        }
        rho = (cfg.theta_rho * rho).min(cfg.rho_max);
        u = (cfg.theta_u * u).max(cfg.u_min);
        k += 1;

        let Some(next) = PenalizedLoss::new(source.current(), constraints, rho, u).riemannian(sphere, &x)? else {
            break StopReason::SingularFim;
        };
        (dir, steepest) = if ls.stalled {
            (-&next.gradient, true)
        } else {
            cg_direction(sphere, cfg.cg_rule, Some((&dir, &cur.gradient)), &next.gradient, &x)
        };
        cur = next;
        trace.push(record(k, &x, sphere, constraints, &cur, rho, u, ls.step, source.sigma_e()));
    };

    Ok(RunResult { x, trace, stop })
}

#[allow(clippy::too_many_arguments)]
fn record(
    iter: usize,
    x: &Waveform,
    sphere: &SphereSpec,
    constraints: &PowerConstraints,
    eval: &super::penalty::LossEval,
    rho: f64,
    u: f64,
    step: f64,
    sigma_e: Vec<f64>,
) -> IterationRecord {
    let grad_norm = frobenius_sq(&eval.gradient).sqrt();
    let denom = frobenius_sq(x).sqrt() * grad_norm;
    let tangency = if denom > 0.0 { real_inner(x, &eval.gradient).abs() / denom } else { 0.0 };
    IterationRecord {
        iter,
        loss: eval.loss,
        objective: eval.objective,
        max_violation: constraints.max_violation(x),
        grad_norm,
        rho,
        u,
        step,
        power_error: sphere.power_error(x),
        tangency,
        sigma_e,
    }
}

/// Optimal design for a fully known scenario.
pub fn repms(
    problem: &SensingProblem,
    constraints: &PowerConstraints,
    cfg: &OptimizerConfig,
    x0: &Waveform,
) -> Result<RunResult> {
    let sphere = SphereSpec::for_power(problem.geometry().n_tx, problem.grid().len(), constraints.power)?;
    penalty_cg(&mut FixedObjective(problem), &sphere, constraints, cfg, x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_matches_reference_settings() {
        let c = OptimizerConfig::default();
        assert_eq!(c.rho_max, 1048576.0);
        assert!((c.theta_u.powi(30) - 1e-6).abs() < 1e-15);
        assert!(c.validate().is_ok());
        assert!(OptimizerConfig { theta_rho: 1.0, ..c.clone() }.validate().is_err());
        assert!(OptimizerConfig { theta_u: 1.0, ..c.clone() }.validate().is_err());
        assert!(OptimizerConfig { u_min: 2.0, ..c }.validate().is_err());
    }
}
