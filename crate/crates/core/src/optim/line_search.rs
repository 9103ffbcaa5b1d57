use serde::{Deserialize, Serialize};

use super::SphereSpec;
use crate::{real_inner, CMatrix, Result, Waveform};

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmijoConfig {
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        Self { initial_step: 1.0, contraction: 0.5, sufficient_decrease: 1e-4, max_backtracks: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    /// Accepted step, `0` when stalled.
    pub step: f64,
    /// Accepted point (`x` itself when stalled).
    pub point: Waveform,
    /// Loss at the accepted point.
    pub loss: f64,
    pub stalled: bool,
    pub evaluations: usize,
}

/// Backtracks from `t0` until
/// `loss(retract(x, dir, t)) ≤ loss(x) + σ t Re⟨grad, dir⟩`.
///
/// Trial points where `loss` is `+∞` or the retraction degenerates are
/// rejected like any other failed trial.
#[allow(clippy::too_many_arguments)]
pub fn line_search<F>(
    sphere: &SphereSpec,
    cfg: &ArmijoConfig,
    x: &Waveform,
    dir: &CMatrix,
    loss_at_x: f64,
    grad_at_x: &CMatrix,
    t0: f64,
    mut loss: F,
) -> Result<LineSearchOutcome>
where
    F: FnMut(&Waveform) -> Result<f64>,
{
    let slope = real_inner(grad_at_x, dir);
    let mut t = t0;
    let mut evaluations = 0;
    if slope < 0.0 {
        for _ in 0..=cfg.max_backtracks {
            if let Ok(trial) = sphere.retract(x, dir, t) {
                evaluations += 1;
                let value = loss(&trial)?;
                if value.is_finite() && value <= loss_at_x + cfg.sufficient_decrease * t * slope {
                    return Ok(LineSearchOutcome { step: t, point: trial, loss: value, stalled: false, evaluations });
                }
            }
            t *= cfg.contraction;
        }
    }
    Ok(LineSearchOutcome { step: 0.0, point: x.clone(), loss: loss_at_x, stalled: true, evaluations })
}
