use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DesignObjective, SphereSpec};
use crate::{column_powers, CMatrix, Error, Result, Waveform};

/// Linear-quadratic smoothing of `max(0, x)`:
/// `0` for `x ≤ 0`, `x²/2u` on `[0, u]`, `x − u/2` beyond.
pub fn penalty_lq(x: f64, u: f64) -> f64 {
    debug_assert!(u > 0.0);
    if x <= 0.0 {
        0.0
    } else if x <= u {
        x * x / (2.0 * u)
    } else {
        x - u / 2.0
    }
}

pub fn penalty_lq_derivative(x: f64, u: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= u {
        x / u
    } else {
        1.0
    }
}

/// Average power `P` and per-symbol caps `P_m = α·P` (`α` may be `∞`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConstraints {
    pub power: f64,
    pub alpha: f64,
    pub caps: Vec<f64>,
}

impl PowerConstraints {
    pub fn new(power: f64, alpha: f64, m: usize) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidParameter(format!("power must be positive, got {power}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { power, alpha, caps: vec![alpha * power; m] })
    }

    pub fn unconstrained(power: f64, m: usize) -> Result<Self> {
        Self::new(power, f64::INFINITY, m)
    }

    pub fn is_active(&self) -> bool {
        self.caps.iter().any(|c| c.is_finite())
    }

    /// `max_m (‖x_m‖² − P_m)`.
    pub fn max_violation(&self, x: &Waveform) -> f64 {
        column_powers(x)
            .iter()
            .zip(&self.caps)
            .map(|(p, c)| p - c)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `𝓛(X) = −f(X) + ρ Σ_m p_u(‖x_m‖² − P_m)` for a design objective `f`.
pub struct PenalizedLoss<'a, O: ?Sized> {
    pub objective: &'a O,
    pub constraints: &'a PowerConstraints,
    pub rho: f64,
    pub u: f64,
}

impl<'a, O: DesignObjective + ?Sized> PenalizedLoss<'a, O> {
    pub fn new(objective: &'a O, constraints: &'a PowerConstraints, rho: f64, u: f64) -> Self {
        Self { objective, constraints, rho, u }
    }

    pub fn penalty(&self, x: &Waveform) -> f64 {
        if !self.constraints.is_active() {
            return 0.0;
        }
        let sum: f64 = column_powers(x)
            .iter()
            .zip(&self.constraints.caps)
            .map(|(p, c)| penalty_lq(p - c, self.u))
            .sum();
        self.rho * sum
    }

    fn penalty_gradient(&self, x: &Waveform) -> CMatrix {
        let mut g = CMatrix::zeros(x.nrows(), x.ncols());
        if !self.constraints.is_active() {
            return g;
        }
        for (m, (p, c)) in column_powers(x).iter().zip(&self.constraints.caps).enumerate() {
            let slope = self.rho * penalty_lq_derivative(p - c, self.u);
            if slope != 0.0 {
                // ∇‖x‖² = 2x under Re⟨·,·⟩
                g.set_column(m, &(x.column(m) * Complex64::new(2.0 * slope, 0.0)));
            }
        }
        g
    }

    /// Loss value, `+∞` when the objective is undefined.
    pub fn value(&self, x: &Waveform) -> Result<f64> {
        let f = self.objective.value(x)?;
        if !f.is_finite() {
            return Ok(f64::INFINITY);
        }
        Ok(-f + self.penalty(x))
    }

    /// Loss, objective value and Euclidean gradient of the loss.
    pub fn evaluate(&self, x: &Waveform) -> Result<Option<LossEval>> {
        let Some((f, grad_f)) = self.objective.value_and_gradient(x)? else {
            return Ok(None);
        };
        let loss = -f + self.penalty(x);
        let gradient = self.penalty_gradient(x) - grad_f;
        Ok(Some(LossEval { loss, objective: f, gradient }))
    }

    /// Loss, objective and Riemannian gradient on `sphere`.
    pub fn riemannian(&self, sphere: &SphereSpec, x: &Waveform) -> Result<Option<LossEval>> {
        Ok(self.evaluate(x)?.map(|mut e| {
            e.gradient = sphere.project_tangent(x, &e.gradient);
            e
        }))
    }
}

#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub objective: f64,
    pub gradient: CMatrix,
}
