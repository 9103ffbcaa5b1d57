//! Optimisation on the total-power hypersphere.
//!
//! [`repms`] maximises `log det(Jᴴ 𝓘 J)` subject to `‖X‖_F² = MP` and the
//! per-symbol caps `‖x_m‖² ≤ P_m` by minimising the smoothed exact-penalty
//! loss with Riemannian conjugate gradients, tightening the penalty weight
//! and the smoothing factor after every step.

mod cg;
mod line_search;
mod penalty;
mod repms;
mod sphere;

pub use cg::{cg_direction, CgRule};
pub use line_search::{line_search, ArmijoConfig, LineSearchOutcome};
pub use penalty::{penalty_lq, penalty_lq_derivative, PenalizedLoss, PowerConstraints};
pub use repms::{
    penalty_cg, repms, FixedObjective, IterationRecord, ObjectiveSource, OptimizerConfig,
    RunResult, StopReason,
};
pub use sphere::SphereSpec;

use crate::fim::SensingProblem;
use crate::{CMatrix, Result, Waveform};

/// A smooth design objective to be maximised over waveforms.
pub trait DesignObjective {
    /// Objective value, `−∞` where it is undefined (singular information).
    fn value(&self, x: &Waveform) -> Result<f64>;

    /// Value and Euclidean gradient under `Re tr(Aᴴ B)`, `None` where the
    /// value is `−∞`.
    fn value_and_gradient(&self, x: &Waveform) -> Result<Option<(f64, CMatrix)>>;
}

impl DesignObjective for SensingProblem {
    fn value(&self, x: &Waveform) -> Result<f64> {
        self.objective(x)
    }

    fn value_and_gradient(&self, x: &Waveform) -> Result<Option<(f64, CMatrix)>> {
        self.objective_and_gradient(x)
    }
}
