#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Fisher-information-driven sensing waveform design for MIMO-OFDM channels.
//!
//! The crate builds the beam-space multipath channel of a MIMO-OFDM link,
//! assembles the Fisher Information Matrix (FIM) of its multipath parameters
//! (gains, delays, Doppler shifts, angles of arrival and departure) for a
//! given pilot waveform, and designs waveforms that maximise the weighted
//! log-determinant of the FIM on the total-power hypersphere:
//!
//! * [`optim::repms`] solves the nominal design with per-symbol power caps
//!   through a Riemannian exact-penalty method with smoothing.
//! * [`stochastic::srepms`] solves the robust design, where the parameters
//!   are only known up to Gaussian perturbations, by resampling a Monte
//!   Carlo batch every iteration.
//! * [`crlb`] turns a FIM into per-parameter Cramér-Rao bounds.
//! * [`experiments`] reproduces the evaluation protocols (feasibility,
//!   alpha sweep, power map, robustness, CRLB curves) and backs the
//!   `crb-waveform` binary.

pub mod channel;
pub mod crlb;
pub mod error;
pub mod experiments;
pub mod fim;
pub mod optim;
pub mod products;
pub mod scenario;
pub mod stochastic;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;
/// Transmit waveform: one column of `n_tx` symbols per allocated resource element.
pub type Waveform = CMatrix;

/// Real inner product `Re tr(Aᴴ B)` used as the metric on waveform space.
pub fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Squared Frobenius norm.
pub fn frobenius_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Squared power of every column, `‖x_m‖²`.
pub fn column_powers(x: &CMatrix) -> Vec<f64> {
    x.column_iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}
