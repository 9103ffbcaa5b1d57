//! Beam-space MIMO-OFDM channel and its derivatives with respect to the
//! multipath parameters.
//!
//! Arrays are half-wavelength ULAs with a broadside reference: element `p`
//! (0-based) of the response at angle `ψ` is `exp(jπ p sin ψ)`. Vectorised
//! channels use the `a_T ⊗ a_R` Kronecker order, i.e. `h = vec(H)` for the
//! `n_rx × n_tx` matrix `H`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Error, Result};

/// OFDM numerology. The symbol duration is tied to the subcarrier spacing
/// (`T_s = 1/f_0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmNumerology {
    subcarrier_spacing: f64,
    symbol_duration: f64,
    carrier_frequency: f64,
}

impl OfdmNumerology {
    pub fn new(subcarrier_spacing: f64, carrier_frequency: f64) -> Result<Self> {
        if !(subcarrier_spacing > 0.0 && subcarrier_spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "subcarrier spacing must be positive, got {subcarrier_spacing}"
            )));
        }
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "carrier frequency must be positive, got {carrier_frequency}"
            )));
        }
        Ok(Self {
            subcarrier_spacing,
            symbol_duration: 1.0 / subcarrier_spacing,
            carrier_frequency,
        })
    }

    /// `f_0` in Hz.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.subcarrier_spacing
    }

    /// `T_s` in seconds.
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_duration
    }

    /// `f_c` in Hz.
    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_tx: usize,
    pub n_rx: usize,
}

impl ArrayGeometry {
    pub fn new(n_tx: usize, n_rx: usize) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 {
            return Err(Error::InvalidParameter(format!(
                "antenna counts must be at least 1, got n_tx={n_tx}, n_rx={n_rx}"
            )));
        }
        Ok(Self { n_tx, n_rx })
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub gain_re: f64,
    pub gain_im: f64,
    /// Delay in seconds.
    pub delay: f64,
    /// Doppler shift in Hz.
    pub doppler: f64,
    /// Angle of arrival in radians.
    pub aoa: f64,
    /// Angle of departure in radians.
    pub aod: f64,
}

impl PathParams {
    pub fn gain(&self) -> Complex64 {
        Complex64::new(self.gain_re, self.gain_im)
    }

    /// Checks the physical ranges of a nominal path (non-negative delay,
    /// angles strictly inside (−π/2, π/2)). Perturbed samples are allowed to
    /// leave these ranges and are never validated.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.gain_re, self.gain_im, self.delay, self.doppler, self.aoa, self.aod]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("path parameters must be finite".into()));
        }
        if self.delay < 0.0 {
            return Err(Error::InvalidParameter(format!("negative delay {}", self.delay)));
        }
        for (name, angle) in [("aoa", self.aoa), ("aod", self.aod)] {
            if angle.abs() >= FRAC_PI_2 {
                return Err(Error::InvalidParameter(format!(
                    "{name} {angle} outside (-pi/2, pi/2)"
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, kind: ParamKind) -> f64 {
        match kind {
            ParamKind::GainRe => self.gain_re,
            ParamKind::GainIm => self.gain_im,
            ParamKind::Delay => self.delay,
            ParamKind::Doppler => self.doppler,
            ParamKind::Aoa => self.aoa,
            ParamKind::Aod => self.aod,
        }
    }

    pub fn get_mut(&mut self, kind: ParamKind) -> &mut f64 {
        match kind {
            ParamKind::GainRe => &mut self.gain_re,
            ParamKind::GainIm => &mut self.gain_im,
            ParamKind::Delay => &mut self.delay,
            ParamKind::Doppler => &mut self.doppler,
            ParamKind::Aoa => &mut self.aoa,
            ParamKind::Aod => &mut self.aod,
        }
    }
}

/// Parameter types in canonical block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamKind {
    GainRe,
    GainIm,
    Delay,
    Doppler,
    Aoa,
    Aod,
}

impl ParamKind {
    pub const ALL: [ParamKind; 6] = [
        ParamKind::GainRe,
        ParamKind::GainIm,
        ParamKind::Delay,
        ParamKind::Doppler,
        ParamKind::Aoa,
        ParamKind::Aod,
    ];

    pub fn block(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamKind::GainRe => "gain_re",
            ParamKind::GainIm => "gain_im",
            ParamKind::Delay => "delay",
            ParamKind::Doppler => "doppler",
            ParamKind::Aoa => "aoa",
            ParamKind::Aod => "aod",
        }
    }
}

/// The full parameter set of an `L`-path channel.
///
/// Flattening is parameter-type major: all real gains, then all imaginary
/// gains, delays, Dopplers, AoAs and AoDs, each block ordered by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathParams {
    paths: Vec<PathParams>,
}

impl MultipathParams {
    pub fn new(paths: Vec<PathParams>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidParameter("at least one path is required".into()));
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[PathParams] {
        &self.paths
    }

    pub fn paths_mut(&mut self) -> &mut [PathParams] {
        &mut self.paths
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    /// `6L`.
    pub fn num_params(&self) -> usize {
        6 * self.paths.len()
    }

    /// Position of parameter `kind` of path `l` in the flattened vector.
    pub fn index(&self, kind: ParamKind, path: usize) -> usize {
        kind.block() * self.paths.len() + path
    }

    /// Inverse of [`index`](Self::index).
    pub fn locate(&self, index: usize) -> (ParamKind, usize) {
        let l = self.paths.len();
        (ParamKind::ALL[index / l], index % l)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        ParamKind::ALL
            .iter()
            .flat_map(|&k| self.paths.iter().map(move |p| p.get(k)))
            .collect()
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(6) {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected: 6 * (values.len() / 6).max(1),
                actual: values.len(),
            });
        }
        let l = values.len() / 6;
        let paths = (0..l)
            .map(|i| {
                let mut p = PathParams {
                    gain_re: 0.0,
                    gain_im: 0.0,
                    delay: 0.0,
                    doppler: 0.0,
                    aoa: 0.0,
                    aod: 0.0,
                };
                for k in ParamKind::ALL {
                    *p.get_mut(k) = values[k.block() * l + i];
                }
                p
            })
            .collect();
        Self::new(paths)
    }
}

/// A resource element: subcarrier `n`, OFDM symbol `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceElement {
    pub subcarrier: usize,
    pub symbol: usize,
}

impl ResourceElement {
    pub fn new(subcarrier: usize, symbol: usize) -> Self {
        Self { subcarrier, symbol }
    }
}

/// ULA response `a(ψ)`, entry `p` equal to `exp(jπ p sin ψ)`.
pub fn steering_vector(angle: f64, count: usize) -> CVector {
    let s = PI * angle.sin();
    CVector::from_fn(count, |p, _| Complex64::from_polar(1.0, s * p as f64))
}

/// `∂a(ψ)/∂ψ`, entry `p` equal to `jπ p cos ψ · exp(jπ p sin ψ)`.
pub fn steering_derivative(angle: f64, count: usize) -> CVector {
    let s = PI * angle.sin();
    let c = PI * angle.cos();
    CVector::from_fn(count, |p, _| {
        let p = p as f64;
        Complex64::new(0.0, c * p) * Complex64::from_polar(1.0, s * p)
    })
}

/// Delay/Doppler phase `ω = exp(−j2π n f_0 τ) · exp(j2π f_D k T_s)`.
pub fn phase_factor(path: &PathParams, re: ResourceElement, num: &OfdmNumerology) -> Complex64 {
    let delay_phase = -2.0 * PI * re.subcarrier as f64 * num.subcarrier_spacing() * path.delay;
    let doppler_phase = 2.0 * PI * path.doppler * re.symbol as f64 * num.symbol_duration();
    Complex64::from_polar(1.0, delay_phase + doppler_phase)
}

/// `∂ω/∂τ = −j2π n f_0 ω`.
pub(crate) fn delay_rate(omega: Complex64, re: ResourceElement, num: &OfdmNumerology) -> Complex64 {
    Complex64::new(0.0, -2.0 * PI * re.subcarrier as f64 * num.subcarrier_spacing()) * omega
}

/// `∂ω/∂f_D = j2π k T_s ω`.
pub(crate) fn doppler_rate(omega: Complex64, re: ResourceElement, num: &OfdmNumerology) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * re.symbol as f64 * num.symbol_duration()) * omega
}

/// Kronecker product of two column vectors, `u ⊗ v`.
fn kron_vec(u: &CVector, v: &CVector) -> CVector {
    let n = v.len();
    CVector::from_fn(u.len() * n, |i, _| u[i / n] * v[i % n])
}

/// The `n_rx × n_tx` channel matrix `H = Σ_l b_l ω_l a_R(φ_l) a_T(θ_l)ᵀ`.
pub fn channel_matrix(
    params: &MultipathParams,
    re: ResourceElement,
    num: &OfdmNumerology,
    geom: &ArrayGeometry,
) -> CMatrix {
    let mut h = CMatrix::zeros(geom.n_rx, geom.n_tx);
    for path in params.paths() {
        let coeff = path.gain() * phase_factor(path, re, num);
        let a_r = steering_vector(path.aoa, geom.n_rx);
        let a_t = steering_vector(path.aod, geom.n_tx);
        h += (a_r * a_t.transpose()) * coeff;
    }
    h
}

/// Vectorised channel `h = Σ_l b_l ω_l a_T(θ_l) ⊗ a_R(φ_l)` of length `n_tx·n_rx`.
pub fn channel_vector(
    params: &MultipathParams,
    re: ResourceElement,
    num: &OfdmNumerology,
    geom: &ArrayGeometry,
) -> CVector {
    let mut h = CVector::zeros(geom.n_tx * geom.n_rx);
    for path in params.paths() {
        let coeff = path.gain() * phase_factor(path, re, num);
        let a_r = steering_vector(path.aoa, geom.n_rx);
        let a_t = steering_vector(path.aod, geom.n_tx);
        h.axpy(coeff, &kron_vec(&a_t, &a_r), Complex64::new(1.0, 0.0));
    }
    h
}

/// Jacobian `∂h/∂ξ` (`n_tx·n_rx × 6L`), one column per parameter in
/// canonical order, assembled path by path from the per-parameter
/// derivative expressions.
pub fn channel_derivatives(
    params: &MultipathParams,
    re: ResourceElement,
    num: &OfdmNumerology,
    geom: &ArrayGeometry,
) -> CMatrix {
    let mut jac = CMatrix::zeros(geom.n_tx * geom.n_rx, params.num_params());
    let j = Complex64::new(0.0, 1.0);
    for (l, path) in params.paths().iter().enumerate() {
        let omega = phase_factor(path, re, num);
        let b = path.gain();
        let a_r = steering_vector(path.aoa, geom.n_rx);
        let a_t = steering_vector(path.aod, geom.n_tx);
        let d_r = steering_derivative(path.aoa, geom.n_rx);
        let d_t = steering_derivative(path.aod, geom.n_tx);
        let base = kron_vec(&a_t, &a_r);

        let columns = [
            (ParamKind::GainRe, &base * omega),
            (ParamKind::GainIm, &base * (j * omega)),
            (ParamKind::Delay, &base * (b * delay_rate(omega, re, num))),
            (ParamKind::Doppler, &base * (b * doppler_rate(omega, re, num))),
            (ParamKind::Aoa, kron_vec(&a_t, &d_r) * (b * omega)),
            (ParamKind::Aod, kron_vec(&d_t, &a_r) * (b * omega)),
        ];
        for (kind, col) in columns {
            jac.set_column(params.index(kind, l), &col);
        }
    }
    jac
}
