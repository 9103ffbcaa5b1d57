//! Fisher information of the multipath parameters for a given waveform.
//!
//! Two assemblies are provided. [`fim_closed`] uses the factorisation
//! `∂h_m/∂ξ = (T * R) Λ_m`, which collapses the per-RE quadratic forms to
//! `Re{(Σ_m 2/σ_m² Λ_mᴴ Tᴴ x_m* x_mᵀ T Λ_m) ∘ (Rᴴ R)}`. [`fim_elementwise`]
//! evaluates `Σ_m 2/σ_m² Re[∂h_iᴴ (x_m* x_mᵀ ⊗ I) ∂h_j]` directly from the
//! channel Jacobian and is kept as an independent check.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{
    channel_derivatives, delay_rate, doppler_rate, phase_factor, steering_derivative,
    steering_vector, ArrayGeometry, MultipathParams, OfdmNumerology, ParamKind, ResourceElement,
};
use crate::{products, CMatrix, CVector, Error, Result, Waveform};

/// The allocated resource elements and their noise variances. Element order
/// fixes the column order of the waveform matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceGrid {
    elements: Vec<ResourceElement>,
    noise_var: Vec<f64>,
}

impl ResourceGrid {
    pub fn new(elements: Vec<ResourceElement>, noise_var: Vec<f64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParameter("resource grid is empty".into()));
        }
        if elements.len() != noise_var.len() {
            return Err(Error::DimensionMismatch {
                context: "noise variances",
                expected: elements.len(),
                actual: noise_var.len(),
            });
        }
        if let Some(bad) = noise_var.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("noise variance must be positive, got {bad}")));
        }
        Ok(Self { elements, noise_var })
    }

    pub fn uniform(elements: Vec<ResourceElement>, noise_var: f64) -> Result<Self> {
        let n = elements.len();
        Self::new(elements, vec![noise_var; n])
    }

    /// Rectangular region, subcarrier-major: `(0,0), (0,1), …, (0,S-1), (1,0), …`.
    pub fn rectangular(subcarriers: usize, symbols: usize, noise_var: f64) -> Result<Self> {
        let elements = (0..subcarriers)
            .flat_map(|n| (0..symbols).map(move |k| ResourceElement::new(n, k)))
            .collect();
        Self::uniform(elements, noise_var)
    }

    pub fn elements(&self) -> &[ResourceElement] {
        &self.elements
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    /// `M`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Diagonal weighting `J` applied as `Jᴴ 𝓘 J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    diag: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if let Some(bad) = diag.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter(format!("weights must be positive, got {bad}")));
        }
        Ok(Self { diag })
    }

    pub fn identity(n: usize) -> Self {
        Self { diag: vec![1.0; n] }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn congruence(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| self.diag[i] * m[(i, j)] * self.diag[j])
    }
}

/// Real symmetric `6L × 6L` Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Fim(DMatrix<f64>);

impl Fim {
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    /// `‖I − Iᵀ‖_max`.
    pub fn asymmetry(&self) -> f64 {
        (&self.0 - self.0.transpose()).amax()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.0 + self.0.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// Diagonal of `Λ_m` in canonical order: `ω`, `jω`, `b·∂ω/∂τ`, `b·∂ω/∂f_D`,
/// `bω`, `bω` (one block of `L` entries each).
pub fn lambda_matrix(
    params: &MultipathParams,
    re: ResourceElement,
    num: &OfdmNumerology,
) -> Vec<Complex64> {
    let l = params.num_paths();
    let mut diag = vec![Complex64::new(0.0, 0.0); 6 * l];
    for (i, path) in params.paths().iter().enumerate() {
        let omega = phase_factor(path, re, num);
        let b = path.gain();
        diag[params.index(ParamKind::GainRe, i)] = omega;
        diag[params.index(ParamKind::GainIm, i)] = Complex64::new(0.0, 1.0) * omega;
        diag[params.index(ParamKind::Delay, i)] = b * delay_rate(omega, re, num);
        diag[params.index(ParamKind::Doppler, i)] = b * doppler_rate(omega, re, num);
        diag[params.index(ParamKind::Aoa, i)] = b * omega;
        diag[params.index(ParamKind::Aod, i)] = b * omega;
    }
    diag
}

/// Steering blocks `T = [A_T A_T A_T A_T A_T D_T]` and
/// `R = [A_R A_R A_R A_R D_R A_R]`.
pub fn tr_matrices(params: &MultipathParams, geom: &ArrayGeometry) -> (CMatrix, CMatrix) {
    let l = params.num_paths();
    let mut t = CMatrix::zeros(geom.n_tx, 6 * l);
    let mut r = CMatrix::zeros(geom.n_rx, 6 * l);
    for (i, path) in params.paths().iter().enumerate() {
        let a_t = steering_vector(path.aod, geom.n_tx);
        let d_t = steering_derivative(path.aod, geom.n_tx);
        let a_r = steering_vector(path.aoa, geom.n_rx);
        let d_r = steering_derivative(path.aoa, geom.n_rx);
        for kind in ParamKind::ALL {
            let col = params.index(kind, i);
            t.set_column(col, if kind == ParamKind::Aod { &d_t } else { &a_t });
            r.set_column(col, if kind == ParamKind::Aoa { &d_r } else { &a_r });
        }
    }
    (t, r)
}

fn check_columns(x: &Waveform, grid: &ResourceGrid, geom: &ArrayGeometry) -> Result<()> {
    if x.ncols() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "waveform columns vs resource elements",
            expected: grid.len(),
            actual: x.ncols(),
        });
    }
    if x.nrows() != geom.n_tx {
        return Err(Error::DimensionMismatch {
            context: "waveform rows vs transmit antennas",
            expected: geom.n_tx,
            actual: x.nrows(),
        });
    }
    Ok(())
}

/// Everything about a sensing scenario that does not depend on the waveform,
/// with the per-RE factors `B_m = Λ_m Tᵀ` and `Rᴴ R` precomputed.
#[derive(Debug, Clone)]
pub struct SensingProblem {
    params: MultipathParams,
    grid: ResourceGrid,
    numerology: OfdmNumerology,
    geometry: ArrayGeometry,
    weight: WeightMatrix,
    /// `B_m = Λ_m Tᵀ`, `6L × n_tx`, one per RE.
    sensitivities: Vec<CMatrix>,
    /// `Rᴴ R`.
    rx_gram: CMatrix,
}

impl SensingProblem {
    pub fn new(
        params: MultipathParams,
        grid: ResourceGrid,
        numerology: OfdmNumerology,
        geometry: ArrayGeometry,
        weight: WeightMatrix,
    ) -> Result<Self> {
        if weight.len() != params.num_params() {
            return Err(Error::DimensionMismatch {
                context: "weight matrix",
                expected: params.num_params(),
                actual: weight.len(),
            });
        }
        let (t, r) = tr_matrices(&params, &geometry);
        let t_tr = t.transpose();
        let sensitivities = grid
            .elements()
            .iter()
            .map(|&re| {
                let lambda = lambda_matrix(&params, re, &numerology);
                let mut b = t_tr.clone();
                for (mut row, &s) in b.row_iter_mut().zip(&lambda) {
                    row *= s;
                }
                b
            })
            .collect();
        let rx_gram = r.adjoint() * &r;
        Ok(Self { params, grid, numerology, geometry, weight, sensitivities, rx_gram })
    }

    /// Same scenario with a different parameter vector.
    pub fn with_params(&self, params: MultipathParams) -> Result<Self> {
        Self::new(params, self.grid.clone(), self.numerology, self.geometry, self.weight.clone())
    }

    pub fn params(&self) -> &MultipathParams {
        &self.params
    }

    pub fn grid(&self) -> &ResourceGrid {
        &self.grid
    }

    pub fn numerology(&self) -> &OfdmNumerology {
        &self.numerology
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn weight(&self) -> &WeightMatrix {
        &self.weight
    }

    pub fn num_params(&self) -> usize {
        self.params.num_params()
    }

    pub fn check_waveform(&self, x: &Waveform) -> Result<()> {
        check_columns(x, &self.grid, &self.geometry)
    }

    /// `v_m = Λ_m Tᵀ x_m`.
    fn projected(&self, m: usize, x: &Waveform) -> CVector {
        &self.sensitivities[m] * x.column(m)
    }

    /// Closed-form FIM.
    pub fn fim(&self, x: &Waveform) -> Result<Fim> {
        self.check_waveform(x)?;
        let n = self.num_params();
        // Σ_m 2/σ² v̄ vᵀ, then ∘ Rᴴ R and real part
        let mut acc = CMatrix::zeros(n, n);
        for (m, &var) in self.grid.noise_var().iter().enumerate() {
            let v = self.projected(m, x);
            let scale = 2.0 / var;
            for j in 0..n {
                let vj = v[j] * scale;
                for i in 0..n {
                    acc[(i, j)] += v[i].conj() * vj;
                }
            }
        }
        let info = DMatrix::from_fn(n, n, |i, j| (acc[(i, j)] * self.rx_gram[(i, j)]).re);
        Ok(Fim(info))
    }

    /// `log det(Jᴴ 𝓘 J)`, or `−∞` when the weighted FIM is not positive definite.
    pub fn objective(&self, x: &Waveform) -> Result<f64> {
        Ok(weighted_log_det(&self.fim(x)?, &self.weight))
    }

    /// Objective value and its Euclidean gradient under `Re tr(Aᴴ B)`;
    /// `None` when the weighted FIM is singular.
    pub fn objective_and_gradient(&self, x: &Waveform) -> Result<Option<(f64, CMatrix)>> {
        let fim = self.fim(x)?;
        let weighted = self.weight.congruence(fim.matrix());
        let Some(chol) = Cholesky::new(weighted) else {
            return Ok(None);
        };
        let value = log_det_from_cholesky(&chol);
        // W = J (Jᴴ𝓘J)⁻¹ J, S = W ∘ Rᴴ R
        let w = self.weight.congruence(&chol.inverse());
        let n = self.num_params();
        let s = CMatrix::from_fn(n, n, |i, j| self.rx_gram[(i, j)] * w[(i, j)]);
        let mut grad = CMatrix::zeros(x.nrows(), x.ncols());
        for (m, &var) in self.grid.noise_var().iter().enumerate() {
            let v = self.projected(m, x);
            let col = self.sensitivities[m].ad_mul(&(&s * v)) * Complex64::new(4.0 / var, 0.0);
            grad.set_column(m, &col);
        }
        Ok(Some((value, grad)))
    }
}

fn log_det_from_cholesky(chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// `log det(Jᴴ 𝓘 J)` via Cholesky; `−∞` if the factorisation fails.
pub fn weighted_log_det(fim: &Fim, weight: &WeightMatrix) -> f64 {
    assert_eq!(fim.dim(), weight.len(), "weight dimension");
    match Cholesky::new(weight.congruence(fim.matrix())) {
        Some(chol) => {
            let v = log_det_from_cholesky(&chol);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
        None => f64::NEG_INFINITY,
    }
}

/// Closed Hadamard-form FIM for waveform `x`.
pub fn fim_closed(
    x: &Waveform,
    params: &MultipathParams,
    grid: &ResourceGrid,
    num: &OfdmNumerology,
    geom: &ArrayGeometry,
) -> Result<Fim> {
    check_columns(x, grid, geom)?;
    let problem = SensingProblem::new(
        params.clone(),
        grid.clone(),
        *num,
        *geom,
        WeightMatrix::identity(params.num_params()),
    )?;
    problem.fim(x)
}

/// Element-wise FIM straight from the channel Jacobian and the
/// `x_m* x_mᵀ ⊗ I` kernel.
pub fn fim_elementwise(
    x: &Waveform,
    params: &MultipathParams,
    grid: &ResourceGrid,
    num: &OfdmNumerology,
    geom: &ArrayGeometry,
) -> Result<Fim> {
    check_columns(x, grid, geom)?;
    let n = params.num_params();
    let eye = products::identity(geom.n_rx);
    let mut info = DMatrix::<f64>::zeros(n, n);
    for (m, (&re, &var)) in grid.elements().iter().zip(grid.noise_var()).enumerate() {
        let jac = channel_derivatives(params, re, num, geom);
        let xm = x.column(m);
        let outer = xm.map(|z| z.conj()) * xm.transpose();
        let kernel = products::kronecker(&outer, &eye);
        let quad = jac.adjoint() * kernel * &jac;
        info += quad.map(|z| z.re) * (2.0 / var);
    }
    Ok(Fim(info))
}

/// `log det(Jᴴ 𝓘 J)` for waveform `x`.
pub fn objective(
    x: &Waveform,
    params: &MultipathParams,
    grid: &ResourceGrid,
    num: &OfdmNumerology,
    geom: &ArrayGeometry,
    weight: &WeightMatrix,
) -> Result<f64> {
    SensingProblem::new(params.clone(), grid.clone(), *num, *geom, weight.clone())?.objective(x)
}

/// Euclidean gradient of [`objective`] under `Re tr(Aᴴ B)`.
pub fn objective_gradient(
    x: &Waveform,
    params: &MultipathParams,
    grid: &ResourceGrid,
    num: &OfdmNumerology,
    geom: &ArrayGeometry,
    weight: &WeightMatrix,
) -> Result<CMatrix> {
    let problem = SensingProblem::new(params.clone(), grid.clone(), *num, *geom, weight.clone())?;
    match problem.objective_and_gradient(x)? {
        Some((_, g)) => Ok(g),
        None => {
            let min_eigenvalue = problem.fim(x)?.min_eigenvalue();
            Err(Error::SingularFim { min_eigenvalue })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PathParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn num() -> OfdmNumerology {
        OfdmNumerology::new(15e3, 3e9).unwrap()
    }

    fn single_path(b: Complex64) -> MultipathParams {
        MultipathParams::new(vec![PathParams {
            gain_re: b.re,
            gain_im: b.im,
            delay: 0.0,
            doppler: 0.0,
            aoa: 0.0,
            aod: 0.0,
        }])
        .unwrap()
    }

    fn random_waveform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn lambda_at_origin_re() {
        let lam = lambda_matrix(&single_path(Complex64::new(1.0, 0.0)), ResourceElement::new(0, 0), &num());
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        for (a, b) in lam.iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn gain_block_of_lambda_has_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = MultipathParams::new(
            (0..3)
                .map(|_| PathParams {
                    gain_re: rng.random_range(-2.0..2.0),
                    gain_im: rng.random_range(-2.0..2.0),
                    delay: rng.random_range(0.0..2e-6),
                    doppler: rng.random_range(0.0..800.0),
                    aoa: 0.1,
                    aod: -0.2,
                })
                .collect(),
        )
        .unwrap();
        let lam = lambda_matrix(&params, ResourceElement::new(17, 5), &num());
        for z in &lam[..6] {
            assert!((z.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tr_matrices_scalar_array() {
        let params = single_path(Complex64::new(0.4, 0.2));
        let (t, r) = tr_matrices(&params, &ArrayGeometry::new(1, 1).unwrap());
        let want = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0];
        for (j, w) in want.iter().enumerate() {
            assert!((t[(0, j)] - Complex64::new(*w, 0.0)).norm() < 1e-15);
        }
        assert!(r[(0, 4)].norm() == 0.0 && (r[(0, 5)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let (t, _) = tr_matrices(&params, &ArrayGeometry::new(2, 1).unwrap());
        assert!(t[(0, 5)].norm() < 1e-15);
        assert!((t[(1, 5)] - Complex64::new(0.0, std::f64::consts::PI)).norm() < 1e-15);
    }

    #[test]
    fn zero_waveform_gives_zero_fim() {
        let params = single_path(Complex64::new(1.0, 0.5));
        let grid = ResourceGrid::rectangular(2, 2, 1.0).unwrap();
        let geom = ArrayGeometry::new(2, 2).unwrap();
        let x = CMatrix::zeros(2, 4);
        assert_eq!(fim_closed(&x, &params, &grid, &num(), &geom).unwrap().max_abs(), 0.0);
        assert_eq!(fim_elementwise(&x, &params, &grid, &num(), &geom).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn scalar_link_gain_entries() {
        // nT = nR = 1, one RE with |x|² = P: gain entries are 2P/σ²
        let (p, var): (f64, f64) = (10.0, 4.0);
        let params = single_path(Complex64::new(0.7, -0.3));
        let grid = ResourceGrid::uniform(vec![ResourceElement::new(3, 1)], var).unwrap();
        let geom = ArrayGeometry::new(1, 1).unwrap();
        let x = CMatrix::from_element(1, 1, Complex64::from_polar(p.sqrt(), 0.9));
        for fim in [
            fim_closed(&x, &params, &grid, &num(), &geom).unwrap(),
            fim_elementwise(&x, &params, &grid, &num(), &geom).unwrap(),
        ] {
            let m = fim.matrix();
            assert!((m[(0, 0)] - 2.0 * p / var).abs() < 1e-12);
            assert!((m[(1, 1)] - 2.0 * p / var).abs() < 1e-12);
            for k in 0..6 {
                for a in [4, 5] {
                    assert_eq!(m[(a, k)], 0.0);
                    assert_eq!(m[(k, a)], 0.0);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let params = single_path(Complex64::new(1.0, 0.0));
        let grid = ResourceGrid::rectangular(2, 2, 1.0).unwrap();
        let geom = ArrayGeometry::new(2, 2).unwrap();
        let x = CMatrix::zeros(2, 3);
        assert!(matches!(
            fim_closed(&x, &params, &grid, &num(), &geom),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(fim_elementwise(&x, &params, &grid, &num(), &geom).is_err());
        assert!(fim_closed(&CMatrix::zeros(3, 4), &params, &grid, &num(), &geom).is_err());
    }

    #[test]
    fn quadratic_scaling_is_exact_for_power_of_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let params = single_path(Complex64::new(0.3, 0.9));
        let grid = ResourceGrid::rectangular(3, 2, 0.5).unwrap();
        let geom = ArrayGeometry::new(3, 2).unwrap();
        let x = random_waveform(&mut rng, 3, 6);
        let base = fim_closed(&x, &params, &grid, &num(), &geom).unwrap();
        let scaled = fim_closed(&(&x * Complex64::new(2.0, 0.0)), &params, &grid, &num(), &geom).unwrap();
        assert_eq!(scaled.matrix(), &(base.matrix() * 4.0));
    }

    #[test]
    fn weighted_log_det_identities() {
        let eye = Fim::from_matrix(DMatrix::identity(6, 6));
        assert_eq!(weighted_log_det(&eye, &WeightMatrix::identity(6)), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let spd = Fim::from_matrix(&a * a.transpose() + DMatrix::identity(6, 6));
        let d: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..3.0)).collect();
        let shift: f64 = 2.0 * d.iter().map(|v| v.ln()).sum::<f64>();
        let lhs = weighted_log_det(&spd, &WeightMatrix::new(d).unwrap());
        let rhs = weighted_log_det(&spd, &WeightMatrix::identity(6)) + shift;
        assert!((lhs - rhs).abs() < 1e-12);

        let singular = Fim::from_matrix(DMatrix::zeros(6, 6));
        assert_eq!(weighted_log_det(&singular, &WeightMatrix::identity(6)), f64::NEG_INFINITY);
    }

    #[test]
    fn weight_matrix_rejects_non_positive() {
        assert!(WeightMatrix::new(vec![1.0, 0.0]).is_err());
        assert!(WeightMatrix::new(vec![1.0, -2.0]).is_err());
        assert!(ResourceGrid::uniform(vec![ResourceElement::new(0, 0)], 0.0).is_err());
        assert!(ResourceGrid::new(vec![ResourceElement::new(0, 0)], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn singular_fim_gradient_is_an_error() {
        // a scalar array cannot resolve angles
        let params = single_path(Complex64::new(1.0, 0.0));
        let grid = ResourceGrid::rectangular(2, 2, 1.0).unwrap();
        let geom = ArrayGeometry::new(1, 1).unwrap();
        let x = CMatrix::from_element(1, 4, Complex64::new(1.0, 0.0));
        let w = WeightMatrix::identity(6);
        assert_eq!(objective(&x, &params, &grid, &num(), &geom, &w).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            objective_gradient(&x, &params, &grid, &num(), &geom, &w),
            Err(Error::SingularFim { .. })
        ));
    }
}
