//! Cramér-Rao bounds from the (unweighted) Fisher information.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::channel::ParamKind;
use crate::fim::Fim;
use crate::{Error, Result};

/// Condition number, after unit-diagonal normalisation, above which
/// parameters involved in the near-null directions are flagged.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Eigenvector loading above which a parameter counts as involved in a
/// near-null direction.
const LOADING_THRESHOLD: f64 = 0.1;

/// `𝓘⁻¹` via Cholesky.
pub fn crlb_matrix(fim: &Fim) -> Result<DMatrix<f64>> {
    let sym = (fim.matrix() + fim.matrix().transpose()) * 0.5;
    match Cholesky::new(sym) {
        Some(chol) => {
            let inv = chol.inverse();
            Ok((&inv + inv.transpose()) * 0.5)
        }
        None => Err(Error::SingularFim { min_eigenvalue: fim.min_eigenvalue() }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbReport {
    /// `sqrt([𝓘⁻¹]_ii)` in parameter units; NaN where flagged.
    pub per_index: Vec<f64>,
    /// Mean of `per_index` over paths, per parameter type (canonical order).
    pub per_type: [f64; 6],
    /// Parameters caught in a near-null direction of the FIM.
    pub flagged: Vec<bool>,
    /// Condition number of the unit-diagonal normalised FIM.
    pub condition: f64,
}

impl CrlbReport {
    pub fn by_type(&self) -> impl Iterator<Item = (ParamKind, f64)> + '_ {
        ParamKind::ALL.into_iter().zip(self.per_type)
    }
}

/// Square-root CRLB per parameter and its path average per parameter type.
///
/// Delay and Doppler information sit many orders of magnitude away from the
/// gain and angle entries, so conditioning is judged on
/// `D^{-1/2} 𝓘 D^{-1/2}` with `D = diag(𝓘)`.
pub fn per_parameter_rmse(fim: &Fim, num_paths: usize) -> Result<CrlbReport> {
    let n = fim.dim();
    if n != 6 * num_paths {
        return Err(Error::DimensionMismatch { context: "FIM size vs paths", expected: 6 * num_paths, actual: n });
    }
    let inv = crlb_matrix(fim)?;

    let d: Vec<f64> = (0..n).map(|i| fim.matrix()[(i, i)].sqrt()).collect();
    let normalized = DMatrix::from_fn(n, n, |i, j| {
        0.5 * (fim.matrix()[(i, j)] + fim.matrix()[(j, i)]) / (d[i] * d[j])
    });
    let eig = SymmetricEigen::new(normalized);
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();
    let condition = if min_ev > 0.0 { max_ev / min_ev } else { f64::INFINITY };

    let mut flagged = vec![false; n];
    if condition > CONDITION_LIMIT {
        for (k, &ev) in eig.eigenvalues.iter().enumerate() {
            if ev * CONDITION_LIMIT < max_ev {
                for (i, flag) in flagged.iter_mut().enumerate() {
                    if eig.eigenvectors[(i, k)].abs() >= LOADING_THRESHOLD {
                        *flag = true;
                    }
                }
            }
        }
    }

    let per_index: Vec<f64> = (0..n)
        .map(|i| if flagged[i] { f64::NAN } else { inv[(i, i)].max(0.0).sqrt() })
        .collect();
    let mut per_type = [0.0; 6];
    for kind in ParamKind::ALL {
        let block = &per_index[kind.block() * num_paths..(kind.block() + 1) * num_paths];
        let good: Vec<f64> = block.iter().copied().filter(|v| !v.is_nan()).collect();
        per_type[kind.block()] = if good.is_empty() { f64::NAN } else { good.iter().sum::<f64>() / good.len() as f64 };
    }
    Ok(CrlbReport { per_index, per_type, flagged, condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn diagonal_inverse() {
        let fim = Fim::from_matrix(DMatrix::from_diagonal_element(6, 6, 4.0));
        let inv = crlb_matrix(&fim).unwrap();
        assert!((inv - DMatrix::from_diagonal_element(6, 6, 0.25)).amax() < 1e-15);
    }

    #[test]
    fn inverse_residual_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let m = random_spd(&mut rng, 12);
            let fim = Fim::from_matrix(m.clone());
            let cond = {
                let ev = fim.eigenvalues();
                ev[11] / ev[0]
            };
            let residual = (&m * crlb_matrix(&fim).unwrap() - DMatrix::identity(12, 12)).amax();
            assert!(residual <= 1e-8 * cond, "residual {residual}");
        }
    }

    #[test]
    fn doubling_information_halves_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_spd(&mut rng, 6);
        let a = crlb_matrix(&Fim::from_matrix(m.clone())).unwrap();
        let b = crlb_matrix(&Fim::from_matrix(&m * 2.0)).unwrap();
        for i in 0..6 {
            assert!((b[(i, i)] - a[(i, i)] / 2.0).abs() <= 1e-12 * a[(i, i)]);
        }
    }

    #[test]
    fn singular_fim_names_smallest_eigenvalue() {
        let mut m = DMatrix::from_diagonal_element(6, 6, 1.0);
        m[(3, 3)] = 0.0;
        match crlb_matrix(&Fim::from_matrix(m)) {
            Err(Error::SingularFim { min_eigenvalue }) => assert_eq!(min_eigenvalue, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagonal_report() {
        let diag: Vec<f64> = (1..=6).map(|i| (i * i) as f64).collect();
        let fim = Fim::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)));
        let r = per_parameter_rmse(&fim, 1).unwrap();
        for (i, v) in r.per_index.iter().enumerate() {
            assert!((v - 1.0 / (i + 1) as f64).abs() < 1e-15);
        }
        assert_eq!(r.per_type.to_vec(), r.per_index);
        assert!(r.flagged.iter().all(|f| !f));
    }

    #[test]
    fn per_type_is_block_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_spd(&mut rng, 18);
        let fim = Fim::from_matrix(m.clone());
        let r = per_parameter_rmse(&fim, 3).unwrap();
        let inv = m.try_inverse().unwrap();
        for t in 0..6 {
            let want = (0..3).map(|l| inv[(3 * t + l, 3 * t + l)].sqrt()).sum::<f64>() / 3.0;
            assert!((r.per_type[t] - want).abs() <= 1e-10 * want);
        }
        assert!(per_parameter_rmse(&fim, 2).is_err());
    }

    #[test]
    fn badly_scaled_but_well_conditioned_is_not_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_spd(&mut rng, 6);
        let s = [1.0, 1.0, 1e7, 1e-4, 1.0, 1.0];
        let scaled = DMatrix::from_fn(6, 6, |i, j| m[(i, j)] * s[i] * s[j]);
        let r = per_parameter_rmse(&Fim::from_matrix(scaled), 1).unwrap();
        assert!(r.flagged.iter().all(|f| !f));
        assert!(r.condition < CONDITION_LIMIT);
    }

    #[test]
    fn near_null_direction_is_flagged() {
        // parameters 0 and 1 almost collinear
        let mut m = DMatrix::from_diagonal_element(6, 6, 1.0);
        m[(0, 1)] = 1.0 - 1e-14;
        m[(1, 0)] = 1.0 - 1e-14;
        let r = per_parameter_rmse(&Fim::from_matrix(m), 1).unwrap();
        assert!(r.flagged[0] && r.flagged[1]);
        assert!(!r.flagged[2]);
        assert!(r.per_index[0].is_nan() && r.per_index[2] == 1.0);
    }
}
