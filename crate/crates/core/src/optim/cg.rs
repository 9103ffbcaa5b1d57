use serde::{Deserialize, Serialize};

use super::SphereSpec;
use crate::{frobenius_sq, real_inner, CMatrix, Waveform};

/// Conjugacy rule for the search direction update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CgRule {
    #[default]
    PolakRibierePlus,
    FletcherReeves,
    SteepestDescent,
}

/// Next search direction at `x_new`.
///
/// The previous direction and gradient are carried over by projecting them
/// onto the tangent space at `x_new`. Returns the direction and whether it is
/// the plain steepest-descent direction (first step, clamp or restart).
pub fn cg_direction(
    sphere: &SphereSpec,
    rule: CgRule,
    previous: Option<(&CMatrix, &CMatrix)>,
    grad_new: &CMatrix,
    x_new: &Waveform,
) -> (CMatrix, bool) {
    let steepest = -grad_new;
    let Some((prev_dir, prev_grad)) = previous else {
        return (steepest, true);
    };
    let old_sq = frobenius_sq(prev_grad);
    if old_sq == 0.0 {
        return (steepest, true);
    }
    let beta = match rule {
        CgRule::SteepestDescent => 0.0,
        CgRule::FletcherReeves => frobenius_sq(grad_new) / old_sq,
        CgRule::PolakRibierePlus => {
            let moved_grad = sphere.project_tangent(x_new, prev_grad);
            (real_inner(grad_new, &(grad_new - moved_grad)) / old_sq).max(0.0)
        }
    };
    if beta == 0.0 {
        return (steepest, true);
    }
    let moved_dir = sphere.project_tangent(x_new, prev_dir);
    let dir = steepest + moved_dir * num_complex::Complex64::new(beta, 0.0);
    if real_inner(&dir, grad_new) >= 0.0 {
        return (-grad_new, true);
    }
    (dir, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_step_is_steepest_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SphereSpec::for_power(3, 4, 2.0).unwrap();
        let x = s.random_point(&mut rng);
        let g = s.project_tangent(&x, &s.random_point(&mut rng));
        let (d, restarted) = cg_direction(&s, CgRule::PolakRibierePlus, None, &g, &x);
        assert!(restarted);
        assert_eq!(d, -g);
    }

    #[test]
    fn negative_beta_clamps_to_steepest() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = SphereSpec::for_power(3, 4, 2.0).unwrap();
        let x = s.random_point(&mut rng);
        let g_old = s.project_tangent(&x, &s.random_point(&mut rng));
        // g_new = g_old / 2 gives ⟨g_new, g_new − g_old⟩ < 0
        let g_new = &g_old * Complex64::new(0.5, 0.0);
        let (d, restarted) = cg_direction(&s, CgRule::PolakRibierePlus, Some((&(-&g_old), &g_old)), &g_new, &x);
        assert!(restarted);
        assert_eq!(d, -g_new);
    }

    #[test]
    fn direction_is_tangent_and_descending() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = SphereSpec::for_power(4, 5, 3.0).unwrap();
        for _ in 0..20 {
            let x_old = s.random_point(&mut rng);
            let g_old = s.project_tangent(&x_old, &s.random_point(&mut rng));
            let p_old = s.project_tangent(&x_old, &s.random_point(&mut rng));
            let x_new = s.retract(&x_old, &p_old, 0.3).unwrap();
            let g_new = s.project_tangent(&x_new, &s.random_point(&mut rng));
            for rule in [CgRule::PolakRibierePlus, CgRule::FletcherReeves] {
                let (d, _) = cg_direction(&s, rule, Some((&p_old, &g_old)), &g_new, &x_new);
                let scale = frobenius_sq(&x_new).sqrt() * frobenius_sq(&d).sqrt();
                assert!(real_inner(&x_new, &d).abs() <= 1e-10 * scale);
                assert!(real_inner(&d, &g_new) < 0.0);
            }
        }
    }
}
