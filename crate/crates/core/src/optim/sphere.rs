use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{frobenius_sq, real_inner, CMatrix, Error, Result, Waveform};

/// The hypersphere `{X ∈ ℂ^{n_tx × M} : ‖X‖_F² = radius_sq}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    pub n_tx: usize,
    pub m: usize,
    pub radius_sq: f64,
}

impl SphereSpec {
    pub fn new(n_tx: usize, m: usize, radius_sq: f64) -> Result<Self> {
        if !(radius_sq > 0.0 && radius_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!("sphere radius² must be positive, got {radius_sq}")));
        }
        Ok(Self { n_tx, m, radius_sq })
    }

    /// Sphere of total power `M·P`.
    pub fn for_power(n_tx: usize, m: usize, power: f64) -> Result<Self> {
        Self::new(n_tx, m, m as f64 * power)
    }

    /// `‖X‖_F² − radius²`.
    pub fn power_error(&self, x: &Waveform) -> f64 {
        frobenius_sq(x) - self.radius_sq
    }

    /// Rescales a nonzero matrix onto the sphere.
    pub fn normalize(&self, x: &CMatrix) -> Result<Waveform> {
        let norm = frobenius_sq(x).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateRetraction);
        }
        Ok(x * Complex64::new(self.radius_sq.sqrt() / norm, 0.0))
    }

    /// Complex standard-normal entries scaled onto the sphere.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Waveform {
        let x = CMatrix::from_fn(self.n_tx, self.m, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        });
        self.normalize(&x).expect("gaussian draw is nonzero")
    }

    /// Orthogonal projection onto the tangent space at `x`:
    /// `U − (Re⟨X,U⟩ / radius²) X`.
    pub fn project_tangent(&self, x: &Waveform, u: &CMatrix) -> CMatrix {
        let c = real_inner(x, u) / self.radius_sq;
        u - x * Complex64::new(c, 0.0)
    }

    /// Metric-projection retraction `√radius² (X + tp)/‖X + tp‖_F`.
    pub fn retract(&self, x: &Waveform, p: &CMatrix, t: f64) -> Result<Waveform> {
        if t == 0.0 {
            return Ok(x.clone());
        }
        self.normalize(&(x + p * Complex64::new(t, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (SphereSpec, Waveform, CMatrix, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = SphereSpec::for_power(4, 6, 10.0).unwrap();
        let x = s.random_point(&mut rng);
        let u = SphereSpec::new(4, 6, 1.0).unwrap().random_point(&mut rng) * Complex64::new(3.0, 0.0);
        (s, x, u, rng)
    }

    #[test]
    fn random_point_lies_on_sphere() {
        let (s, x, _, _) = setup();
        assert!(s.power_error(&x).abs() <= 1e-12 * s.radius_sq);
        assert!(SphereSpec::new(1, 1, 0.0).is_err());
    }

    #[test]
    fn projection_removes_radial_part() {
        let (s, x, u, _) = setup();
        assert!(frobenius_sq(&s.project_tangent(&x, &x)).sqrt() <= 1e-12 * s.radius_sq.sqrt());
        let p = s.project_tangent(&x, &u);
        let scale = frobenius_sq(&x).sqrt() * frobenius_sq(&u).sqrt();
        assert!(real_inner(&x, &p).abs() <= 1e-10 * scale);
        let pp = s.project_tangent(&x, &p);
        assert!((&pp - &p).iter().all(|z| z.norm() <= 1e-14));
    }

    #[test]
    fn retraction_stays_on_sphere() {
        let (s, x, u, _) = setup();
        let p = s.project_tangent(&x, &u);
        assert_eq!(s.retract(&x, &p, 0.0).unwrap(), x);
        for t in [1e-3, 0.1, 1.0, 17.0] {
            let y = s.retract(&x, &p, t).unwrap();
            assert!(s.power_error(&y).abs() <= 1e-12 * s.radius_sq);
        }
    }

    #[test]
    fn retraction_is_second_order_close_to_the_line() {
        let (s, x, u, _) = setup();
        let p = s.project_tangent(&x, &u);
        let err = |t: f64| frobenius_sq(&(s.retract(&x, &p, t).unwrap() - (&x + &p * Complex64::new(t, 0.0)))).sqrt();
        let mut t = 0.1;
        for _ in 0..4 {
            let ratio = err(t) / err(t / 2.0);
            assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
            t /= 2.0;
        }
    }

    #[test]
    fn retracting_onto_origin_fails() {
        let (s, x, _, _) = setup();
        let p = -x.clone();
        assert!(matches!(s.retract(&x, &p, 1.0), Err(Error::DegenerateRetraction)));
    }
}
