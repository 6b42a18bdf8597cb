use num_complex::Complex64;

use super::lanczos::{self, InverseOperator, LanczosOptions};
use super::ComplexMatrix;
use crate::{Error, Result};

/// Complex Schur factorisation `A = U T U^*` with `U` unitary and `T` upper triangular.
///
/// Immutable after construction; share it across workers for grid scans.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurForm {
    u: ComplexMatrix,
    t: ComplexMatrix,
}

/// QR sweeps allowed per unit of dimension before giving up.
const SWEEPS_PER_DIM: usize = 100;

impl SchurForm {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        a.ensure_finite()?;
        let n = a.dim();
        if a.is_upper_triangular() {
            return Ok(Self { u: ComplexMatrix::identity(n), t: a.clone() });
        }
        let cap = SWEEPS_PER_DIM * n;
        let schur = nalgebra::linalg::Schur::try_new(a.to_nalgebra(), f64::EPSILON, cap)
            .ok_or(Error::NoConvergence { routine: "complex Schur", iterations: cap })?;
        let (q, t) = schur.unpack();
        let mut t = ComplexMatrix::from_nalgebra(&t);
        for i in 1..n {
            for j in 0..i {
                t[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self { u: ComplexMatrix::from_nalgebra(&q), t })
    }

    pub fn dim(&self) -> usize {
        self.t.dim()
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn triangle(&self) -> &ComplexMatrix {
        &self.t
    }

    /// `U T U^*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        &(&self.u * &self.t) * &self.u.adjoint()
    }

    /// `σ_min(A − z) = σ_min(T − z)`, by inverse Lanczos on the shifted triangle.
    pub fn sigma_min_shifted(&self, z: Complex64, opts: &LanczosOptions) -> Result<f64> {
        if self.t.diagonal().contains(&z) {
            return Ok(0.0);
        }
        let shifted = ShiftedTriangle { t: &self.t, z };
        let s = lanczos::inverse_sigma_max(&shifted, opts)?;
        Ok(if s.is_finite() { 1.0 / s } else { 0.0 })
    }
}

struct ShiftedTriangle<'a> {
    t: &'a ComplexMatrix,
    z: Complex64,
}

impl InverseOperator for ShiftedTriangle<'_> {
    fn dim(&self) -> usize {
        self.t.dim()
    }

    fn solve(&self, x: &mut [Complex64]) {
        let n = self.t.dim();
        for i in (0..n).rev() {
            let row = self.t.row(i);
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / (row[i] - self.z);
        }
    }

    fn solve_adjoint(&self, x: &mut [Complex64]) {
        let n = self.t.dim();
        for i in 0..n {
            let row = self.t.row(i);
            x[i] /= (row[i] - self.z).conj();
            let xi = x[i];
            for j in i + 1..n {
                x[j] -= row[j].conj() * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::smallest_singular_value;

    fn sample(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, |i, j| {
            let t = (i * 7 + j * 13) as f64;
            Complex64::new((0.37 * t).sin(), (0.11 * t + 0.3).cos())
        })
    }

    #[test]
    fn factorisation_invariants() {
        let a = sample(25);
        let s = SchurForm::new(&a).unwrap();
        let n = a.dim() as f64;
        let uu = &s.unitary().adjoint() * s.unitary();
        let orth = (&uu - &ComplexMatrix::identity(25)).max_abs();
        assert!(orth <= 1e-10 * n, "U*U − I = {orth}");
        let recon = (&s.reconstruct() - &a).max_abs();
        assert!(recon <= 1e-10 * a.frobenius_norm(), "reconstruction {recon}");
        assert!(s.triangle().is_upper_triangular());
    }

    #[test]
    fn triangle_sigma_min_matches_svd() {
        let a = sample(30);
        let s = SchurForm::new(&a).unwrap();
        for z in [Complex64::new(0.2, -0.1), Complex64::new(2.0, 3.0)] {
            let fast = s.sigma_min_shifted(z, &LanczosOptions::default()).unwrap();
            let slow = smallest_singular_value(&a.shifted(z)).unwrap();
            assert!((fast / slow - 1.0).abs() < 1e-8, "{fast} vs {slow}");
        }
    }
}
