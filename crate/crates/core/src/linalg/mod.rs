//! Dense complex spectral primitives.
//!
//! Eigenvalues and singular values are delegated to `faer`; the unitary Schur
//! factor comes from `nalgebra`. Repeated `σ_min(A − z)` queries go through
//! [`ResolventEvaluator`], which runs inverse Golub–Kahan–Lanczos on either a
//! Schur triangle or a banded LU factorisation.

mod banded;
mod lanczos;
mod schur;

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::Mat;
use num_complex::Complex64;

use crate::{Error, Result};

pub use banded::{BandLu, BandMatrix};
pub use lanczos::LanczosOptions;
pub use schur::SchurForm;

/// `σ_min` below this value is reported as [`Error::Singular`].
pub const SINGULAR_FLOOR: f64 = 1e-300;

/// Dense square matrix of complex doubles, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// # Panics
    /// If `dim == 0`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    /// `A − z·I`.
    pub fn shifted(&self, z: Complex64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)] -= z;
        }
        m
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Lower and upper bandwidths `(kl, ku)` of the nonzero pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if self[(i, j)] != Complex64::new(0.0, 0.0) {
                    if i > j {
                        kl = kl.max(i - j);
                    } else {
                        ku = ku.max(j - i);
                    }
                }
            }
        }
        (kl, ku)
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.bandwidths().0 == 0
    }

    pub(crate) fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.dim, self.dim, |i, j| self[(i, j)])
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| self[(i, j)])
    }

    pub(crate) fn from_nalgebra(m: &nalgebra::DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { dim: self.dim, data }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { dim: self.dim, data }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// Total order used for eigenvalue lists: real part, then imaginary part.
pub fn lexicographic(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// All eigenvalues with algebraic multiplicity, sorted by (re, im).
///
/// Triangular input short-circuits to its diagonal. Otherwise the dense
/// Hessenberg/multishift-QR path is used; its internal sweep cap surfaces as
/// [`Error::NoConvergence`].
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    a.ensure_finite()?;
    let (kl, ku) = a.bandwidths();
    let mut values = if kl == 0 || ku == 0 {
        a.diagonal()
    } else {
        a.to_faer()
            .eigenvalues()
            .map_err(|_| Error::NoConvergence { routine: "eigenvalues", iterations: 0 })?
    };
    values.sort_by(lexicographic);
    Ok(values)
}

/// Singular values in decreasing order.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    a.ensure_finite()?;
    let mut s = a
        .to_faer()
        .singular_values()
        .map_err(|_| Error::NoConvergence { routine: "singular_values", iterations: 0 })?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

pub fn smallest_singular_value(a: &ComplexMatrix) -> Result<f64> {
    Ok(*singular_values(a)?.last().expect("dim >= 1"))
}

/// Largest singular value (spectral norm).
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}

/// `‖(A − z)^{-1}‖ = 1/σ_min(A − z)`.
///
/// With a [`SchurForm`] of `A` the value comes from inverse Lanczos on the
/// shifted triangle; without one, from a full SVD of `A − z`.
pub fn resolvent_norm_at(a: &ComplexMatrix, z: Complex64, schur: Option<&SchurForm>) -> Result<f64> {
    let sigma = match schur {
        Some(s) => {
            if s.dim() != a.dim() {
                return Err(Error::DimensionMismatch { expected: a.dim(), got: s.dim() });
            }
            s.sigma_min_shifted(z, &LanczosOptions::default())?
        }
        None => smallest_singular_value(&a.shifted(z))?,
    };
    invert_sigma(sigma)
}

pub(crate) fn invert_sigma(sigma: f64) -> Result<f64> {
    if sigma < SINGULAR_FLOOR || !sigma.is_finite() {
        Err(Error::Singular)
    } else {
        Ok(1.0 / sigma)
    }
}

/// Factored form of an operator prepared for many `σ_min(A − z)` queries.
#[derive(Debug, Clone)]
pub enum ResolventEvaluator {
    /// Narrow-band matrices: one banded LU per shift, `O(n·bw²)`.
    Banded(BandMatrix),
    /// General matrices: one Schur factorisation, then `O(n²)` per shift.
    Schur(SchurForm),
}

impl ResolventEvaluator {
    /// Picks the banded path when `kl + ku ≤ max(4, n/8)`, else factors a Schur form.
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        a.ensure_finite()?;
        let (kl, ku) = a.bandwidths();
        if kl + ku <= (a.dim() / 8).max(4) {
            Ok(Self::Banded(BandMatrix::from_matrix(a)))
        } else {
            Ok(Self::Schur(SchurForm::new(a)?))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Banded(b) => b.dim(),
            Self::Schur(s) => s.dim(),
        }
    }

    pub fn sigma_min(&self, z: Complex64) -> Result<f64> {
        self.sigma_min_with(z, &LanczosOptions::default())
    }

    pub fn sigma_min_with(&self, z: Complex64, opts: &LanczosOptions) -> Result<f64> {
        match self {
            Self::Banded(b) => match b.shifted_lu(z) {
                Some(lu) => lanczos::inverse_sigma_max(&lu, opts).map(|s| if s.is_finite() { 1.0 / s } else { 0.0 }),
                None => Ok(0.0),
            },
            Self::Schur(s) => s.sigma_min_shifted(z, opts),
        }
    }

    pub fn resolvent_norm(&self, z: Complex64) -> Result<f64> {
        invert_sigma(self.sigma_min(z)?)
    }
}
