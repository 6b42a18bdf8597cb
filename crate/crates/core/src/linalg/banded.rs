//! Banded storage and LU with partial pivoting (row interchanges), in the
//! style of LAPACK `zgbtrf`/`zgbtrs`.

use num_complex::Complex64;

use super::lanczos::InverseOperator;
use super::ComplexMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` keeps a window of `2·kl + ku + 1` entries starting at column
/// `i − kl`; the extra `kl` slots on the right absorb fill-in from pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
}

impl BandMatrix {
    pub fn from_matrix(a: &ComplexMatrix) -> Self {
        let (kl, ku) = a.bandwidths();
        let mut band = Self::zeros(a.dim(), kl, ku);
        for i in 0..a.dim() {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(a.dim() - 1);
            for j in lo..=hi {
                band.set(i, j, a[(i, j)]);
            }
        }
        band
    }

    fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, ab: vec![ZERO; n * (2 * kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width());
        i * self.width() + (j + self.kl - i)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.ab[self.offset(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let o = self.offset(i, j);
        self.ab[o] = v;
    }

    /// LU factors of `A − z·I`, or `None` if an exact zero pivot appears.
    pub fn shifted_lu(&self, z: Complex64) -> Option<BandLu> {
        let mut f = self.clone();
        for i in 0..f.n {
            let d = f.get(i, i) - z;
            f.set(i, i, d);
        }
        f.factor()
    }

    fn factor(mut self) -> Option<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for r in k + 1..=last_row {
                let v = self.get(r, k).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let a = self.get(k, c);
                    let b = self.get(p, c);
                    self.set(k, c, b);
                    self.set(p, c, a);
                }
            }
            let pivot = self.get(k, k);
            for r in k + 1..=last_row {
                let l = self.get(r, k) / pivot;
                self.set(r, k, l);
                if l == ZERO {
                    continue;
                }
                for c in k + 1..=last_col {
                    let v = self.get(r, c) - l * self.get(k, c);
                    self.set(r, c, v);
                }
            }
        }
        Some(BandLu { lu: self, pivots })
    }
}

/// Output of [`BandMatrix::shifted_lu`].
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    fn upper_last(&self, k: usize) -> usize {
        (k + self.lu.kl + self.lu.ku).min(self.lu.n - 1)
    }

    fn lower_last(&self, k: usize) -> usize {
        (k + self.lu.kl).min(self.lu.n - 1)
    }
}

impl InverseOperator for BandLu {
    fn dim(&self) -> usize {
        self.lu.n
    }

    fn solve(&self, x: &mut [Complex64]) {
        let n = self.lu.n;
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            for r in k + 1..=self.lower_last(k) {
                x[r] -= self.lu.get(r, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for c in k + 1..=self.upper_last(k) {
                s -= self.lu.get(k, c) * x[c];
            }
            x[k] = s / self.lu.get(k, k);
        }
    }

    fn solve_adjoint(&self, x: &mut [Complex64]) {
        let n = self.lu.n;
        // U^* y = b (forward, column-oriented over rows of U)
        for k in 0..n {
            x[k] /= self.lu.get(k, k).conj();
            let xk = x[k];
            for c in k + 1..=self.upper_last(k) {
                x[c] -= self.lu.get(k, c).conj() * xk;
            }
        }
        // then the transposed elimination steps in reverse
        for k in (0..n).rev() {
            let mut s = x[k];
            for r in k + 1..=self.lower_last(k) {
                s -= self.lu.get(r, k).conj() * x[r];
            }
            x[k] = s;
            x.swap(k, self.pivots[k]);
        }
    }
}
