//! Inverse Golub–Kahan–Lanczos bidiagonalisation.
//!
//! Runs on the operator `M^{-1}` given only solves with `M` and `M^*`, so the
//! largest singular value it converges to is `1/σ_min(M)`. Working with
//! `M^{-1}` rather than `(M^*M)^{-1}` keeps the dynamic range at `1/σ` instead
//! of `1/σ²`, which matters deep inside pseudospectra.

use num_complex::Complex64;

use crate::{Error, Result};

/// Solves with a fixed square matrix `M` and its adjoint.
pub(crate) trait InverseOperator {
    fn dim(&self) -> usize;
    /// Overwrites `x` with `M^{-1} x`.
    fn solve(&self, x: &mut [Complex64]);
    /// Overwrites `x` with `M^{-*} x`.
    fn solve_adjoint(&self, x: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Relative change of the Ritz value accepted as converged (two steps in a row).
    pub rel_tol: f64,
    /// Iteration cap; the effective cap is `min(max_iter, dim)`.
    pub max_iter: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-13, max_iter: 600 }
    }
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Two passes of classical Gram–Schmidt against `basis`.
fn reorthogonalize(x: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, x);
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi -= c * qi;
            }
        }
    }
}

fn start_vector(n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new(1.0 + 0.37 * (1.3 * t + 0.7).sin(), 0.21 * (2.1 * t).cos() + 0.05)
        })
        .collect();
    let s = norm(&v);
    v.iter_mut().for_each(|z| *z /= s);
    v
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e`, by Sturm-sequence bisection.
fn tridiagonal_max_eigenvalue(d: &[f64], e: &[f64], lower: f64) -> f64 {
    let k = d.len();
    let mut hi = f64::MIN;
    for i in 0..k {
        let left = if i > 0 { e[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < k { e[i].abs() } else { 0.0 };
        hi = hi.max(d[i] + left + right);
    }
    let mut lo = lower.min(hi);
    // number of eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..k {
            let denom = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1e-300) } else { q };
            q = d[i] - x - e[i - 1] * e[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    if count_below(lo) == k {
        lo = d.iter().cloned().fold(f64::MAX, f64::min) - e.iter().map(|v| 2.0 * v.abs()).sum::<f64>();
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            break;
        }
        if count_below(mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest singular value of the upper-bidiagonal matrix `(alpha, beta)`.
fn bidiagonal_max_singular(alpha: &[f64], beta: &[f64], previous: f64) -> f64 {
    let k = alpha.len();
    let scale = alpha.iter().chain(beta.iter()).cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let a: Vec<f64> = alpha.iter().map(|x| x / scale).collect();
    let b: Vec<f64> = beta.iter().map(|x| x / scale).collect();
    let d: Vec<f64> = (0..k).map(|i| a[i] * a[i] + if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 }).collect();
    let e: Vec<f64> = (0..k - 1).map(|i| a[i] * b[i]).collect();
    let lower = (previous / scale).powi(2) * (1.0 - 1e-12);
    tridiagonal_max_eigenvalue(&d, &e, lower).max(0.0).sqrt() * scale
}

/// Returns `σ_max(M^{-1})`, or `+∞` when a solve overflows (numerically singular `M`).
pub(crate) fn inverse_sigma_max(op: &dyn InverseOperator, opts: &LanczosOptions) -> Result<f64> {
    let n = op.dim();
    let cap = opts.max_iter.min(n).max(1);
    let mut v = start_vector(n);
    let mut us: Vec<Vec<Complex64>> = Vec::with_capacity(cap);
    let mut vs: Vec<Vec<Complex64>> = Vec::with_capacity(cap + 1);
    let mut alpha = Vec::with_capacity(cap);
    let mut beta: Vec<f64> = Vec::with_capacity(cap);
    let mut estimate = 0.0f64;
    let mut settled = 0;

    for k in 0..cap {
        // u_k = (M^{-1} v_k − β_{k−1} u_{k−1}) / α_k
        let mut u = v.clone();
        op.solve(&mut u);
        if !u.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(f64::INFINITY);
        }
        if let (Some(prev), Some(&b)) = (us.last(), beta.last()) {
            for (ui, pi) in u.iter_mut().zip(prev) {
                *ui -= b * pi;
            }
        }
        reorthogonalize(&mut u, &us);
        let a = norm(&u);
        vs.push(v);
        if a == 0.0 {
            return Ok(estimate);
        }
        u.iter_mut().for_each(|z| *z /= a);
        alpha.push(a);

        let previous = estimate;
        estimate = bidiagonal_max_singular(&alpha, &beta, previous);
        if !estimate.is_finite() {
            return Ok(f64::INFINITY);
        }
        if k > 0 && (estimate - previous).abs() <= opts.rel_tol * estimate {
            settled += 1;
            if settled >= 2 {
                return Ok(estimate);
            }
        } else {
            settled = 0;
        }

        // v_{k+1} = (M^{-*} u_k − α_k v_k) / β_k
        let mut w = u.clone();
        op.solve_adjoint(&mut w);
        if !w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(f64::INFINITY);
        }
        let last_v = vs.last().expect("pushed above");
        for (wi, vi) in w.iter_mut().zip(last_v) {
            *wi -= a * vi;
        }
        reorthogonalize(&mut w, &vs);
        us.push(u);
        let b = norm(&w);
        if b <= f64::EPSILON * estimate || us.len() == n {
            return Ok(estimate);
        }
        w.iter_mut().for_each(|z| *z /= b);
        beta.push(b);
        v = w;
    }
    Err(Error::NoConvergence { routine: "inverse Lanczos", iterations: cap })
}
