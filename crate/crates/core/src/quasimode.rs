//! Explicit quasimodes: Jordan vectors and order-0 Gaussian beams.
//!
//! A beam centred at `ρ0 = (x0, ξ0)` on `p0^{-1}(z)` is
//! `u(x) = χ(x − x0) exp(i(ξ0(x − x0) + Φ(x − x0)²/2)/h)` with
//! `Φ = −∂_x p0/∂_ξ p0` at `ρ0`; `Im Φ > 0` exactly on the `Λ+` branch.
//! Minus beams are built for the adjoint symbol `p̄0` and measured with
//! `(P − z)^*`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fit;
use crate::gallery::{
    davies_ho, hager_model, hermite_dimension, selfadjoint_ho, Basis, DiscretizedOperator, Domain, PhaseBox, SymbolModel,
};
use crate::linalg::{eigenvalues, operator_norm, smallest_singular_value, ComplexMatrix, ResolventEvaluator};
use crate::symbol::{half_imag_bracket, level_set, PhaseSpacePoint, BRACKET_VANISHING, LEVEL_SET_TOL};
use crate::{Error, Result};

/// Quadrature nodes per unit `h` along `x`.
const NODES_PER_H: f64 = 8.0;
/// Relative change of the residual under `N → 2N` that flags truncation.
pub const TRUNCATION_FLAG: f64 = 0.1;
const CENTER_RESOLUTION: usize = 401;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanQuasimode {
    pub vector: Vec<Complex64>,
    /// `‖(P_N − z)e_+‖`, computed by applying the matrix.
    pub residual: f64,
    pub relative_residual: f64,
}

/// `e_+ = (1, z, …, z^{N−1})` with `‖(P_N − z)e_+‖ = |z|^N`.
pub fn jordan_quasimode(n: usize, z: Complex64) -> Result<JordanQuasimode> {
    if z.norm() >= 1.0 {
        return Err(Error::invalid("z", "needs |z| < 1"));
    }
    let p = crate::gallery::jordan_block(n)?.matrix;
    let mut vector = Vec::with_capacity(n);
    let mut power = c(1.0, 0.0);
    for _ in 0..n {
        vector.push(power);
        power *= z;
    }
    let r = p.shifted(z).mul_vec(&vector);
    let residual = norm(&r);
    Ok(JordanQuasimode { relative_residual: residual / norm(&vector), residual, vector })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamSign {
    Plus,
    Minus,
}

impl std::str::FromStr for BeamSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(Self::Plus),
            "minus" => Ok(Self::Minus),
            other => Err(Error::invalid("sign", format!("expected plus or minus, got `{other}`"))),
        }
    }
}

/// Level-set point of `p0 = z` with `(1/2i){p̄0, p0} < 0` (plus) or `> 0` (minus).
///
/// Among admissible points, `ξ > 0` is preferred, then smaller `x`.
pub fn beam_center(model: SymbolModel, z: Complex64, sign: BeamSign) -> Result<PhaseSpacePoint> {
    let bx = PhaseBox::for_modulus(model, z.norm() + 0.5);
    let mut candidates: Vec<PhaseSpacePoint> = level_set(model, z, &bx, CENTER_RESOLUTION)?
        .into_iter()
        .filter(|p| {
            let b = half_imag_bracket(model, *p);
            let right_sign = match sign {
                BeamSign::Plus => b < -BRACKET_VANISHING,
                BeamSign::Minus => b > BRACKET_VANISHING,
            };
            right_sign && model.dxi(p.x, p.xi).norm() > 0.0
        })
        .collect();
    candidates.sort_by(|a, b| (a.xi <= 0.0).cmp(&(b.xi <= 0.0)).then(a.x.total_cmp(&b.x)).then(a.xi.total_cmp(&b.xi)));
    candidates.into_iter().next().ok_or(Error::NoAdmissibleCenter)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBeam {
    pub x0: f64,
    pub xi0: f64,
    pub phi: Complex64,
    pub h: f64,
    pub cutoff_halfwidth: f64,
    pub sign: BeamSign,
    pub domain: Domain,
}

/// `e^{-1/s}` glued to `1 − e^{-1/(1−s)}`: 0 at `s ≤ 0`, 1 at `s ≥ 1`.
fn smooth_step(s: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (a, b) = (f(s), f(1.0 - s));
    if a + b == 0.0 { 0.0 } else { a / (a + b) }
}

impl GaussianBeam {
    /// Plateau on `|t| ≤ w/2`, smooth decay to 0 at `|t| = w`.
    pub fn cutoff(&self, t: f64) -> f64 {
        let w = self.cutoff_halfwidth;
        smooth_step((w - t.abs()) / (0.5 * w))
    }

    /// Displacement from `x0`, wrapped to `(−π, π]` on the circle.
    pub fn displacement(&self, x: f64) -> f64 {
        let t = x - self.x0;
        match self.domain {
            Domain::Line => t,
            Domain::Circle => t - 2.0 * PI * ((t + PI) / (2.0 * PI)).floor(),
        }
    }

    pub fn value(&self, x: f64) -> Complex64 {
        let t = self.displacement(x);
        let chi = self.cutoff(t);
        if chi == 0.0 {
            return c(0.0, 0.0);
        }
        let phase = (c(self.xi0 * t, 0.0) + self.phi * (0.5 * t * t)) / self.h;
        (Complex64::i() * phase).exp() * chi
    }

    /// Quadrature nodes `x0 + t` covering the support, step `h/8`.
    fn nodes(&self) -> (Vec<f64>, f64) {
        let step = self.h / NODES_PER_H;
        let m = (self.cutoff_halfwidth / step).ceil() as i64;
        ((-m..=m).map(|k| self.x0 + k as f64 * step).collect(), step)
    }

    /// Fraction of `‖u‖²` outside `|x − x0| ≤ h^{0.4}`.
    pub fn mass_outside(&self) -> f64 {
        let (xs, _) = self.nodes();
        let r = self.h.powf(0.4);
        let (mut total, mut outside) = (0.0, 0.0);
        for x in xs {
            let w = self.value(x).norm_sqr();
            total += w;
            if self.displacement(x).abs() > r {
                outside += w;
            }
        }
        outside / total
    }

    /// Coefficients of the beam in the first `n` modes of `basis`.
    pub fn coefficients(&self, basis: Basis, n: usize) -> Result<Vec<Complex64>> {
        match (basis, self.domain) {
            (Basis::Hermite, Domain::Line) => Ok(self.hermite_coefficients(n)),
            (Basis::Fourier, Domain::Circle) => {
                if n % 2 == 0 {
                    return Err(Error::invalid("N", "Fourier truncations must be odd"));
                }
                Ok(self.fourier_coefficients(n))
            }
            _ => Err(Error::invalid("basis", "beam domain and operator basis do not match")),
        }
    }

    fn hermite_coefficients(&self, n: usize) -> Vec<Complex64> {
        let (xs, step) = self.nodes();
        let scale = self.h.powf(-0.25) * step;
        let rows: Vec<Vec<Complex64>> = xs
            .par_iter()
            .map(|&x| {
                let u = self.value(x);
                if u == c(0.0, 0.0) {
                    return vec![c(0.0, 0.0); n];
                }
                hermite_functions(x / self.h.sqrt(), n).into_iter().map(|psi| u * (psi * scale)).collect()
            })
            .collect();
        let mut out = vec![c(0.0, 0.0); n];
        for row in rows {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    fn fourier_coefficients(&self, n: usize) -> Vec<Complex64> {
        let m = (2.0 * PI * NODES_PER_H / self.h).ceil() as usize;
        let dx = 2.0 * PI / m as f64;
        let samples: Vec<(f64, Complex64)> =
            (0..m).map(|j| j as f64 * dx).map(|x| (x, self.value(x))).filter(|(_, u)| *u != c(0.0, 0.0)).collect();
        let kmax = (n / 2) as i64;
        let w = dx / (2.0 * PI).sqrt();
        (-kmax..=kmax)
            .into_par_iter()
            .map(|k| samples.iter().map(|&(x, u)| u * Complex64::from_polar(w, -(k as f64) * x)).sum())
            .collect()
    }
}

/// `ψ_0(y), …, ψ_{n−1}(y)`, the L²-normalised Hermite functions, by the
/// three-term recurrence with the Gaussian factor kept as a separate log scale.
pub fn hermite_functions(y: f64, n: usize) -> Vec<f64> {
    const BIG: f64 = 1e150;
    let mut out = Vec::with_capacity(n);
    let mut log_scale = -0.5 * y * y;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for k in 0..n {
        out.push(cur * log_scale.exp());
        let next = (2.0 / (k + 1) as f64).sqrt() * y * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
    }
    out
}

/// Order-0 beam at `center`; fails at turning points and on the wrong branch.
pub fn build_beam(model: SymbolModel, z: Complex64, center: PhaseSpacePoint, h: f64, sign: BeamSign) -> Result<GaussianBeam> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", "must be positive"));
    }
    if (model.p0(center.x, center.xi) - z).norm() > LEVEL_SET_TOL {
        return Err(Error::invalid("center", "not on the level set p0 = z"));
    }
    let (mut dx, mut dxi) = (model.dx(center.x, center.xi), model.dxi(center.x, center.xi));
    if sign == BeamSign::Minus {
        dx = dx.conj();
        dxi = dxi.conj();
    }
    if dxi.norm() == 0.0 {
        return Err(Error::TurningPoint);
    }
    let phi = -dx / dxi;
    if !(phi.im > 0.0) {
        return Err(Error::invalid("center", format!("Im Φ = {} is not positive on this branch", phi.im)));
    }
    let cutoff_halfwidth = match model.domain() {
        Domain::Line => 1.0,
        Domain::Circle => PI / 2.0,
    };
    Ok(GaussianBeam { x0: center.x, xi0: center.xi, phi, h, cutoff_halfwidth, sign, domain: model.domain() })
}

/// `‖(P − z)u‖/‖u‖` (or with `(P − z)^*` for minus beams) for coefficient vector `u`.
pub fn relative_residual(p: &ComplexMatrix, z: Complex64, u: &[Complex64], sign: BeamSign) -> f64 {
    let shifted = p.shifted(z);
    let r = match sign {
        BeamSign::Plus => shifted.mul_vec(u),
        BeamSign::Minus => shifted.adjoint().mul_vec(u),
    };
    norm(&r) / norm(u)
}

/// Rank-one perturbation `δQ = −r u^*/‖u‖²` with `r = (P − z)u`, which makes
/// `z` an exact eigenvalue of `P + δQ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankOneCertificate {
    pub relative_residual: f64,
    pub perturbation_norm: f64,
    /// `min |λ − z|` over eigenvalues of `P + δQ`.
    pub eigen_distance: f64,
    /// `σ_min(P + δQ − z)`.
    pub sigma_after: f64,
}

pub fn rank_one_certificate(p: &ComplexMatrix, z: Complex64, u: &[Complex64]) -> Result<RankOneCertificate> {
    let n = p.dim();
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.len() });
    }
    let r = p.shifted(z).mul_vec(u);
    let nu2: f64 = u.iter().map(|v| v.norm_sqr()).sum();
    if nu2 == 0.0 {
        return Err(Error::invalid("u", "must be nonzero"));
    }
    let dq = ComplexMatrix::from_fn(n, |i, j| -r[i] * u[j].conj() / nu2);
    let perturbed = p + &dq;
    let eigen_distance = eigenvalues(&perturbed)?.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min);
    Ok(RankOneCertificate {
        relative_residual: norm(&r) / nu2.sqrt(),
        perturbation_norm: operator_norm(&dq)?,
        eigen_distance,
        sigma_after: smallest_singular_value(&perturbed.shifted(z))?,
    })
}

/// Operator of `model` at `h`, sized to hold beams at `|z|`.
pub fn operator_for(model: SymbolModel, h: f64, z: Complex64) -> Result<DiscretizedOperator> {
    match model {
        SymbolModel::Harmonic => selfadjoint_ho(h, hermite_dimension(h, z.norm())),
        SymbolModel::Davies => davies_ho(h, hermite_dimension(h, z.norm())),
        SymbolModel::Hager => {
            // frequency window ±(|z| + 3)
            let k = ((z.norm() + 3.0) / h).ceil() as usize;
            hager_model(h, 2 * k + 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeReport {
    pub model: String,
    pub z: Complex64,
    pub sign: BeamSign,
    pub center: PhaseSpacePoint,
    pub phi: Complex64,
    pub h: Vec<f64>,
    pub dims: Vec<usize>,
    pub residuals: Vec<f64>,
    pub sigma_mins: Vec<f64>,
    /// `σ_min(P_h − z) ≤ residual` at every `h`.
    pub sigma_below_residual: bool,
    /// Residual moved by more than 10% when `N` was doubled.
    pub truncation_flags: Vec<bool>,
    pub mass_outside: Vec<f64>,
    /// Log-log slope of residual against `h`.
    pub slope: f64,
}

struct HPoint {
    dim: usize,
    residual: f64,
    sigma_min: f64,
    flagged: bool,
    mass_outside: f64,
}

fn residual_at(model: SymbolModel, z: Complex64, center: PhaseSpacePoint, h: f64, sign: BeamSign) -> Result<HPoint> {
    let beam = build_beam(model, z, center, h, sign)?;
    let op = operator_for(model, h, z)?;
    let n = op.dim();
    let u = beam.coefficients(op.basis, n)?;
    let residual = relative_residual(&op.matrix, z, &u, sign);
    let n2 = if op.basis == Basis::Fourier { 2 * n + 1 } else { 2 * n };
    let big = DiscretizedOperator::build(op.model, h, n2)?;
    let u2 = beam.coefficients(big.basis, n2)?;
    let residual2 = relative_residual(&big.matrix, z, &u2, sign);
    let sigma_min = ResolventEvaluator::new(&op.matrix)?.sigma_min(z)?;
    Ok(HPoint {
        dim: n,
        residual,
        sigma_min,
        flagged: (residual2 / residual - 1.0).abs() > TRUNCATION_FLAG,
        mass_outside: beam.mass_outside(),
    })
}

/// Beam residuals along `h_list` at fixed `z`, with the fitted decay exponent.
pub fn residual_decay(model: SymbolModel, z: Complex64, h_list: &[f64], sign: BeamSign) -> Result<QuasimodeReport> {
    if h_list.len() < 2 {
        return Err(Error::invalid("h_list", "needs at least two values"));
    }
    let center = beam_center(model, z, sign)?;
    let points: Vec<Result<HPoint>> = h_list.par_iter().map(|&h| residual_at(model, z, center, h, sign)).collect();
    let points: Vec<HPoint> = points.into_iter().collect::<Result<_>>()?;
    let residuals: Vec<f64> = points.iter().map(|p| p.residual).collect();
    let sigma_mins: Vec<f64> = points.iter().map(|p| p.sigma_min).collect();
    let slope = fit::log_log_slope(h_list, &residuals)?;
    let phi = build_beam(model, z, center, h_list[0], sign)?.phi;
    Ok(QuasimodeReport {
        model: model.name().to_string(),
        z,
        sign,
        center,
        phi,
        h: h_list.to_vec(),
        dims: points.iter().map(|p| p.dim).collect(),
        sigma_below_residual: sigma_mins.iter().zip(&residuals).all(|(s, r)| s <= r),
        residuals,
        sigma_mins,
        truncation_flags: points.iter().map(|p| p.flagged).collect(),
        mass_outside: points.iter().map(|p| p.mass_outside).collect(),
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jordan_vectors() {
        let q = jordan_quasimode(10, c(0.0, 0.0)).unwrap();
        assert_eq!(q.vector[0], c(1.0, 0.0));
        assert!(q.vector[1..].iter().all(|v| *v == c(0.0, 0.0)));
        assert_eq!(q.residual, 0.0);
        let z = c(0.5, 0.0);
        let q = jordan_quasimode(10, z).unwrap();
        assert!((q.residual / 0.5f64.powi(10) - 1.0).abs() < 1e-12);
        let closed = 0.5f64.powi(10) * (1.0 - 0.25f64).sqrt() / (1.0 - 0.25f64.powi(10)).sqrt();
        assert!((q.relative_residual / closed - 1.0).abs() < 1e-12);
        assert!(jordan_quasimode(5, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let n = 40;
        let dy = 0.01;
        let ys: Vec<f64> = (-1500..=1500).map(|k| k as f64 * dy).collect();
        let table: Vec<Vec<f64>> = ys.iter().map(|&y| hermite_functions(y, n)).collect();
        for a in [0, 1, 7, 39] {
            for b in [0, 1, 7, 39] {
                let ip: f64 = table.iter().map(|row| row[a] * row[b]).sum::<f64>() * dy;
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-10, "<{a},{b}> = {ip}");
            }
        }
        // deep tail: no overflow or NaN
        assert!(hermite_functions(45.0, 1200).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn davies_centers_and_phase() {
        let z = c(1.0, 1.0);
        let plus = beam_center(SymbolModel::Davies, z, BeamSign::Plus).unwrap();
        assert!((plus.x + 1.0).abs() < 1e-9 && (plus.xi - 1.0).abs() < 1e-9, "{plus:?}");
        let minus = beam_center(SymbolModel::Davies, z, BeamSign::Minus).unwrap();
        assert!((minus.x - 1.0).abs() < 1e-9 && (minus.xi - 1.0).abs() < 1e-9, "{minus:?}");
        let beam = build_beam(SymbolModel::Davies, z, plus, 0.01, BeamSign::Plus).unwrap();
        assert!((beam.phi - c(0.0, 1.0)).norm() < 1e-8);
        let z2 = c(4.0, 1.0);
        let ctr = beam_center(SymbolModel::Davies, z2, BeamSign::Plus).unwrap();
        let b2 = build_beam(SymbolModel::Davies, z2, ctr, 0.01, BeamSign::Plus).unwrap();
        assert!((b2.phi.im - (ctr.x / ctr.xi).abs()).abs() < 1e-8);
        assert_eq!(beam_center(SymbolModel::Harmonic, c(1.0, 0.5), BeamSign::Plus), Err(Error::NoAdmissibleCenter));
        assert_eq!(beam_center(SymbolModel::Harmonic, c(1.0, 0.0), BeamSign::Plus), Err(Error::NoAdmissibleCenter));
    }

    #[test]
    fn hager_plus_beam_has_positive_cosine() {
        let z = c(0.0, 0.2);
        let ctr = beam_center(SymbolModel::Hager, z, BeamSign::Plus).unwrap();
        assert!(ctr.x.cos() > 0.0);
        let beam = build_beam(SymbolModel::Hager, z, ctr, 0.05, BeamSign::Plus).unwrap();
        assert!((beam.phi.im - ctr.x.cos()).abs() < 1e-9);
        let wrong = PhaseSpacePoint::new(PI - ctr.x, -(PI - ctr.x).cos());
        assert!((SymbolModel::Hager.p0(wrong.x, wrong.xi) - z).norm() < 1e-9);
        assert!(build_beam(SymbolModel::Hager, z, wrong, 0.05, BeamSign::Plus).is_err());
    }

    #[test]
    fn davies_residual_matches_gaussian_moments() {
        // ‖((−1+i)s² + h)u‖/‖u‖ = √1.5·h for |u|² = e^{−s²/h}
        let z = c(1.0, 1.0);
        for h in [0.04, 0.01] {
            let ctr = beam_center(SymbolModel::Davies, z, BeamSign::Plus).unwrap();
            let beam = build_beam(SymbolModel::Davies, z, ctr, h, BeamSign::Plus).unwrap();
            let op = operator_for(SymbolModel::Davies, h, z).unwrap();
            let u = beam.coefficients(op.basis, op.dim()).unwrap();
            let r = relative_residual(&op.matrix, z, &u, BeamSign::Plus);
            assert!((r / (1.5f64.sqrt() * h) - 1.0).abs() < 0.02, "h={h}: {r}");
        }
    }

    #[test]
    fn minus_beam_is_an_adjoint_quasimode() {
        let z = c(1.0, 1.0);
        let h = 0.02;
        let ctr = beam_center(SymbolModel::Davies, z, BeamSign::Minus).unwrap();
        let beam = build_beam(SymbolModel::Davies, z, ctr, h, BeamSign::Minus).unwrap();
        let op = operator_for(SymbolModel::Davies, h, z).unwrap();
        let u = beam.coefficients(op.basis, op.dim()).unwrap();
        let r = relative_residual(&op.matrix, z, &u, BeamSign::Minus);
        assert!(r < 2.0 * h, "{r}");
    }

    #[test]
    fn certificate_on_small_davies() {
        let z = c(1.0, 1.0);
        let h = 0.1;
        let ctr = beam_center(SymbolModel::Davies, z, BeamSign::Plus).unwrap();
        let beam = build_beam(SymbolModel::Davies, z, ctr, h, BeamSign::Plus).unwrap();
        let op = operator_for(SymbolModel::Davies, h, z).unwrap();
        let u = beam.coefficients(op.basis, op.dim()).unwrap();
        let cert = rank_one_certificate(&op.matrix, z, &u).unwrap();
        assert!((cert.perturbation_norm / cert.relative_residual - 1.0).abs() < 1e-10);
        assert!(cert.eigen_distance < 1e-8, "{}", cert.eigen_distance);
        assert!(cert.sigma_after < 1e-12);
    }

    #[test]
    fn mass_concentrates_as_h_shrinks() {
        let z = c(1.0, 1.0);
        let ctr = beam_center(SymbolModel::Davies, z, BeamSign::Plus).unwrap();
        let m: Vec<f64> = [0.04, 0.01, 0.0025]
            .iter()
            .map(|&h| build_beam(SymbolModel::Davies, z, ctr, h, BeamSign::Plus).unwrap().mass_outside())
            .collect();
        assert!(m[0] > m[1] && m[1] > m[2], "{m:?}");
        // |u|² ∝ e^{−s²/h}: mass outside r is erfc(r/√h), 0.0100337 at h = 0.0025.
        // Nodes are h/8 apart, so each of the two edges at ±r is off by at most one cell.
        let h: f64 = 0.0025;
        let r = h.powf(0.4);
        let cell = (h / 8.0) * (-r * r / h).exp() / (PI * h).sqrt();
        assert!((m[2] - 0.010033675558).abs() <= 2.0 * cell, "{} vs cell {cell}", m[2]);
    }
}
