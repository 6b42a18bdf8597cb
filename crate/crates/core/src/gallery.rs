//! Model operators and their principal symbols.
//!
//! Oscillator models live in the h-scaled Hermite basis with ladder
//! conventions `x = √(h/2)(a + a†)` and `hD_x = i√(h/2)(a† − a)`, so
//! `x² = (h/2)(a + a†)²` and `(hD_x)² = −(h/2)(a† − a)²` are banded. The circle
//! model lives in the Fourier basis `e_k = e^{ikx}/√(2π)` with `k` ascending.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{ComplexMatrix, ResolventEvaluator};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Line,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Hermite,
    Fourier,
    Canonical,
}

/// Names addressable from configuration files and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Jordan,
    Ho,
    Davies,
    Hager,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Jordan => "jordan",
            Self::Ho => "ho",
            Self::Davies => "davies",
            Self::Hager => "hager",
        }
    }

    pub fn symbol(self) -> Option<SymbolModel> {
        match self {
            Self::Jordan => None,
            Self::Ho => Some(SymbolModel::Harmonic),
            Self::Davies => Some(SymbolModel::Davies),
            Self::Hager => Some(SymbolModel::Hager),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jordan" => Ok(Self::Jordan),
            "ho" => Ok(Self::Ho),
            "davies" => Ok(Self::Davies),
            "hager" => Ok(Self::Hager),
            other => Err(Error::invalid("model", format!("unknown model `{other}` (jordan, ho, davies, hager)"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// Points within this distance of a rectangle edge count as inside.
pub const BOUNDARY_TIE: f64 = 1e-12;

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = Self { re_min, re_max, im_min, im_max };
        if ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("rectangle", "bounds must be finite"));
        }
        if re_min > re_max || im_min > im_max {
            return Err(Error::invalid("rectangle", "expected re_min ≤ re_max and im_min ≤ im_max"));
        }
        Ok(r)
    }

    /// Membership with edge ties resolved as inside.
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min - BOUNDARY_TIE
            && z.re <= self.re_max + BOUNDARY_TIE
            && z.im >= self.im_min - BOUNDARY_TIE
            && z.im <= self.im_max + BOUNDARY_TIE
    }

    pub fn max_modulus(&self) -> f64 {
        let re = self.re_min.abs().max(self.re_max.abs());
        let im = self.im_min.abs().max(self.im_max.abs());
        re.hypot(im)
    }
}

/// Axis-aligned box `[x_min, x_max] × [xi_min, xi_max]` in phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub x_min: f64,
    pub x_max: f64,
    pub xi_min: f64,
    pub xi_max: f64,
}

impl PhaseBox {
    pub fn new(x_min: f64, x_max: f64, xi_min: f64, xi_max: f64) -> Result<Self> {
        if ![x_min, x_max, xi_min, xi_max].iter().all(|v| v.is_finite()) || x_min >= x_max || xi_min >= xi_max {
            return Err(Error::invalid("phase_box", "expected finite bounds with min < max"));
        }
        Ok(Self { x_min, x_max, xi_min, xi_max })
    }

    /// Box containing `{ρ : |p0(ρ)| ≤ radius}`: one period in `x` for circle
    /// symbols, `[−L, L]²` otherwise.
    pub fn for_modulus(model: SymbolModel, radius: f64) -> Self {
        let l = model.phase_radius(radius) * 1.1 + 0.25;
        match model.domain() {
            Domain::Circle => Self { x_min: 0.0, x_max: 2.0 * PI, xi_min: -l, xi_max: l },
            Domain::Line => Self { x_min: -l, x_max: l, xi_min: -l, xi_max: l },
        }
    }

    /// Box containing the preimage of a rectangle.
    pub fn covering(model: SymbolModel, omega: &Rectangle) -> Self {
        Self::for_modulus(model, omega.max_modulus())
    }
}

/// Principal symbols of the gallery, with exact derivatives up to order two.
///
/// All gallery symbols have vanishing subprincipal part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolModel {
    /// `ξ² + x²`.
    Harmonic,
    /// `ξ² + i x²`.
    Davies,
    /// `ξ + e^{−ix}` on the circle.
    Hager,
}

impl SymbolModel {
    pub fn name(self) -> &'static str {
        match self {
            Self::Harmonic => "ho",
            Self::Davies => "davies",
            Self::Hager => "hager",
        }
    }

    pub fn p0(self, x: f64, xi: f64) -> Complex64 {
        match self {
            Self::Harmonic => c(xi * xi + x * x, 0.0),
            Self::Davies => c(xi * xi, x * x),
            Self::Hager => c(xi, 0.0) + (-I * x).exp(),
        }
    }

    pub fn dx(self, x: f64, _xi: f64) -> Complex64 {
        match self {
            Self::Harmonic => c(2.0 * x, 0.0),
            Self::Davies => c(0.0, 2.0 * x),
            Self::Hager => -I * (-I * x).exp(),
        }
    }

    pub fn dxi(self, _x: f64, xi: f64) -> Complex64 {
        match self {
            Self::Harmonic | Self::Davies => c(2.0 * xi, 0.0),
            Self::Hager => c(1.0, 0.0),
        }
    }

    pub fn dxx(self, x: f64, _xi: f64) -> Complex64 {
        match self {
            Self::Harmonic => c(2.0, 0.0),
            Self::Davies => c(0.0, 2.0),
            Self::Hager => -(-I * x).exp(),
        }
    }

    pub fn dxxi(self, _x: f64, _xi: f64) -> Complex64 {
        c(0.0, 0.0)
    }

    pub fn dxixi(self, _x: f64, _xi: f64) -> Complex64 {
        match self {
            Self::Harmonic | Self::Davies => c(2.0, 0.0),
            Self::Hager => c(0.0, 0.0),
        }
    }

    /// Order function `m(x, ξ) ≥ 1`.
    pub fn order_function(self, x: f64, xi: f64) -> f64 {
        match self {
            Self::Harmonic | Self::Davies => 1.0 + xi * xi + x * x,
            Self::Hager => 1.0 + xi.abs(),
        }
    }

    /// `(C0, N0)` with `m(ρ) ≤ C0⟨ρ−μ⟩^{N0} m(μ)` and `|p0(ρ) − z0| ≥ m(ρ)/C0`.
    pub fn order_constants(self) -> (f64, u32) {
        match self {
            Self::Harmonic | Self::Davies => (2.0, 2),
            Self::Hager => (3.0, 1),
        }
    }

    /// Ellipticity anchor `z0`.
    pub fn anchor(self) -> Complex64 {
        match self {
            Self::Harmonic | Self::Davies => c(-1.0, 0.0),
            Self::Hager => c(0.0, 2.0),
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            Self::Harmonic | Self::Davies => Domain::Line,
            Self::Hager => Domain::Circle,
        }
    }

    pub fn natural_basis(self) -> Basis {
        match self.domain() {
            Domain::Line => Basis::Hermite,
            Domain::Circle => Basis::Fourier,
        }
    }

    /// Whether `p0(x, ξ) = p0(x, −ξ)`.
    pub fn xi_symmetric(self) -> bool {
        matches!(self, Self::Harmonic | Self::Davies)
    }

    pub fn is_real(self) -> bool {
        matches!(self, Self::Harmonic)
    }

    /// Bound `L` with `|p0(x, ξ)| ≤ r ⇒ |ξ| ≤ L` (and `|x| ≤ L` on the line).
    pub fn phase_radius(self, r: f64) -> f64 {
        let r = r.max(0.0);
        match self {
            Self::Harmonic | Self::Davies => r.sqrt(),
            Self::Hager => r + 1.0,
        }
    }

    /// Reduces `x` to `[0, 2π)` on the circle; identity on the line.
    pub fn reduce(self, x: f64) -> f64 {
        match self.domain() {
            Domain::Line => x,
            Domain::Circle => x.rem_euclid(2.0 * PI),
        }
    }
}

/// A matrix realisation of `p^w(x, hD_x)` (or a plain matrix model).
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub matrix: ComplexMatrix,
    pub h: f64,
    pub basis: Basis,
    pub symbol: Option<SymbolModel>,
    pub model: ModelKind,
}

impl DiscretizedOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn evaluator(&self) -> Result<ResolventEvaluator> {
        ResolventEvaluator::new(&self.matrix)
    }

    pub fn resolvent_norm(&self, z: Complex64) -> Result<f64> {
        self.evaluator()?.resolvent_norm(z)
    }

    pub fn build(model: ModelKind, h: f64, n: usize) -> Result<Self> {
        match model {
            ModelKind::Jordan => jordan_block(n),
            ModelKind::Ho => selfadjoint_ho(h, n),
            ModelKind::Davies => davies_ho(h, n),
            ModelKind::Hager => hager_model(h, n),
        }
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("h", format!("must be positive and finite, got {h}")));
    }
    Ok(())
}

/// Nilpotent shift with ones on the first superdiagonal.
pub fn jordan_block(n: usize) -> Result<DiscretizedOperator> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    let matrix = ComplexMatrix::from_fn(n, |i, j| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    Ok(DiscretizedOperator { matrix, h: 1.0, basis: Basis::Canonical, symbol: None, model: ModelKind::Jordan })
}

/// `(hD_x)² + x²`, diagonal `(2n+1)h` in the h-scaled Hermite basis.
pub fn selfadjoint_ho(h: f64, n: usize) -> Result<DiscretizedOperator> {
    check_h(h)?;
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    let diag: Vec<Complex64> = (0..n).map(|k| c((2 * k + 1) as f64 * h, 0.0)).collect();
    Ok(DiscretizedOperator {
        matrix: ComplexMatrix::from_diagonal(&diag),
        h,
        basis: Basis::Hermite,
        symbol: Some(SymbolModel::Harmonic),
        model: ModelKind::Ho,
    })
}

/// `(hD_x)² + i x²` in the h-scaled Hermite basis (pentadiagonal, complex symmetric).
pub fn davies_ho(h: f64, n: usize) -> Result<DiscretizedOperator> {
    check_h(h)?;
    if n < 4 {
        return Err(Error::invalid("N", "must be at least 4"));
    }
    let half = 0.5 * h;
    let matrix = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            c(1.0, 1.0) * (half * (2 * i + 1) as f64)
        } else if i.abs_diff(j) == 2 {
            let k = i.min(j) as f64;
            c(-1.0, 1.0) * (half * ((k + 1.0) * (k + 2.0)).sqrt())
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(DiscretizedOperator { matrix, h, basis: Basis::Hermite, symbol: Some(SymbolModel::Davies), model: ModelKind::Davies })
}

/// `hD_x + e^{−ix}` on the circle, Fourier modes `k = −(N−1)/2 ..= (N−1)/2`.
pub fn hager_model(h: f64, n: usize) -> Result<DiscretizedOperator> {
    check_h(h)?;
    if n % 2 == 0 {
        return Err(Error::invalid("N", format!("must be odd for the circle model, got {n}")));
    }
    let kmax = (n / 2) as f64;
    let matrix = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            c(h * (i as f64 - kmax), 0.0)
        } else if j == i + 1 {
            // e^{−ix} e_k = e_{k−1}
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(DiscretizedOperator { matrix, h, basis: Basis::Fourier, symbol: Some(SymbolModel::Hager), model: ModelKind::Hager })
}

/// Smallest Hermite dimension with `(2N+1)h ≥ 4|z|`.
pub fn hermite_dimension(h: f64, z_abs: f64) -> usize {
    let n = ((4.0 * z_abs / h - 1.0) / 2.0).ceil();
    (n.max(4.0)) as usize
}

/// Phase-space samples per axis used to locate `p0^{-1}(Ω)`.
const COVERAGE_SAMPLES: usize = 801;

/// Whether the first `n` basis modes cover `p0^{-1}(Ω)` energetically.
///
/// Hermite: `(2N+1)h ≥ 2·max m` on the preimage. Fourier: the frequency window
/// `h(N−1)/2` must reach `max |ξ|` on the preimage. An empty preimage is
/// always covered. The preimage maximum is taken over a dense sample and
/// padded by one sample pitch.
pub fn ho_basis_coverage(model: SymbolModel, n: usize, h: f64, omega: &Rectangle) -> bool {
    let bx = PhaseBox::covering(model, omega);
    let k = COVERAGE_SAMPLES;
    let dx = (bx.x_max - bx.x_min) / (k - 1) as f64;
    let dxi = (bx.xi_max - bx.xi_min) / (k - 1) as f64;
    let mut max_m: Option<f64> = None;
    let mut max_xi: Option<f64> = None;
    for a in 0..k {
        let x = bx.x_min + a as f64 * dx;
        for b in 0..k {
            let xi = bx.xi_min + b as f64 * dxi;
            if omega.contains(model.p0(x, xi)) {
                let m = model.order_function(x.abs() + dx, xi.abs() + dxi);
                max_m = Some(max_m.map_or(m, |v: f64| v.max(m)));
                let a_xi = xi.abs() + dxi;
                max_xi = Some(max_xi.map_or(a_xi, |v: f64| v.max(a_xi)));
            }
        }
    }
    match model.natural_basis() {
        Basis::Fourier => max_xi.map_or(true, |xi| h * (n as f64 - 1.0) / 2.0 >= xi),
        _ => max_m.map_or(true, |m| (2 * n + 1) as f64 * h >= 2.0 * m),
    }
}
