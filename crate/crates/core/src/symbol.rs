//! Classical spectrum, Poisson brackets, bracket order, sublevel volumes and
//! Weyl predictions for [`SymbolModel`]s.
//!
//! Brackets use `{a, b} = ∂_ξa·∂_xb − ∂_xa·∂_ξb`. With `p1 = Re p0` and
//! `p2 = Im p0`, `(1/2i){p̄0, p0} = {p1, p2}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fit;
use crate::gallery::{Domain, PhaseBox, Rectangle, SymbolModel};
use crate::pseudospectrum::ComplexGrid;
use crate::{Error, Result};

/// Brackets with modulus at or below this are treated as vanishing in Λ± tests.
pub const BRACKET_VANISHING: f64 = 1e-9;
/// Threshold for a nonvanishing bracket in order detection.
pub const ORDER_THRESHOLD: f64 = 1e-6;
/// Level-set points are refined until `|p0(ρ) − z|` is below this.
pub const LEVEL_SET_TOL: f64 = 1e-8;
/// Longest bracket word supported by [`iterated_bracket`].
pub const MAX_WORD: usize = 4;

const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub x: f64,
    pub xi: f64,
}

impl PhaseSpacePoint {
    pub fn new(x: f64, xi: f64) -> Self {
        Self { x, xi }
    }
}

/// `Re p0` or `Im p0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
}

impl Part {
    fn of(self, z: Complex64) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }

    /// Parses `1` as `Re` and `2` as `Im`.
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Part::Re),
            2 => Ok(Part::Im),
            _ => Err(Error::invalid("word", format!("letters must be 1 or 2, got {i}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketSign {
    LambdaPlus,
    LambdaMinus,
    Vanishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Exactly(usize),
    GeCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub point: PhaseSpacePoint,
    pub half_imag_bracket: f64,
    pub order: Order,
    pub classification: BracketSign,
}

/// Derivatives of one real part of `p0` up to order two.
#[derive(Clone, Copy)]
struct Jet {
    x: f64,
    xi: f64,
    xx: f64,
    xxi: f64,
    xixi: f64,
}

fn jet(model: SymbolModel, part: Part, rho: PhaseSpacePoint) -> Jet {
    let (x, xi) = (rho.x, rho.xi);
    Jet {
        x: part.of(model.dx(x, xi)),
        xi: part.of(model.dxi(x, xi)),
        xx: part.of(model.dxx(x, xi)),
        xxi: part.of(model.dxxi(x, xi)),
        xixi: part.of(model.dxixi(x, xi)),
    }
}

fn classify(value: f64) -> BracketSign {
    if value < -BRACKET_VANISHING {
        BracketSign::LambdaPlus
    } else if value > BRACKET_VANISHING {
        BracketSign::LambdaMinus
    } else {
        BracketSign::Vanishing
    }
}

/// `(1/2i){p̄0, p0}(ρ) = {Re p0, Im p0}(ρ)` from exact first derivatives.
pub fn half_imag_bracket(model: SymbolModel, rho: PhaseSpacePoint) -> f64 {
    let dx = model.dx(rho.x, rho.xi);
    let dxi = model.dxi(rho.x, rho.xi);
    dxi.re * dx.im - dx.re * dxi.im
}

/// Gradient `(∂_x, ∂_ξ)` of the bracket `{b, c}` from second derivatives.
fn pair_bracket_gradient(b: Jet, c: Jet) -> (f64, f64) {
    // {b,c} = b_ξ c_x − b_x c_ξ
    let gx = b.xxi * c.x + b.xi * c.xx - b.xx * c.xi - b.x * c.xxi;
    let gxi = b.xixi * c.x + b.xi * c.xxi - b.xxi * c.xi - b.x * c.xixi;
    (gx, gxi)
}

fn bracket_len3(model: SymbolModel, word: &[Part], rho: PhaseSpacePoint) -> f64 {
    let a = jet(model, word[0], rho);
    let b = jet(model, word[1], rho);
    let c = jet(model, word[2], rho);
    let (gx, gxi) = pair_bracket_gradient(b, c);
    a.xi * gx - a.x * gxi
}

/// Nested bracket `{p_{i1}, {p_{i2}, … {p_{i(k−1)}, p_{ik}}}}(ρ)`.
///
/// Words of length 2 and 3 are exact. Length 4 differentiates the exact
/// length-3 bracket by central differences.
pub fn iterated_bracket(model: SymbolModel, word: &[Part], rho: PhaseSpacePoint) -> Result<f64> {
    match word.len() {
        0 | 1 => Err(Error::invalid("word", "needs at least two letters")),
        2 => {
            let a = jet(model, word[0], rho);
            let b = jet(model, word[1], rho);
            Ok(a.xi * b.x - a.x * b.xi)
        }
        3 => Ok(bracket_len3(model, word, rho)),
        4 => {
            let a = jet(model, word[0], rho);
            let inner = &word[1..];
            let s = FD_STEP;
            let at = |x: f64, xi: f64| bracket_len3(model, inner, PhaseSpacePoint::new(x, xi));
            let gx = (at(rho.x + s, rho.xi) - at(rho.x - s, rho.xi)) / (2.0 * s);
            let gxi = (at(rho.x, rho.xi + s) - at(rho.x, rho.xi - s)) / (2.0 * s);
            Ok(a.xi * gx - a.x * gxi)
        }
        len => Err(Error::UnsupportedDepth { len, max: MAX_WORD }),
    }
}

fn words(len: usize) -> impl Iterator<Item = Vec<Part>> {
    (0..1usize << len).map(move |bits| {
        (0..len).map(|k| if bits >> k & 1 == 0 { Part::Re } else { Part::Im }).collect()
    })
}

/// Smallest `j ≤ cap` such that some bracket of length `j + 1` exceeds
/// [`ORDER_THRESHOLD`] somewhere on the sample.
pub fn order_at(model: SymbolModel, z: Complex64, sample: &[PhaseSpacePoint], cap: usize) -> Result<Order> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if cap == 0 {
        return Err(Error::invalid("cap", "must be at least 1"));
    }
    if let Some(bad) = sample.iter().find(|r| (model.p0(r.x, r.xi) - z).norm() > LEVEL_SET_TOL) {
        return Err(Error::invalid("level_set_sample", format!("point ({}, {}) is not on the level set", bad.x, bad.xi)));
    }
    for j in 1..=cap {
        if j + 1 > MAX_WORD {
            return Err(Error::UnsupportedDepth { len: j + 1, max: MAX_WORD });
        }
        for word in words(j + 1) {
            for &rho in sample {
                if iterated_bracket(model, &word, rho)?.abs() > ORDER_THRESHOLD {
                    return Ok(Order::Exactly(j));
                }
            }
        }
    }
    Ok(Order::GeCap)
}

/// Full report at one level-set point.
pub fn bracket_report(model: SymbolModel, rho: PhaseSpacePoint, cap: usize) -> Result<BracketReport> {
    let z = model.p0(rho.x, rho.xi);
    let value = half_imag_bracket(model, rho);
    Ok(BracketReport {
        point: rho,
        half_imag_bracket: value,
        order: order_at(model, z, &[rho], cap)?,
        classification: classify(value),
    })
}

/// Damped Gauss–Newton on `F(ρ) = p0(ρ) − z` viewed as a map `R² → R²`.
fn refine(model: SymbolModel, z: Complex64, mut rho: PhaseSpacePoint) -> Option<PhaseSpacePoint> {
    let mut lambda = 1e-6;
    let mut r = model.p0(rho.x, rho.xi) - z;
    for _ in 0..200 {
        if r.norm() <= 0.1 * LEVEL_SET_TOL {
            break;
        }
        let dx = model.dx(rho.x, rho.xi);
        let dxi = model.dxi(rho.x, rho.xi);
        // J = [[dx.re, dxi.re], [dx.im, dxi.im]]; solve (JᵀJ + λI) s = −Jᵀr
        let (a, b, cc, d) = (dx.re, dxi.re, dx.im, dxi.im);
        let g0 = a * r.re + cc * r.im;
        let g1 = b * r.re + d * r.im;
        let m00 = a * a + cc * cc;
        let m01 = a * b + cc * d;
        let m11 = b * b + d * d;
        let mut accepted = false;
        for _ in 0..30 {
            let scale = lambda * (1.0 + m00.max(m11));
            let (p, q, s) = (m00 + scale, m01, m11 + scale);
            let det = p * s - q * q;
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let sx = -(s * g0 - q * g1) / det;
            let sxi = -(p * g1 - q * g0) / det;
            let trial = PhaseSpacePoint::new(rho.x + sx, rho.xi + sxi);
            let tr = model.p0(trial.x, trial.xi) - z;
            if tr.norm() < r.norm() {
                rho = trial;
                r = tr;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (r.norm() <= LEVEL_SET_TOL).then(|| PhaseSpacePoint::new(model.reduce(rho.x), rho.xi))
}

fn same_point(model: SymbolModel, a: PhaseSpacePoint, b: PhaseSpacePoint, tol: f64) -> bool {
    let mut dx = (a.x - b.x).abs();
    if model.domain() == Domain::Circle {
        dx = dx.min(2.0 * PI - dx);
    }
    dx <= tol && (a.xi - b.xi).abs() <= tol
}

/// Points of `p0^{-1}(z)` inside `phase_box`, sorted by `(x, ξ)`.
///
/// Seeds are local minima of `|p0 − z|` over a `resolution × resolution`
/// sample, each refined by damped Newton to [`LEVEL_SET_TOL`]. Continuous
/// level sets (real symbols at real `z`) yield a sample of points.
pub fn level_set(model: SymbolModel, z: Complex64, phase_box: &PhaseBox, resolution: usize) -> Result<Vec<PhaseSpacePoint>> {
    if resolution < 3 {
        return Err(Error::invalid("resolution", "must be at least 3"));
    }
    let k = resolution;
    let dx = (phase_box.x_max - phase_box.x_min) / (k - 1) as f64;
    let dxi = (phase_box.xi_max - phase_box.xi_min) / (k - 1) as f64;
    let at = |a: usize, b: usize| PhaseSpacePoint::new(phase_box.x_min + a as f64 * dx, phase_box.xi_min + b as f64 * dxi);
    let values: Vec<f64> = (0..k * k)
        .into_par_iter()
        .map(|idx| {
            let p = at(idx / k, idx % k);
            (model.p0(p.x, p.xi) - z).norm()
        })
        .collect();
    let v = |a: usize, b: usize| values[a * k + b];
    let mut seeds = Vec::new();
    for a in 0..k {
        for b in 0..k {
            let here = v(a, b);
            let mut minimal = true;
            'nbr: for da in -1i64..=1 {
                for db in -1i64..=1 {
                    if da == 0 && db == 0 {
                        continue;
                    }
                    let (na, nb) = (a as i64 + da, b as i64 + db);
                    if na < 0 || nb < 0 || na >= k as i64 || nb >= k as i64 {
                        continue;
                    }
                    if v(na as usize, nb as usize) < here {
                        minimal = false;
                        break 'nbr;
                    }
                }
            }
            if minimal {
                seeds.push(at(a, b));
            }
        }
    }
    let refined: Vec<Option<PhaseSpacePoint>> = seeds.par_iter().map(|&s| refine(model, z, s)).collect();
    let tol = 1e-6_f64.max(0.5 * dx.min(dxi));
    let mut out: Vec<PhaseSpacePoint> = Vec::new();
    for p in refined.into_iter().flatten() {
        let inside = p.xi >= phase_box.xi_min - dxi
            && p.xi <= phase_box.xi_max + dxi
            && (model.domain() == Domain::Circle || (p.x >= phase_box.x_min - dx && p.x <= phase_box.x_max + dx));
        if inside && !out.iter().any(|q| same_point(model, *q, p, tol)) {
            out.push(p);
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.xi.total_cmp(&b.xi)));
    Ok(out)
}

/// Sampled image points `(p0(ρ), bracket(ρ))` of a phase box.
fn image_samples(model: SymbolModel, phase_box: &PhaseBox, resolution: usize) -> Vec<(Complex64, f64)> {
    let k = resolution.max(2);
    let dx = (phase_box.x_max - phase_box.x_min) / (k - 1) as f64;
    let dxi = (phase_box.xi_max - phase_box.xi_min) / (k - 1) as f64;
    (0..k * k)
        .into_par_iter()
        .map(|idx| {
            let rho = PhaseSpacePoint::new(phase_box.x_min + (idx / k) as f64 * dx, phase_box.xi_min + (idx % k) as f64 * dxi);
            (model.p0(rho.x, rho.xi), half_imag_bracket(model, rho))
        })
        .collect()
}

/// Calls `mark(node_index, sample_index)` for every grid node within `pitch`
/// of a sample image.
fn for_nodes_near(grid: &ComplexGrid, samples: &[(Complex64, f64)], mut mark: impl FnMut(usize, usize)) {
    let pitch = grid.pitch();
    let (dre, dim) = (grid.dre(), grid.dim());
    for (s, &(w, _)) in samples.iter().enumerate() {
        let i_lo = ((w.re - pitch - grid.re_min) / dre).ceil().max(0.0);
        let i_hi = ((w.re + pitch - grid.re_min) / dre).floor().min((grid.nx - 1) as f64);
        let j_lo = ((w.im - pitch - grid.im_min) / dim).ceil().max(0.0);
        let j_hi = ((w.im + pitch - grid.im_min) / dim).floor().min((grid.ny - 1) as f64);
        if i_lo > i_hi || j_lo > j_hi {
            continue;
        }
        for j in j_lo as usize..=j_hi as usize {
            for i in i_lo as usize..=i_hi as usize {
                if (grid.node(i, j) - w).norm() <= pitch {
                    mark(grid.index(i, j), s);
                }
            }
        }
    }
}

/// Grid nodes within one pitch of the sampled image `p0(phase_box)`.
pub fn classical_spectrum_mask(model: SymbolModel, grid: &ComplexGrid, phase_box: &PhaseBox, resolution: usize) -> Vec<bool> {
    let samples = image_samples(model, phase_box, resolution);
    let mut mask = vec![false; grid.len()];
    for_nodes_near(grid, &samples, |node, _| mask[node] = true);
    mask
}

/// Membership of a grid node in the sampled `Λ+` and `Λ−`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaClass {
    pub plus: bool,
    pub minus: bool,
}

/// Classifies each grid node by the bracket signs of nearby sampled preimages.
pub fn lambda_pm_mask(model: SymbolModel, grid: &ComplexGrid, phase_box: &PhaseBox, resolution: usize) -> Vec<LambdaClass> {
    let samples = image_samples(model, phase_box, resolution);
    let mut out = vec![LambdaClass::default(); grid.len()];
    for_nodes_near(grid, &samples, |node, s| match classify(samples[s].1) {
        BracketSign::LambdaPlus => out[node].plus = true,
        BracketSign::LambdaMinus => out[node].minus = true,
        BracketSign::Vanishing => {}
    });
    out
}

/// Midpoint-rule measure of `{ρ ∈ phase_box : pred(p0(ρ))}`.
///
/// Fails with [`Error::BoxTooSmall`] if a boundary cell satisfies the
/// predicate (only the `ξ` edges count for circle symbols).
fn measure(model: SymbolModel, phase_box: &PhaseBox, resolution: usize, pred: impl Fn(Complex64) -> bool + Sync) -> Result<f64> {
    if resolution < 2 {
        return Err(Error::invalid("resolution", "must be at least 2"));
    }
    let k = resolution;
    let dx = (phase_box.x_max - phase_box.x_min) / k as f64;
    let dxi = (phase_box.xi_max - phase_box.xi_min) / k as f64;
    let circle = model.domain() == Domain::Circle;
    let (count, touches) = (0..k)
        .into_par_iter()
        .map(|a| {
            let x = phase_box.x_min + (a as f64 + 0.5) * dx;
            let mut count = 0u64;
            let mut touches = false;
            for b in 0..k {
                let xi = phase_box.xi_min + (b as f64 + 0.5) * dxi;
                if pred(model.p0(x, xi)) {
                    count += 1;
                    let edge = b == 0 || b == k - 1 || (!circle && (a == 0 || a == k - 1));
                    touches |= edge;
                }
            }
            (count, touches)
        })
        .reduce(|| (0, false), |l, r| (l.0 + r.0, l.1 || r.1));
    if touches {
        return Err(Error::BoxTooSmall);
    }
    Ok(count as f64 * dx * dxi)
}

/// `V_z(t) = Vol{ρ : |p0(ρ) − z|² ≤ t}` by the midpoint rule on
/// `resolution²` cells.
pub fn volume_v_z(model: SymbolModel, z: Complex64, t: f64, phase_box: &PhaseBox, resolution: usize) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", "must be finite and nonnegative"));
    }
    measure(model, phase_box, resolution, |p| (p - z).norm_sqr() <= t)
}

/// Default phase box for sublevel sets of `|p0 − z|² ≤ t_max`.
pub fn sublevel_box(model: SymbolModel, z: Complex64, t_max: f64) -> PhaseBox {
    PhaseBox::for_modulus(model, z.norm() + t_max.max(0.0).sqrt())
}

/// Least-squares slope of `log V_z(t)` against `log t`; zero volumes are dropped.
pub fn kappa_fit(model: SymbolModel, z: Complex64, t_list: &[f64], phase_box: &PhaseBox, resolution: usize) -> Result<f64> {
    if t_list.len() < 4 || !fit::is_geometric(t_list, 1e-9) {
        return Err(Error::invalid("t_list", "needs at least four geometric values"));
    }
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for &t in t_list {
        let v = volume_v_z(model, z, t, phase_box, resolution)?;
        if v > 0.0 {
            ts.push(t);
            vs.push(v);
        }
    }
    if ts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} nonzero volumes", ts.len())));
    }
    fit::log_log_slope(&ts, &vs)
}

/// `(2πh)^{-1} Vol p0^{-1}(Γ)` with Γ closed.
pub fn weyl_prediction(model: SymbolModel, gamma: &Rectangle, h: f64, phase_box: &PhaseBox, resolution: usize) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid("h", "must be positive"));
    }
    let vol = measure(model, phase_box, resolution, |p| gamma.contains(p))?;
    Ok(vol / (2.0 * PI * h))
}

/// Weyl curve `F(b) = (2πh)^{-1} Vol{ρ : Re p0 ∈ [re_min, re_max], im_min ≤ Im p0 ≤ b}`.
pub fn integrated_weyl_curve(
    model: SymbolModel,
    window: &Rectangle,
    b_values: &[f64],
    h: f64,
    phase_box: &PhaseBox,
    resolution: usize,
) -> Result<Vec<f64>> {
    b_values
        .iter()
        .map(|&b| {
            let slab = Rectangle { re_min: window.re_min, re_max: window.re_max, im_min: window.im_min, im_max: b.max(window.im_min) };
            if b < window.im_min {
                Ok(0.0)
            } else {
                weyl_prediction(model, &slab, h, phase_box, resolution)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fd_half_bracket(model: SymbolModel, rho: PhaseSpacePoint) -> f64 {
        let s = 1e-5;
        let d = |f: &dyn Fn(f64, f64) -> f64| {
            (
                (f(rho.x + s, rho.xi) - f(rho.x - s, rho.xi)) / (2.0 * s),
                (f(rho.x, rho.xi + s) - f(rho.x, rho.xi - s)) / (2.0 * s),
            )
        };
        let (re_x, re_xi) = d(&|x, xi| model.p0(x, xi).re);
        let (im_x, im_xi) = d(&|x, xi| model.p0(x, xi).im);
        re_xi * im_x - re_x * im_xi
    }

    #[test]
    fn half_bracket_closed_forms() {
        for (x, xi) in [(0.3, -1.2), (1.0, 1.0), (-2.0, 0.5)] {
            let rho = PhaseSpacePoint::new(x, xi);
            let dav = half_imag_bracket(SymbolModel::Davies, rho);
            assert!((dav - 4.0 * xi * x).abs() < 1e-12);
            assert!((dav - fd_half_bracket(SymbolModel::Davies, rho)).abs() < 1e-6);
            assert_eq!(half_imag_bracket(SymbolModel::Harmonic, rho), 0.0);
            let hag = half_imag_bracket(SymbolModel::Hager, rho);
            assert!((hag + x.cos()).abs() < 1e-12);
            assert!((hag - fd_half_bracket(SymbolModel::Hager, rho)).abs() < 1e-6);
        }
        assert_eq!(half_imag_bracket(SymbolModel::Hager, PhaseSpacePoint::new(0.0, 3.0)), -1.0);
    }

    #[test]
    fn iterated_brackets_of_the_quadratic_model() {
        let rho = PhaseSpacePoint::new(0.7, -1.3);
        let w = |s: &[u8]| s.iter().map(|&i| Part::from_index(i).unwrap()).collect::<Vec<_>>();
        let v = iterated_bracket(SymbolModel::Davies, &w(&[1, 1, 2]), rho).unwrap();
        assert!((v - 8.0 * rho.xi * rho.xi).abs() < 1e-12);
        let v = iterated_bracket(SymbolModel::Davies, &w(&[2, 1, 2]), rho).unwrap();
        assert!((v + 8.0 * rho.x * rho.x).abs() < 1e-12);
        // {p1,{p1,{p1,p2}}} = {ξ², 8ξ²} = 0, {p2,{p1,{p1,p2}}} = {x², 8ξ²} = −32 ξ x
        let v = iterated_bracket(SymbolModel::Davies, &w(&[1, 1, 1, 2]), rho).unwrap();
        assert!(v.abs() < 1e-5);
        let v = iterated_bracket(SymbolModel::Davies, &w(&[2, 1, 1, 2]), rho).unwrap();
        assert!((v + 32.0 * rho.x * rho.xi).abs() < 1e-5, "{v}");
        for word in [w(&[2, 1]), w(&[1, 2, 2]), w(&[2, 2, 1, 2])] {
            assert_eq!(iterated_bracket(SymbolModel::Harmonic, &word, rho).unwrap(), 0.0);
        }
        assert!(matches!(
            iterated_bracket(SymbolModel::Davies, &w(&[1, 2, 1, 2, 1]), rho),
            Err(Error::UnsupportedDepth { len: 5, max: 4 })
        ));
    }

    #[test]
    fn length_three_matches_finite_differences_of_length_two() {
        let s = 1e-5;
        for model in [SymbolModel::Davies, SymbolModel::Hager] {
            for word in words(3) {
                let rho = PhaseSpacePoint::new(0.4, 0.9);
                let inner = |x: f64, xi: f64| iterated_bracket(model, &word[1..], PhaseSpacePoint::new(x, xi)).unwrap();
                let gx = (inner(rho.x + s, rho.xi) - inner(rho.x - s, rho.xi)) / (2.0 * s);
                let gxi = (inner(rho.x, rho.xi + s) - inner(rho.x, rho.xi - s)) / (2.0 * s);
                let a = jet(model, word[0], rho);
                let oracle = a.xi * gx - a.x * gxi;
                assert!((iterated_bracket(model, &word, rho).unwrap() - oracle).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn level_sets_and_orders() {
        let z = c(1.0, 1.0);
        let bx = PhaseBox::for_modulus(SymbolModel::Davies, 2.0);
        let pts = level_set(SymbolModel::Davies, z, &bx, 201).unwrap();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            assert!((p.x.abs() - 1.0).abs() < 1e-8 && (p.xi.abs() - 1.0).abs() < 1e-8);
        }
        assert_eq!(order_at(SymbolModel::Davies, z, &pts, 3).unwrap(), Order::Exactly(1));

        let one = c(1.0, 0.0);
        let pts = level_set(SymbolModel::Davies, one, &bx, 201).unwrap();
        assert!(!pts.is_empty());
        assert_eq!(order_at(SymbolModel::Davies, one, &pts, 3).unwrap(), Order::Exactly(2));

        let zh = c(0.0, 0.2);
        let pts = level_set(SymbolModel::Hager, zh, &PhaseBox::for_modulus(SymbolModel::Hager, 1.0), 201).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(order_at(SymbolModel::Hager, zh, &pts, 3).unwrap(), Order::Exactly(1));

        assert_eq!(order_at(SymbolModel::Davies, z, &[], 3), Err(Error::EmptySample));
    }

    #[test]
    fn masks() {
        let grid = ComplexGrid::new(-1.0, 3.0, -1.0, 3.0, 41, 41).unwrap();
        let bx = PhaseBox::for_modulus(SymbolModel::Davies, 6.0);
        let mask = classical_spectrum_mask(SymbolModel::Davies, &grid, &bx, 601);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let z = grid.node(i, j);
                let inside = mask[grid.index(i, j)];
                if z.re > 0.15 && z.im > 0.15 {
                    assert!(inside, "{z}");
                }
                if z.re < -0.15 || z.im < -0.15 {
                    assert!(!inside, "{z}");
                }
            }
        }
        let lam = lambda_pm_mask(SymbolModel::Davies, &grid, &bx, 601);
        let k = grid.index(20, 20); // 1 + i
        assert_eq!(grid.node(20, 20), c(1.0, 1.0));
        assert!(lam[k].plus && lam[k].minus);
        let ho = lambda_pm_mask(SymbolModel::Harmonic, &grid, &PhaseBox::for_modulus(SymbolModel::Harmonic, 6.0), 301);
        assert!(ho.iter().all(|c| !c.plus && !c.minus));

        let hgrid = ComplexGrid::new(-1.0, 1.0, -2.0, 2.0, 21, 41).unwrap();
        let hmask = classical_spectrum_mask(SymbolModel::Hager, &hgrid, &PhaseBox::for_modulus(SymbolModel::Hager, 3.0), 601);
        for j in 0..hgrid.ny {
            for i in 0..hgrid.nx {
                let z = hgrid.node(i, j);
                assert_eq!(hmask[hgrid.index(i, j)], z.im.abs() <= 1.0 + 1e-9, "{z}");
            }
        }
        let hl = lambda_pm_mask(SymbolModel::Hager, &hgrid, &PhaseBox::for_modulus(SymbolModel::Hager, 3.0), 601);
        let at = hgrid.index(10, 22); // 0.2i
        assert!((hgrid.node(10, 22) - c(0.0, 0.2)).norm() < 1e-12);
        assert!(hl[at].plus && hl[at].minus);
    }

    #[test]
    fn volumes() {
        let bx = sublevel_box(SymbolModel::Davies, c(1.0, 1.0), 0.1);
        assert_eq!(volume_v_z(SymbolModel::Davies, c(1.0, 1.0), 0.0, &bx, 400).unwrap(), 0.0);
        let mut last = 0.0;
        for t in [0.001, 0.01, 0.05, 0.1] {
            let v = volume_v_z(SymbolModel::Davies, c(1.0, 1.0), t, &bx, 800).unwrap();
            assert!(v >= last);
            last = v;
        }
        let tight = PhaseBox::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        assert_eq!(volume_v_z(SymbolModel::Davies, c(0.0, 0.0), 1.0, &tight, 50), Err(Error::BoxTooSmall));
    }

    /// ξ-slab width per x: `(ξ + cos x − Re z)² ≤ t − sin²x` (independent of `Re z`).
    fn hager_slab_oracle(t: f64) -> f64 {
        let n = 200_000;
        let dx = 2.0 * PI / n as f64;
        (0..n)
            .map(|k| {
                let x = (k as f64 + 0.5) * dx;
                let r = t - x.sin().powi(2);
                if r > 0.0 { 2.0 * r.sqrt() * dx } else { 0.0 }
            })
            .sum()
    }

    #[test]
    fn hager_volume_matches_slab_reduction() {
        let z = c(0.3, 0.0);
        let t = 0.2;
        let bx = sublevel_box(SymbolModel::Hager, z, t);
        let v = volume_v_z(SymbolModel::Hager, z, t, &bx, 2001).unwrap();
        let oracle = hager_slab_oracle(t);
        assert!((v / oracle - 1.0).abs() < 0.02, "{v} vs {oracle}");
    }

    #[test]
    fn weyl_predictions() {
        let gamma = Rectangle::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        let h = 4.0 / 601.0;
        let bx = PhaseBox::covering(SymbolModel::Hager, &gamma);
        let w = weyl_prediction(SymbolModel::Hager, &gamma, h, &bx, 2001).unwrap();
        assert!((w - 1.0 / (3.0 * h)).abs() < 0.01 * w, "{w}");
        let far = Rectangle::new(-0.5, 0.5, 2.5, 3.5).unwrap();
        assert_eq!(weyl_prediction(SymbolModel::Hager, &far, h, &PhaseBox::covering(SymbolModel::Hager, &far), 401).unwrap(), 0.0);
        let shell = Rectangle::new(1.0, 2.0, -1e-3, 1e-3).unwrap();
        let w = weyl_prediction(SymbolModel::Harmonic, &shell, 0.01, &PhaseBox::covering(SymbolModel::Harmonic, &shell), 2001).unwrap();
        assert!((w - 50.0).abs() < 0.5, "{w}");
    }
}
