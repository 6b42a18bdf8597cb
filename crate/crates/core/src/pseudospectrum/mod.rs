//! Grid scans of `σ_min(P − z)`, ε-regions, contours and resolvent growth fits.

mod contour;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fit;
use crate::gallery::DiscretizedOperator;
use crate::lab::gaussian_matrix_from;
use crate::linalg::{eigenvalues, operator_norm, ComplexMatrix, ResolventEvaluator};
use crate::parallel::with_workers;
use crate::{Error, Result};

pub use contour::{contours, ContourLevel, ContourSet, Polyline};

/// Rectangular lattice of `nx × ny` nodes in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ComplexGrid {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("grid", "bounds must be finite"));
        }
        if re_min >= re_max || im_min >= im_max {
            return Err(Error::invalid("grid", "expected re_min < re_max and im_min < im_max"));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::invalid("grid", "needs at least two nodes per axis"));
        }
        Ok(Self { re_min, re_max, im_min, im_max, nx, ny })
    }

    pub fn dre(&self) -> f64 {
        (self.re_max - self.re_min) / (self.nx - 1) as f64
    }

    pub fn dim(&self) -> f64 {
        (self.im_max - self.im_min) / (self.ny - 1) as f64
    }

    pub fn pitch(&self) -> f64 {
        self.dre().max(self.dim())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major position of node `(i, j)`: `i` along the real axis, `j` along the imaginary axis.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        let re = if i + 1 == self.nx { self.re_max } else { self.re_min + i as f64 * self.dre() };
        let im = if j + 1 == self.ny { self.im_max } else { self.im_min + j as f64 * self.dim() };
        Complex64::new(re, im)
    }
}

/// Provenance of a field: model name, semiclassical parameter and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub model: String,
    pub h: f64,
    pub n: usize,
}

impl Fingerprint {
    pub fn of(op: &DiscretizedOperator) -> Self {
        Self { model: op.model.name().to_string(), h: op.h, n: op.dim() }
    }
}

/// `σ_min(P − z)` on a [`ComplexGrid`]; points whose evaluation failed hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaMinField {
    pub grid: ComplexGrid,
    pub values: Vec<f64>,
    pub missing: usize,
    pub fingerprint: Fingerprint,
}

impl SigmaMinField {
    pub fn from_values(grid: ComplexGrid, values: Vec<f64>, fingerprint: Fingerprint) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| *v < 0.0 || v.is_infinite()) {
            return Err(Error::invalid("values", "σ_min values must be nonnegative and finite (NaN marks missing)"));
        }
        let missing = values.iter().filter(|v| v.is_nan()).count();
        Ok(Self { grid, values, missing, fingerprint })
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().filter(|v| !v.is_nan()).fold(0.0, f64::max)
    }
}

/// `σ_min(P − z)` at every grid node, evaluated row-parallel.
pub fn scan(op: &DiscretizedOperator, grid: &ComplexGrid, workers: usize) -> Result<SigmaMinField> {
    scan_matrix(&op.matrix, Fingerprint::of(op), grid, workers)
}

pub fn scan_matrix(matrix: &ComplexMatrix, fingerprint: Fingerprint, grid: &ComplexGrid, workers: usize) -> Result<SigmaMinField> {
    let eval = ResolventEvaluator::new(matrix)?;
    let rows: Vec<Vec<f64>> = with_workers(workers, || {
        (0..grid.ny)
            .into_par_iter()
            .map(|j| (0..grid.nx).map(|i| eval.sigma_min(grid.node(i, j)).unwrap_or(f64::NAN)).collect())
            .collect()
    })?;
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let missing = values.iter().filter(|v| v.is_nan()).count();
    Ok(SigmaMinField { grid: *grid, values, missing, fingerprint })
}

/// Mask of `{σ_min < ε}`; missing points are outside.
pub fn region(field: &SigmaMinField, eps: f64) -> Vec<bool> {
    field.values.iter().map(|&v| v < eps).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub eps: f64,
    pub draws: usize,
    pub seed: u64,
    pub eigenvalues_checked: usize,
    pub violations: usize,
    /// Largest `σ_min(P − λ)/ε` seen.
    pub max_ratio: f64,
}

/// Relative slack on `σ_min(P − λ) < ε`.
pub const INCLUSION_SLACK: f64 = 1e-6;

/// Draws `Q` with `‖Q‖ = 0.99`, and checks that every eigenvalue `λ` of
/// `P + εQ` satisfies `σ_min(P − λ) < ε(1 + 1e-6)`.
pub fn perturbation_inclusion_check(p: &ComplexMatrix, eps: f64, draws: usize, seed: u64) -> Result<InclusionReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let eval = ResolventEvaluator::new(p)?;
    let n = p.dim();
    let mut checked = 0;
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for draw in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(draw as u64);
        let g = gaussian_matrix_from(n, &mut rng);
        let q = g.scaled(Complex64::new(0.99 / operator_norm(&g)?, 0.0));
        let perturbed = p + &q.scaled(Complex64::new(eps, 0.0));
        for lambda in eigenvalues(&perturbed)? {
            let s = eval.sigma_min(lambda)?;
            let ratio = s / eps;
            max_ratio = max_ratio.max(ratio);
            checked += 1;
            if ratio >= 1.0 + INCLUSION_SLACK {
                violations += 1;
            }
        }
    }
    Ok(InclusionReport { eps, draws, seed, eigenvalues_checked: checked, violations, max_ratio })
}

/// Resolvent norms along an `h` family and the fitted growth law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub z: Complex64,
    pub h: Vec<f64>,
    pub dims: Vec<usize>,
    pub resolvent_norms: Vec<f64>,
    /// `h` values dropped because the shifted matrix was singular.
    pub dropped: Vec<f64>,
    pub slope: f64,
}

fn resolvent_family(
    family: &(dyn Fn(f64) -> Result<DiscretizedOperator> + Sync),
    z: Complex64,
    h_list: &[f64],
) -> Result<(Vec<f64>, Vec<usize>, Vec<f64>, Vec<f64>)> {
    if h_list.len() < 4 || !fit::is_geometric(h_list, 1e-9) {
        return Err(Error::invalid("h_list", "needs at least four geometric values"));
    }
    let results: Vec<Result<(usize, Option<f64>)>> = h_list
        .par_iter()
        .map(|&h| {
            let op = family(h)?;
            match op.resolvent_norm(z) {
                Ok(r) => Ok((op.dim(), Some(r))),
                Err(Error::Singular) => Ok((op.dim(), None)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let (mut hs, mut dims, mut norms, mut dropped) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (&h, res) in h_list.iter().zip(results) {
        let (n, r) = res?;
        match r {
            Some(r) => {
                hs.push(h);
                dims.push(n);
                norms.push(r);
            }
            None => dropped.push(h),
        }
    }
    if hs.len() < 2 {
        return Err(Error::InsufficientData(format!("{} nonsingular resolvents", hs.len())));
    }
    Ok((hs, dims, norms, dropped))
}

/// Slope of `log‖(P_h − z)^{-1}‖` against `log(1/h)`.
pub fn boundary_exponent_fit(
    family: &(dyn Fn(f64) -> Result<DiscretizedOperator> + Sync),
    z0: Complex64,
    h_list: &[f64],
) -> Result<ExponentFit> {
    let (h, dims, norms, dropped) = resolvent_family(family, z0, h_list)?;
    let inv: Vec<f64> = h.iter().map(|h| 1.0 / h).collect();
    let slope = fit::log_log_slope(&inv, &norms)?;
    Ok(ExponentFit { z: z0, h, dims, resolvent_norms: norms, dropped, slope })
}

/// Slope of `log‖(P_h − z)^{-1}‖` against `1/h` (exponential growth rate).
pub fn growth_rate_fit(
    family: &(dyn Fn(f64) -> Result<DiscretizedOperator> + Sync),
    z: Complex64,
    h_list: &[f64],
) -> Result<ExponentFit> {
    let (h, dims, norms, dropped) = resolvent_family(family, z, h_list)?;
    let inv: Vec<f64> = h.iter().map(|h| 1.0 / h).collect();
    let logs: Vec<f64> = norms.iter().map(|r| r.ln()).collect();
    let slope = fit::least_squares_line(&inv, &logs)?.slope;
    Ok(ExponentFit { z, h, dims, resolvent_norms: norms, dropped, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{davies_ho, hermite_dimension, jordan_block};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_validation_and_nodes() {
        assert!(ComplexGrid::new(0.0, 0.0, 0.0, 1.0, 3, 3).is_err());
        assert!(ComplexGrid::new(0.0, 1.0, 0.0, 1.0, 1, 3).is_err());
        let g = ComplexGrid::new(-1.0, 1.0, -2.0, 2.0, 3, 5).unwrap();
        assert_eq!(g.node(0, 0), c(-1.0, -2.0));
        assert_eq!(g.node(2, 4), c(1.0, 2.0));
        assert_eq!(g.node(1, 2), c(0.0, 0.0));
        assert_eq!(g.index(2, 1), 5);
    }

    #[test]
    fn identity_field_is_distance_to_one() {
        let op = DiscretizedOperator {
            matrix: ComplexMatrix::identity(4),
            h: 1.0,
            basis: crate::gallery::Basis::Canonical,
            symbol: None,
            model: crate::gallery::ModelKind::Jordan,
        };
        let grid = ComplexGrid::new(0.0, 2.0, -1.0, 1.0, 9, 7).unwrap();
        let f = scan(&op, &grid, 1).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let z = grid.node(i, j);
                let v = f.value(i, j);
                assert!((v - (c(1.0, 0.0) - z).norm()).abs() < 1e-12, "{z}: {v}");
            }
        }
    }

    #[test]
    fn diagonal_field_is_distance_to_spectrum() {
        let d = [c(0.0, 0.0), c(1.0, 0.5), c(-0.5, -0.7), c(2.0, 0.0)];
        let m = ComplexMatrix::from_diagonal(&d);
        let fp = Fingerprint { model: "diag".into(), h: 1.0, n: 4 };
        let grid = ComplexGrid::new(-1.0, 2.5, -1.0, 1.0, 15, 11).unwrap();
        let f = scan_matrix(&m, fp, &grid, 1).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let z = grid.node(i, j);
                let oracle = d.iter().map(|dk| (dk - z).norm()).fold(f64::MAX, f64::min);
                assert!((f.value(i, j) - oracle).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jordan_disc_is_inside_region() {
        let op = jordan_block(20).unwrap();
        let grid = ComplexGrid::new(-0.9, 0.9, -0.9, 0.9, 37, 37).unwrap();
        let f = scan(&op, &grid, 1).unwrap();
        assert_eq!(f.missing, 0);
        let wide = region(&f, 1e-2);
        let narrow = region(&f, 1e-3);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let k = grid.index(i, j);
                if grid.node(i, j).norm() <= 0.5 {
                    assert!(wide[k]);
                }
                assert!(!narrow[k] || wide[k]);
            }
        }
        assert!(wide.iter().zip(&narrow).any(|(w, n)| *w && !*n));
        assert!(region(&f, f.max_value() * 2.0).iter().all(|b| *b));
        assert!(region(&f, 0.0).iter().all(|b| !*b));
    }

    #[test]
    fn scan_is_independent_of_worker_count() {
        let op = davies_ho(0.1, 60).unwrap();
        let grid = ComplexGrid::new(0.0, 3.0, 0.0, 3.0, 12, 9).unwrap();
        let a = scan(&op, &grid, 1).unwrap();
        let b = scan(&op, &grid, 3).unwrap();
        let bits = |f: &SigmaMinField| f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn inclusion_check_passes_on_jordan_and_identity() {
        let rep = perturbation_inclusion_check(&jordan_block(30).unwrap().matrix, 1e-3, 5, 11).unwrap();
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.eigenvalues_checked, 150);
        let id = ComplexMatrix::identity(6);
        let rep = perturbation_inclusion_check(&id, 0.1, 3, 2).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_ratio < 1.0);
    }

    #[test]
    fn davies_outside_sigma_is_bounded() {
        let family = |h: f64| davies_ho(h, hermite_dimension(h, 1.0));
        let fit = boundary_exponent_fit(&family, c(-1.0, 0.0), &[0.08, 0.04, 0.02, 0.01]).unwrap();
        assert!(fit.resolvent_norms.iter().all(|r| *r <= 2.0));
        assert!(fit.slope.abs() < 0.05, "{}", fit.slope);
    }

    #[test]
    fn singular_members_are_dropped() {
        let family = |_h: f64| jordan_block(12);
        let fit = boundary_exponent_fit(&family, c(0.0, 0.0), &[0.4, 0.2, 0.1, 0.05]);
        assert!(matches!(fit, Err(Error::InsufficientData(_))));
    }
}
