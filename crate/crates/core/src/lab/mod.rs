//! Seeded Monte Carlo experiments with random perturbations.
//!
//! Draw `k` of a run seeded with `s` uses `ChaCha8Rng::seed_from_u64(s)` on
//! stream `k`, so every draw is reproducible on its own and results do not
//! depend on scheduling.

mod ssv;
mod weyl;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::gallery::{Basis, DiscretizedOperator};
use crate::linalg::ComplexMatrix;
use crate::{Error, Result};

pub use ssv::{geometric_grid, iid_perturbation_demo, ssv_tail_experiment, IidDemoReport, SsvTailReport};
pub use weyl::{probabilistic_weyl_experiment, IntegratedDensity, WeylExperimentReport};

/// Generator for draw `draw` of a run seeded with `seed`.
pub fn draw_rng(seed: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng
}

/// One complex Gaussian with density `π^{-1} e^{-|q|²}`: `(a + ib)/√2`, `a, b ~ N(0, 1)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2)
}

/// `n × n` matrix of iid complex Gaussians, filled row-major from `rng`.
pub fn gaussian_matrix_from<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..n * n).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_row_major(n, data).expect("n ≥ 1")
}

pub fn sample_gaussian_matrix(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    Ok(gaussian_matrix_from(n, &mut draw_rng(seed, 0)))
}

/// Non-Gaussian entry laws, all with `E q = 0` and `E|q|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IidLaw {
    Gaussian,
    /// `±1` with equal probability.
    Pm1,
    /// Uniform on the disc of radius `√2`.
    Uniform,
}

impl IidLaw {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        match self {
            IidLaw::Gaussian => complex_gaussian(rng),
            IidLaw::Pm1 => Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0),
            IidLaw::Uniform => {
                let r = (2.0 * rng.random::<f64>()).sqrt();
                Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>())
            }
        }
    }

    pub fn matrix<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> ComplexMatrix {
        let data = (0..n * n).map(|_| self.sample(rng)).collect();
        ComplexMatrix::from_row_major(n, data).expect("n ≥ 1")
    }
}

impl std::str::FromStr for IidLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "pm1" => Ok(Self::Pm1),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::invalid("law", format!("unknown law `{other}` (gaussian, pm1, uniform)"))),
        }
    }
}

/// Rejection attempts before [`sample_random_potential`] gives up.
pub const REJECTION_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    GaussianMatrix,
    RandomPotential {
        n_modes: usize,
        radius: f64,
        /// Allow symbols without `ξ ↦ −ξ` symmetry.
        force: bool,
    },
    IidMatrix {
        law: IidLaw,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub delta: f64,
}

impl PerturbationSpec {
    pub fn gaussian(delta: f64) -> Self {
        Self { kind: PerturbationKind::GaussianMatrix, delta }
    }

    /// Random potential with `N_modes = ⌈4/h⌉` and `R = 1/h`.
    pub fn potential_for(h: f64, delta: f64, force: bool) -> Self {
        Self { kind: PerturbationKind::RandomPotential { n_modes: (4.0 / h).ceil() as usize, radius: 1.0 / h, force }, delta }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::invalid("delta", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// `δ = N^{-4}`.
pub fn auto_delta(n: usize) -> f64 {
    (n as f64).powi(-4)
}

/// Fourier frequency of potential mode `j` in the order `0, 1, −1, 2, −2, …`.
pub fn potential_frequency(j: usize) -> i64 {
    let k = j.div_ceil(2) as i64;
    if j % 2 == 1 { k } else { -k }
}

/// Matrix of multiplication by `V(x) = Σ_j v_j e^{ik_j x}/√(2π)` on the
/// Fourier basis of `op`; `v` is redrawn until `‖v‖ ≤ radius`.
pub fn sample_random_potential<R: Rng + ?Sized>(
    op: &DiscretizedOperator,
    n_modes: usize,
    radius: f64,
    force: bool,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if op.basis != Basis::Fourier {
        return Err(Error::invalid("model", "random potentials need a Fourier-basis operator"));
    }
    let symmetric = op.symbol.is_some_and(|s| s.xi_symmetric());
    if !symmetric && !force {
        return Err(Error::invalid("model", "symbol is not ξ-symmetric; pass force to sample a potential anyway"));
    }
    if n_modes == 0 {
        return Err(Error::invalid("n_modes", "must be at least 1"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    let v = (0..REJECTION_CAP)
        .map(|_| (0..n_modes).map(|_| complex_gaussian(rng)).collect::<Vec<_>>())
        .find(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() <= radius)
        .ok_or(Error::RejectionFailure { tries: REJECTION_CAP })?;
    Ok(potential_matrix(op.dim(), &v))
}

/// Multiplication by `Σ_j v_j e^{ik_j x}/√(2π)` on modes `k = −(N−1)/2 ..= (N−1)/2`.
pub fn potential_matrix(n: usize, v: &[Complex64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n);
    let norm = 1.0 / (2.0 * PI).sqrt();
    for (j, &vj) in v.iter().enumerate() {
        let k = potential_frequency(j);
        for col in 0..n {
            let row = col as i64 + k;
            if (0..n as i64).contains(&row) {
                m[(row as usize, col)] += vj * norm;
            }
        }
    }
    m
}
