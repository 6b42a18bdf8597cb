use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{draw_rng, gaussian_matrix_from, sample_random_potential, PerturbationKind, PerturbationSpec};
use crate::gallery::{ho_basis_coverage, DiscretizedOperator, PhaseBox, Rectangle};
use crate::linalg::{eigenvalues, operator_norm, ComplexMatrix, ResolventEvaluator};
use crate::parallel::with_workers;
use crate::symbol::{integrated_weyl_curve, weyl_prediction};
use crate::{Error, Result};

/// Midpoint cells per axis for the Weyl volume.
const VOLUME_RESOLUTION: usize = 2001;
/// Midpoint cells per axis for each point of the integrated Weyl curve.
const CURVE_RESOLUTION: usize = 801;
const CURVE_POINTS: usize = 41;
/// Relative slack on the containment bound `σ_min(P − λ) ≤ δ‖Q‖`.
pub const CONTAINMENT_RTOL: f64 = 1e-8;

/// Cumulative eigenvalue count in a real-part window as a function of the
/// imaginary cut `b`, next to the Weyl curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedDensity {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub b: Vec<f64>,
    /// Mean over draws of `#{λ : Re λ ∈ [re_min, re_max], im_min ≤ Im λ ≤ b}`.
    pub empirical: Vec<f64>,
    pub weyl: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylExperimentReport {
    pub model: String,
    pub seed: u64,
    pub draws: usize,
    pub h: f64,
    pub n: usize,
    pub delta: f64,
    pub gamma: Rectangle,
    pub perturbation: PerturbationSpec,
    pub counts: Vec<usize>,
    pub mean_count: f64,
    pub std_error: f64,
    pub weyl_prediction: f64,
    pub relative_discrepancy: f64,
    /// Draws whose eigenvalue computation failed.
    pub dropped_draws: Vec<usize>,
    pub containment_violations: usize,
    /// Largest `σ_min(P − λ) / (δ‖Q‖ + floor)` over all draws.
    pub max_containment_ratio: f64,
    pub density: IntegratedDensity,
    /// Eigenvalues of each kept draw, for scatter plots and CSV dumps.
    #[serde(skip)]
    pub eigenvalues: Vec<Vec<Complex64>>,
}

struct Draw {
    eigenvalues: Vec<Complex64>,
    violations: usize,
    max_ratio: f64,
}

fn perturbation(op: &DiscretizedOperator, spec: &PerturbationSpec, seed: u64, draw: usize) -> Result<ComplexMatrix> {
    let n = op.dim();
    let mut rng = draw_rng(seed, draw as u64);
    match spec.kind {
        PerturbationKind::GaussianMatrix => Ok(gaussian_matrix_from(n, &mut rng)),
        PerturbationKind::IidMatrix { law } => Ok(law.matrix(n, &mut rng)),
        PerturbationKind::RandomPotential { n_modes, radius, force } => sample_random_potential(op, n_modes, radius, force, &mut rng),
    }
}

fn run_draw(op: &DiscretizedOperator, eval: &ResolventEvaluator, p_norm: f64, spec: &PerturbationSpec, seed: u64, draw: usize) -> Result<Draw> {
    let q = perturbation(op, spec, seed, draw)?;
    let dq = if spec.delta == 0.0 { 0.0 } else { spec.delta * operator_norm(&q)? };
    let perturbed = &op.matrix + &q.scaled(Complex64::new(spec.delta, 0.0));
    let ev = eigenvalues(&perturbed)?;
    // backward error of the eigensolver
    let floor = 8.0 * op.dim() as f64 * f64::EPSILON * (p_norm + dq);
    let bound = dq * (1.0 + CONTAINMENT_RTOL) + floor;
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for &lambda in &ev {
        let s = eval.sigma_min(lambda)?;
        max_ratio = max_ratio.max(s / bound);
        if s > bound {
            violations += 1;
        }
    }
    Ok(Draw { eigenvalues: ev, violations, max_ratio })
}

/// Eigenvalue counts of `P + δQ` in `Γ` over seeded draws, against
/// `(2πh)^{-1} Vol p0^{-1}(Γ)`.
///
/// Every eigenvalue of every draw is also checked against the containment
/// bound `σ_min(P − λ) ≤ δ‖Q‖`.
pub fn probabilistic_weyl_experiment(
    op: &DiscretizedOperator,
    gamma: &Rectangle,
    spec: &PerturbationSpec,
    draws: usize,
    seed: u64,
    workers: usize,
) -> Result<WeylExperimentReport> {
    spec.validate()?;
    if draws == 0 {
        return Err(Error::invalid("draws", "must be at least 1"));
    }
    let symbol = op.symbol.ok_or_else(|| Error::invalid("model", "the Weyl experiment needs an operator with a symbol"))?;
    if !ho_basis_coverage(symbol, op.dim(), op.h, gamma) {
        return Err(Error::invalid("N", "basis does not cover the preimage of Γ; increase N or h"));
    }
    let phase_box = PhaseBox::covering(symbol, gamma);
    let prediction = weyl_prediction(symbol, gamma, op.h, &phase_box, VOLUME_RESOLUTION)?;

    let eval = ResolventEvaluator::new(&op.matrix)?;
    let p_norm = operator_norm(&op.matrix)?;
    let results: Vec<Result<Draw>> = with_workers(workers, || {
        (0..draws).into_par_iter().map(|d| run_draw(op, &eval, p_norm, spec, seed, d)).collect()
    })?;

    let mut counts = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let (mut violations, mut max_ratio) = (0, 0.0f64);
    for (d, r) in results.into_iter().enumerate() {
        match r {
            Ok(draw) => {
                counts.push(draw.eigenvalues.iter().filter(|z| gamma.contains(**z)).count());
                violations += draw.violations;
                max_ratio = max_ratio.max(draw.max_ratio);
                kept.push(draw.eigenvalues);
            }
            Err(Error::NoConvergence { .. }) => dropped.push(d),
            Err(e) => return Err(e),
        }
    }
    if counts.is_empty() {
        return Err(Error::InsufficientData("every draw failed".into()));
    }
    let k = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / k;
    let var = if counts.len() > 1 { counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    let discrepancy = if prediction > 0.0 { (mean - prediction).abs() / prediction } else { mean };

    let b: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| gamma.im_min + (gamma.im_max - gamma.im_min) * i as f64 / (CURVE_POINTS - 1) as f64)
        .collect();
    let empirical = b
        .iter()
        .map(|&bb| {
            kept.iter()
                .map(|ev| {
                    ev.iter()
                        .filter(|z| {
                            z.re >= gamma.re_min - crate::gallery::BOUNDARY_TIE
                                && z.re <= gamma.re_max + crate::gallery::BOUNDARY_TIE
                                && z.im >= gamma.im_min - crate::gallery::BOUNDARY_TIE
                                && z.im <= bb + crate::gallery::BOUNDARY_TIE
                        })
                        .count() as f64
                })
                .sum::<f64>()
                / k
        })
        .collect();
    let weyl = integrated_weyl_curve(symbol, gamma, &b, op.h, &phase_box, CURVE_RESOLUTION)?;

    Ok(WeylExperimentReport {
        model: op.model.name().to_string(),
        seed,
        draws,
        h: op.h,
        n: op.dim(),
        delta: spec.delta,
        gamma: *gamma,
        perturbation: *spec,
        counts,
        mean_count: mean,
        std_error: (var / k).sqrt(),
        weyl_prediction: prediction,
        relative_discrepancy: discrepancy,
        dropped_draws: dropped,
        containment_violations: violations,
        max_containment_ratio: max_ratio,
        density: IntegratedDensity { re_min: gamma.re_min, re_max: gamma.re_max, im_min: gamma.im_min, b, empirical, weyl },
        eigenvalues: kept,
    })
}
