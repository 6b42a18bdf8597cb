use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{draw_rng, IidLaw};
use crate::fit;
use crate::linalg::{smallest_singular_value, ComplexMatrix};
use crate::parallel::with_workers;
use crate::{Error, Result};

/// Constant in the asserted tail bound `P̂(s_N < δt) ≤ C·N·t²`.
pub const TAIL_CONSTANT: f64 = 10.0;
/// Upper end of the tail-probability window used for the slope fit.
const WINDOW_TOP: f64 = 0.1;
/// Hits required at the lower end of the fitting window.
const WINDOW_HITS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsvTailReport {
    pub n: usize,
    pub delta: f64,
    pub draws: usize,
    pub seed: u64,
    pub law: IidLaw,
    pub t: Vec<f64>,
    /// Empirical `P̂(s_N(X0 + δQ) < δt)`.
    pub tail: Vec<f64>,
    /// `C·N·t²` at each `t`.
    pub bound: Vec<f64>,
    pub bound_holds: bool,
    /// `t` values whose tail lies in `[10/draws, 0.1]`.
    pub window: Vec<f64>,
    pub slope: Option<f64>,
}

/// `s_N(X0 + δQ)/δ` for each draw.
fn scaled_smallest_singular_values(x0: &ComplexMatrix, delta: f64, law: IidLaw, draws: usize, seed: u64, workers: usize) -> Result<Vec<f64>> {
    let n = x0.dim();
    let out: Vec<Result<f64>> = with_workers(workers, || {
        (0..draws)
            .into_par_iter()
            .map(|d| {
                let q = law.matrix(n, &mut draw_rng(seed, d as u64));
                let m = x0 + &q.scaled(num_complex::Complex64::new(delta, 0.0));
                Ok(smallest_singular_value(&m)? / delta)
            })
            .collect()
    })?;
    out.into_iter().collect()
}

fn validate(delta: f64, t_grid: &[f64], draws: usize) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("t_grid", "must be positive and strictly ascending"));
    }
    if draws == 0 {
        return Err(Error::invalid("draws", "must be at least 1"));
    }
    Ok(())
}

fn tail_report(x0: &ComplexMatrix, delta: f64, t_grid: &[f64], draws: usize, seed: u64, law: IidLaw, workers: usize) -> Result<SsvTailReport> {
    validate(delta, t_grid, draws)?;
    let mut s = scaled_smallest_singular_values(x0, delta, law, draws, seed, workers)?;
    s.sort_by(f64::total_cmp);
    let n = x0.dim();
    let tail: Vec<f64> = t_grid.iter().map(|&t| s.partition_point(|&v| v < t) as f64 / draws as f64).collect();
    let bound: Vec<f64> = t_grid.iter().map(|t| TAIL_CONSTANT * n as f64 * t * t).collect();
    let bound_holds = tail.iter().zip(&bound).all(|(p, b)| p <= b);
    let lo = WINDOW_HITS / draws as f64;
    let (window, probs): (Vec<f64>, Vec<f64>) =
        t_grid.iter().zip(&tail).filter(|(_, p)| **p >= lo && **p <= WINDOW_TOP).map(|(t, p)| (*t, *p)).unzip();
    let slope = if window.len() >= 3 { Some(fit::log_log_slope(&window, &probs)?) } else { None };
    Ok(SsvTailReport { n, delta, draws, seed, law, t: t_grid.to_vec(), tail, bound, bound_holds, window, slope })
}

/// Empirical tail of `s_N(X0 + δQ)` for complex Gaussian `Q`, with the
/// `C·N·t²` bound check and the log-log slope over the window
/// `10/draws ≤ P̂ ≤ 0.1`.
pub fn ssv_tail_experiment(x0: &ComplexMatrix, delta: f64, t_grid: &[f64], draws: usize, seed: u64, workers: usize) -> Result<SsvTailReport> {
    let report = tail_report(x0, delta, t_grid, draws, seed, IidLaw::Gaussian, workers)?;
    if report.slope.is_none() {
        return Err(Error::InsufficientData(format!(
            "{} tail points inside the fitting window; increase draws or refine t",
            report.window.len()
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidDemoReport {
    pub law: IidLaw,
    /// Sample mean and second absolute moment of all entries drawn.
    pub mean_re: f64,
    pub mean_im: f64,
    pub second_moment: f64,
    pub tail: SsvTailReport,
}

/// Same tail experiment under a non-Gaussian entry law; nothing is asserted.
pub fn iid_perturbation_demo(
    x0: &ComplexMatrix,
    law: IidLaw,
    delta: f64,
    t_grid: &[f64],
    draws: usize,
    seed: u64,
    workers: usize,
) -> Result<IidDemoReport> {
    let tail = tail_report(x0, delta, t_grid, draws, seed, law, workers)?;
    let n = x0.dim();
    let (mut sum, mut sq, mut count) = (num_complex::Complex64::new(0.0, 0.0), 0.0, 0usize);
    for d in 0..draws {
        let q = law.matrix(n, &mut draw_rng(seed, d as u64));
        for z in q.as_slice() {
            sum += z;
            sq += z.norm_sqr();
            count += 1;
        }
    }
    let c = count as f64;
    Ok(IidDemoReport { law, mean_re: sum.re / c, mean_im: sum.im / c, second_moment: sq / c, tail })
}

/// `count` geometric points from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let r = (hi / lo).ln() / (count.max(2) - 1) as f64;
    (0..count).map(|k| lo * (r * k as f64).exp()).collect()
}
