//! Marching-squares isolines of a [`SigmaMinField`].
//!
//! Crossings are linearly interpolated along cell edges. Saddle cells
//! (diagonal corners on the same side) are split by the average of the four
//! corner values: if the average lies below the level the two low corners are
//! joined through the cell centre. Cells with a missing corner are skipped.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SigmaMinField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Complex64>,
    /// First and last points coincide (the curve did not hit the grid edge).
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourLevel {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContourSet {
    pub levels: Vec<ContourLevel>,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(|l| l.polylines.is_empty())
    }
}

/// Cell edge identified globally so neighbouring cells agree on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// From node `(i, j)` to `(i + 1, j)`.
    Horizontal(usize, usize),
    /// From node `(i, j)` to `(i, j + 1)`.
    Vertical(usize, usize),
}

fn crossing(field: &SigmaMinField, edge: Edge, level: f64) -> Complex64 {
    let g = &field.grid;
    let (a, b) = match edge {
        Edge::Horizontal(i, j) => ((i, j), (i + 1, j)),
        Edge::Vertical(i, j) => ((i, j), (i, j + 1)),
    };
    let (va, vb) = (field.value(a.0, a.1), field.value(b.0, b.1));
    let t = if va == vb { 0.5 } else { ((level - va) / (vb - va)).clamp(0.0, 1.0) };
    let (za, zb) = (g.node(a.0, a.1), g.node(b.0, b.1));
    za + (zb - za) * t
}

/// Segments of one cell as pairs of edges.
fn cell_segments(field: &SigmaMinField, i: usize, j: usize, level: f64) -> Vec<(Edge, Edge)> {
    let v = [field.value(i, j), field.value(i + 1, j), field.value(i + 1, j + 1), field.value(i, j + 1)];
    if v.iter().any(|x| x.is_nan()) {
        return Vec::new();
    }
    let bottom = Edge::Horizontal(i, j);
    let right = Edge::Vertical(i + 1, j);
    let top = Edge::Horizontal(i, j + 1);
    let left = Edge::Vertical(i, j);
    let below = |k: usize| v[k] < level;
    let case = (0..4).fold(0u8, |acc, k| acc | (u8::from(below(k)) << k));
    let centre_below = v.iter().sum::<f64>() / 4.0 < level;
    match case {
        0 | 15 => vec![],
        1 | 14 => vec![(left, bottom)],
        2 | 13 => vec![(bottom, right)],
        3 | 12 => vec![(left, right)],
        4 | 11 => vec![(right, top)],
        6 | 9 => vec![(bottom, top)],
        7 | 8 => vec![(left, top)],
        // corners 0 and 2 below
        5 => {
            if centre_below {
                vec![(bottom, right), (top, left)]
            } else {
                vec![(left, bottom), (right, top)]
            }
        }
        // corners 1 and 3 below
        10 => {
            if centre_below {
                vec![(left, bottom), (right, top)]
            } else {
                vec![(bottom, right), (top, left)]
            }
        }
        _ => unreachable!(),
    }
}

fn trace_level(field: &SigmaMinField, level: f64) -> Vec<Polyline> {
    let g = &field.grid;
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            segments.extend(cell_segments(field, i, j, level));
        }
    }
    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(k);
        by_edge.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let other_end = |k: usize, e: Edge| if segments[k].0 == e { segments[k].1 } else { segments[k].0 };
    let next_unused = |used: &[bool], e: Edge, not: usize| {
        by_edge.get(&e).and_then(|ks| ks.iter().copied().find(|&k| k != not && !used[k]))
    };

    let mut lines = Vec::new();
    // Open curves start at edges touched by exactly one segment; closed ones anywhere.
    let mut starts: Vec<usize> = (0..segments.len())
        .filter(|&k| by_edge[&segments[k].0].len() == 1 || by_edge[&segments[k].1].len() == 1)
        .collect();
    starts.extend(0..segments.len());
    for start in starts {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (mut a, mut b) = segments[start];
        if by_edge[&b].len() == 1 && by_edge[&a].len() != 1 {
            std::mem::swap(&mut a, &mut b);
        }
        let first = a;
        let mut edges = vec![a, b];
        let mut current = start;
        let mut tip = b;
        while let Some(k) = next_unused(&used, tip, current) {
            used[k] = true;
            tip = other_end(k, tip);
            edges.push(tip);
            current = k;
        }
        let closed = tip == first && edges.len() > 2;
        let points = edges.iter().map(|&e| crossing(field, e, level)).collect();
        lines.push(Polyline { points, closed });
    }
    lines
}

/// Isolines of the field at each level (positive, ascending).
pub fn contours(field: &SigmaMinField, levels: &[f64]) -> Result<ContourSet> {
    if levels.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::invalid("levels", "must be positive and finite"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("levels", "must be strictly ascending"));
    }
    Ok(ContourSet {
        levels: levels.iter().map(|&level| ContourLevel { level, polylines: trace_level(field, level) }).collect(),
    })
}
