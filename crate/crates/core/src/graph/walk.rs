//! Random-walk estimate of the average local clustering coefficient.
//!
//! For a walk `x_1 .. x_r` over the undirected graph:
//!
//! ```text
//! Phi = 1/(r-2) * sum_{k=2}^{r-1} A[x_{k-1}, x_{k+1}] / (d(x_k) - 1)
//! Psi = 1/r     * sum_{k=1}^{r}   1 / d(x_k)
//! c   = Phi / Psi
//! ```
//!
//! Walk length is `m * ln(n)^2` steps for `n` vertices, floored at
//! `min_steps`.

use serde::Serialize;

use super::{CompactGraph, GraphError, VertexId};
use crate::sketches::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkConfig {
    pub mixing_multiplier: f64,
    pub seed: u64,
    pub min_steps: usize,
}

impl WalkConfig {
    pub fn new(mixing_multiplier: f64, seed: u64) -> Self {
        WalkConfig {
            mixing_multiplier,
            seed,
            min_steps: 3,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.mixing_multiplier.is_finite() && self.mixing_multiplier > 0.0) {
            return Err(GraphError::InvalidConfig(format!(
                "mixing multiplier must be positive, got {}",
                self.mixing_multiplier
            )));
        }
        if self.min_steps < 3 {
            return Err(GraphError::InvalidConfig(format!(
                "min_steps must be at least 3, got {}",
                self.min_steps
            )));
        }
        Ok(())
    }
}

/// `max(min_steps, ceil(m * ln(n)^2))`.
pub fn mixing_time(vertex_count: usize, multiplier: f64, min_steps: usize) -> usize {
    let ln = (vertex_count.max(1) as f64).ln();
    let steps = (multiplier * ln * ln).ceil();
    (steps as usize).max(min_steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkAccumulators {
    pub steps: usize,
    pub path: Vec<VertexId>,
    /// Sum of `phi_k / (d(x_k) - 1)` over interior positions.
    pub phi_sum: f64,
    /// Sum of `1 / d(x_k)` over all positions.
    pub psi_sum: f64,
}

/// Walks `steps` vertices (so `steps - 1` moves) from a uniformly chosen
/// start, moving to a uniformly chosen neighbour each time.
pub fn random_walk(
    g: &CompactGraph,
    steps: usize,
    seed: u64,
) -> Result<WalkAccumulators, GraphError> {
    if g.edge_count() == 0 {
        return Err(GraphError::NoEdges);
    }
    if steps < 3 {
        return Err(GraphError::DegenerateWalk(steps));
    }
    let mut rng = SeededRng::new(seed);
    let mut current = loop {
        let v = rng.index(g.vertex_count()) as VertexId;
        if g.degree(v) > 0 {
            break v;
        }
    };
    let mut path = Vec::with_capacity(steps);
    path.push(current);
    while path.len() < steps {
        let nbrs = g.neighbours(current);
        current = nbrs[rng.index(nbrs.len())];
        path.push(current);
    }

    let mut phi_sum = 0.0;
    for k in 1..steps - 1 {
        let d = g.degree(path[k]);
        if d > 1 && g.are_adjacent(path[k - 1], path[k + 1]) {
            phi_sum += 1.0 / (d - 1) as f64;
        }
    }
    let psi_sum = path.iter().map(|&v| 1.0 / g.degree(v) as f64).sum();
    Ok(WalkAccumulators {
        steps,
        path,
        phi_sum,
        psi_sum,
    })
}

/// The unclamped ratio `Phi / Psi`.
pub fn estimate_cc_raw(w: &WalkAccumulators) -> Result<f64, GraphError> {
    if w.steps < 3 || w.psi_sum <= 0.0 {
        return Err(GraphError::DegenerateWalk(w.steps));
    }
    let phi = w.phi_sum / (w.steps - 2) as f64;
    let psi = w.psi_sum / w.steps as f64;
    Ok(phi / psi)
}

/// [`estimate_cc_raw`] clamped to `[0, 1]`.
pub fn estimate_cc(w: &WalkAccumulators) -> Result<f64, GraphError> {
    estimate_cc_raw(w).map(|c| c.clamp(0.0, 1.0))
}
