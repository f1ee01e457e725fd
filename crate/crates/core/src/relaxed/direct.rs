//! Dense primal solve of the entropic path problem for T = 2, used as a
//! reference for the scaling solver on tiny grids.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::plan::{EndpointPlan, GridSpec};
use crate::error::{invalid, Result};

/// Largest grid accepted by [`direct_solve`].
pub const DIRECT_MAX_CELLS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectSolution {
    /// Σ P(c + ε(log P − 1)) at the optimum.
    pub objective: f64,
    /// Law of (i₀, i₁), row-major n×n.
    pub first_step: Vec<f64>,
    pub iterations: usize,
    /// max |AP − b| over the pair and middle-marginal constraints.
    pub feasibility: f64,
}

/// Minimizes Σ P(c + ε(log P − 1)) over laws P on paths (i₀, i₁, i₂) with
/// pair marginal γ and uniform middle marginal, by feasible Newton steps
/// with H = diag(ε/P). The multiplier system is solved by SVD because the
/// constraint rows are linearly dependent.
pub fn direct_solve(grid: &GridSpec, plan: &EndpointPlan, eps: f64) -> Result<DirectSolution> {
    let n = grid.n;
    if grid.steps != 2 {
        return invalid(format!("direct solve needs T = 2, got {}", grid.steps));
    }
    if n > DIRECT_MAX_CELLS || plan.n() != n {
        return invalid(format!("direct solve needs a matching grid with n <= {DIRECT_MAX_CELLS}"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    let x = grid.centers();
    let dt = grid.dt();
    let pairs: Vec<(usize, usize)> = (0..n * n)
        .map(|i| (i / n, i % n))
        .filter(|&(i, j)| plan.get(i, j) > 0.0)
        .collect();
    let paths: Vec<[usize; 3]> = pairs
        .iter()
        .flat_map(|&(i, j)| (0..n).map(move |m| [i, m, j]))
        .collect();
    let cost: Vec<f64> = paths
        .iter()
        .map(|p| ((x[p[1]] - x[p[0]]).powi(2) + (x[p[2]] - x[p[1]]).powi(2)) / (2.0 * dt))
        .collect();
    let rows = pairs.len() + n;
    let m = paths.len();
    let mut a = DMatrix::zeros(rows, m);
    let mut b = DVector::zeros(rows);
    for (c, p) in paths.iter().enumerate() {
        a[(c / n, c)] = 1.0;
        a[(pairs.len() + p[1], c)] = 1.0;
    }
    for (r, &(i, j)) in pairs.iter().enumerate() {
        b[r] = plan.get(i, j);
    }
    for r in pairs.len()..rows {
        b[r] = grid.uniform();
    }

    let objective = |p: &DVector<f64>| -> f64 {
        p.iter()
            .zip(&cost)
            .map(|(v, c)| v * c + eps * v * (v.ln() - 1.0))
            .sum()
    };
    let mut p = DVector::from_iterator(m, paths.iter().map(|q| plan.get(q[0], q[2]) * grid.uniform()));
    let mut iterations = 0;
    while iterations < 500 {
        iterations += 1;
        let grad = DVector::from_iterator(m, (0..m).map(|i| cost[i] + eps * p[i].ln()));
        let h_inv = p.map(|v| v / eps);
        let scaled = DMatrix::from_fn(rows, m, |r, c| a[(r, c)] * h_inv[c]);
        let normal = &scaled * a.transpose();
        let rhs = -(&scaled * &grad);
        let cutoff = 1e-13 * normal.amax();
        let lambda = normal
            .svd(true, true)
            .solve(&rhs, cutoff)
            .map_err(|e| crate::error::Error::InvalidInput(e.to_string()))?;
        let step = -(grad.clone() + a.transpose() * lambda).component_mul(&h_inv);
        let decrement = -grad.dot(&step);
        if decrement < 1e-22 {
            break;
        }
        let mut alpha = 1.0;
        while (0..m).any(|i| p[i] + alpha * step[i] <= 0.0) {
            alpha *= 0.5;
        }
        let f0 = objective(&p);
        while alpha > 1e-12 && objective(&(&p + alpha * &step)) > f0 - 0.25 * alpha * decrement {
            alpha *= 0.5;
        }
        p += alpha * step;
    }
    let feasibility = (&a * &p - &b).amax();
    let mut first_step = vec![0.0; n * n];
    for (q, v) in paths.iter().zip(p.iter()) {
        first_step[q[0] * n + q[1]] += v;
    }
    Ok(DirectSolution {
        objective: objective(&p),
        first_step,
        iterations,
        feasibility,
    })
}
