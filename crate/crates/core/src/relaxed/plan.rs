use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform space-time grid: n cells on [a, b] and T steps on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub steps: usize,
    pub a: f64,
    pub b: f64,
}

impl GridSpec {
    /// n cells on [−1, 1] with `steps` time steps.
    pub fn new(n: usize, steps: usize) -> Result<Self> {
        Self::with_domain(n, steps, -1.0, 1.0)
    }

    pub fn with_domain(n: usize, steps: usize, a: f64, b: f64) -> Result<Self> {
        if n < 2 || steps < 2 {
            return invalid(format!("grid needs n >= 2 and T >= 2, got n={n}, T={steps}"));
        }
        if !(a < b && a.is_finite() && b.is_finite()) {
            return invalid(format!("invalid interval [{a}, {b}]"));
        }
        Ok(Self { n, steps, a, b })
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn width(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.n).map(|i| self.a + (i as f64 + 0.5) * w).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt()).collect()
    }

    pub fn uniform(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Index of the cell containing y, or `None` outside [a, b].
    pub fn cell_of(&self, y: f64) -> Option<usize> {
        if !(y >= self.a && y <= self.b) {
            return None;
        }
        Some((((y - self.a) / self.width()) as usize).min(self.n - 1))
    }
}

/// n×n doubly stochastic coupling of the initial and final cells, with row and
/// column sums 1/n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointPlan {
    n: usize,
    gamma: Vec<f64>,
}

const PLAN_TOL: f64 = 1e-12;

impl EndpointPlan {
    pub fn identity(n: usize) -> Self {
        Self::from_permutation(&(0..n).collect::<Vec<_>>())
    }

    /// Grid image of x ↦ −x.
    pub fn flip(n: usize) -> Self {
        Self::from_permutation(&(0..n).rev().collect::<Vec<_>>())
    }

    fn from_permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut gamma = vec![0.0; n * n];
        for (i, &j) in perm.iter().enumerate() {
            gamma[i * n + j] = 1.0 / n as f64;
        }
        Self { n, gamma }
    }

    /// Row-major matrix whose row and column sums must equal 1/n within 1e−12.
    pub fn from_matrix(n: usize, gamma: Vec<f64>) -> Result<Self> {
        if n < 2 || gamma.len() != n * n {
            return invalid(format!("plan must be n x n with n >= 2, got {} entries", gamma.len()));
        }
        if gamma.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return invalid("plan entries must be finite and nonnegative");
        }
        let plan = Self { n, gamma };
        let dev = plan.marginal_deviation();
        if dev > PLAN_TOL {
            return invalid(format!("plan marginals deviate from 1/n by {dev:e}"));
        }
        Ok(plan)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.gamma.chunks(self.n).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// max over rows and columns of |sum − 1/n|.
    pub fn marginal_deviation(&self) -> f64 {
        let u = 1.0 / self.n as f64;
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .map(|s| (s - u).abs())
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let gamma = (0..n * n).map(|idx| self.get(idx % n, idx / n)).collect();
        Self { n, gamma }
    }

    /// Image under i ↦ n−1−i applied to both cells.
    pub fn reflect(&self) -> Self {
        let n = self.n;
        let gamma = (0..n * n)
            .map(|idx| self.get(n - 1 - idx / n, n - 1 - idx % n))
            .collect();
        Self { n, gamma }
    }

    pub fn is_reflection_invariant(&self, tol: f64) -> bool {
        self.gamma
            .iter()
            .zip(&self.reflect().gamma)
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}

const MIN_SUBSAMPLES: usize = 16;
const MAX_SUBSAMPLES: usize = 1 << 16;
const MAP_TOL: f64 = 1e-6;

/// Plan of a measure-preserving map h on [a, b]: γ_ij is 1/n times the
/// fraction of cell i that h sends into cell j, estimated from midpoint
/// subsamples. The sample count doubles until every column sum is within
/// 1e−6 of 1/n; the result is then balanced to 1e−12 by Sinkhorn–Knopp.
pub fn discretize_map<F: Fn(f64) -> f64>(h: F, grid: &GridSpec) -> Result<EndpointPlan> {
    let n = grid.n;
    let u = grid.uniform();
    let w = grid.width();
    let mut samples = MIN_SUBSAMPLES;
    loop {
        let mut gamma = vec![0.0; n * n];
        let weight = u / samples as f64;
        for i in 0..n {
            let lo = grid.a + i as f64 * w;
            for s in 0..samples {
                let y = h(lo + (s as f64 + 0.5) * w / samples as f64);
                let j = grid.cell_of(y).ok_or_else(|| {
                    Error::InvalidInput(format!("map sends a point of cell {i} to {y}, outside the domain"))
                })?;
                gamma[i * n + j] += weight;
            }
        }
        let deviation = (0..n)
            .map(|j| ((0..n).map(|i| gamma[i * n + j]).sum::<f64>() - u).abs())
            .fold(0.0, f64::max);
        if deviation <= MAP_TOL {
            balance(&mut gamma, n);
            return EndpointPlan::from_matrix(n, gamma);
        }
        if samples >= MAX_SUBSAMPLES {
            return Err(Error::NotMeasurePreserving { deviation, samples });
        }
        samples *= 2;
    }
}

fn balance(gamma: &mut [f64], n: usize) {
    let u = 1.0 / n as f64;
    for _ in 0..10_000 {
        for row in gamma.chunks_mut(n) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|g| *g *= u / s);
        }
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let s: f64 = (0..n).map(|i| gamma[i * n + j]).sum();
            worst = worst.max((s - u).abs());
            (0..n).for_each(|i| gamma[i * n + j] *= u / s);
        }
        if worst <= 0.1 * PLAN_TOL {
            break;
        }
    }
}
