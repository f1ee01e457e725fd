use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::plan::{EndpointPlan, GridSpec};
use super::solver::{solve, ChainCoupling, Messages, SolverConfig};
use crate::error::Result;

/// Transport cost, entropy and conditional mean paths of a coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStatistics {
    /// Σ_k E|x_{k+1} − x_k|²/(2Δt).
    pub action: f64,
    /// Kinetic contribution of each step.
    pub step_action: Vec<f64>,
    /// Σ P log P over paths.
    pub entropy: f64,
    /// action + ε(entropy − mass), the primal entropic objective.
    pub objective: f64,
    pub dual: f64,
    pub mass: f64,
    /// E[x_k | start cell i₀], indexed [k][i₀].
    pub mean_paths: Vec<Vec<f64>>,
}

/// Lower bound Σ γ_ij |x_i − x_j|²/2 on the action of any chain with plan γ.
pub fn straight_line_action(grid: &GridSpec, plan: &EndpointPlan) -> f64 {
    let x = grid.centers();
    let n = grid.n;
    (0..n * n)
        .map(|idx| {
            let d = x[idx / n] - x[idx % n];
            0.5 * plan.as_slice()[idx] * d * d
        })
        .sum()
}

pub fn path_statistics(c: &ChainCoupling) -> PathStatistics {
    let msgs = c.messages();
    path_statistics_with(c, &msgs)
}

fn path_statistics_with(c: &ChainCoupling, msgs: &Messages) -> PathStatistics {
    let grid = c.grid();
    let (n, t) = (grid.n, grid.steps);
    let x = grid.centers();
    let dt = grid.dt();
    let step_action: Vec<f64> = (0..t)
        .map(|k| {
            let pi = c.two_time_marginal(msgs, k);
            (0..n * n)
                .map(|idx| {
                    let d = x[idx % n] - x[idx / n];
                    pi[idx] * d * d / (2.0 * dt)
                })
                .sum()
        })
        .collect();
    let action: f64 = step_action.iter().sum();
    let marginals = c.time_marginals(msgs);
    let mass: f64 = marginals[0].iter().sum();
    let pair = c.pair_marginal(msgs);
    let pair_term: f64 = pair
        .iter()
        .zip(c.log_a())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, a)| p * a)
        .sum();
    let time_term: f64 = (1..t)
        .map(|k| marginals[k].iter().zip(c.log_b(k)).map(|(m, lb)| m * lb).sum::<f64>())
        .sum();
    let eps = c.eps();
    let entropy = pair_term + time_term - action / eps;
    let mean_paths = (0..=t)
        .map(|k| {
            let (f, h, lb) = (&msgs.forward[k], &msgs.backward[k], c.log_b(k));
            (0..n)
                .map(|i0| {
                    let w: Vec<f64> = (0..n).map(|j| f[i0 * n + j] + lb[j] + h[i0 * n + j]).collect();
                    let m = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let (num, den) = w.iter().zip(&x).fold((0.0, 0.0), |(a, b), (wj, xj)| {
                        let e = (wj - m).exp();
                        (a + e * xj, b + e)
                    });
                    num / den
                })
                .collect()
        })
        .collect();
    PathStatistics {
        action,
        step_action,
        entropy,
        objective: action + eps * (entropy - mass),
        dual: c.dual_objective(),
        mass,
        mean_paths,
    }
}

/// Test function sin(πt)·exp(−(x − center)²/(2·width²)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub center: f64,
    pub width: f64,
}

impl Probe {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        (PI * t).sin() * (-0.5 * z * z).exp()
    }
}

/// Four probes centred at a quarter and three eighths of the way in from
/// either end of the domain.
pub fn default_battery(grid: &GridSpec) -> Vec<Probe> {
    let len = grid.b - grid.a;
    [0.25, 0.375, 0.625, 0.75]
        .iter()
        .map(|f| Probe {
            center: grid.a + f * len,
            width: 0.1 * len,
        })
        .collect()
}

/// Pressure on interior slices k = 1..T−1: p = c·φ with φ_k = ε log b_k
/// shifted to mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureGrid {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    /// Calibration c fitted by acceleration consistency.
    pub scale: f64,
    /// Per-probe calibrations c_m.
    pub probe_scales: Vec<f64>,
}

impl PressureGrid {
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.phi
            .iter()
            .map(|row| row.iter().map(|v| self.scale * v).collect())
            .collect()
    }

    /// max_m |c_m − c| / |c|.
    pub fn scale_spread(&self) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.probe_scales
            .iter()
            .map(|c| (c - self.scale).abs() / self.scale.abs())
            .fold(0.0, f64::max)
    }

    /// ∂ₓφ per slice by central differences, one-sided at the ends.
    pub fn phi_gradient(&self) -> Vec<Vec<f64>> {
        self.phi.iter().map(|row| gradient(row, &self.x)).collect()
    }

    /// max |φ_k(i) − φ_k(n−1−i)| relative to max |φ|.
    pub fn reflection_asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.phi
            .iter()
            .flat_map(|row| row.iter().zip(row.iter().rev()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
            / scale
    }

    /// max |φ_k − other_{T−k}| relative to max |φ|.
    pub fn time_reversal_gap(&self, other: &PressureGrid) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.phi
            .iter()
            .zip(other.phi.iter().rev())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max)
            / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.phi.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn gradient(v: &[f64], x: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (v[hi] - v[lo]) / (x[hi] - x[lo])
        })
        .collect()
}

/// Mean-zero dual potentials φ_k = ε log b_k for k = 1..T−1.
pub fn dual_potentials(c: &ChainCoupling) -> Vec<Vec<f64>> {
    (1..c.grid().steps)
        .map(|k| {
            let row: Vec<f64> = c.log_b(k).iter().map(|v| c.eps() * v).collect();
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            row.iter().map(|v| v - mean).collect()
        })
        .collect()
}

/// Weak acceleration and pressure terms of one probe ψ:
/// A = Σ_k Δt E[(x_{k+1} − 2x_k + x_{k−1})/Δt² ψ(t_k, x_k)] and
/// B = Σ_k Δt E[∂ₓφ_k(x_k) ψ(t_k, x_k)], so that A + cB ≈ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeTerms {
    pub acceleration: f64,
    pub pressure: f64,
}

fn probe_terms(c: &ChainCoupling, msgs: &Messages, phi: &[Vec<f64>], battery: &[Probe]) -> Vec<ProbeTerms> {
    let grid = c.grid();
    let (n, t) = (grid.n, grid.steps);
    let x = grid.centers();
    let dt = grid.dt();
    let pairs: Vec<Vec<f64>> = (0..t).map(|k| c.two_time_marginal(msgs, k)).collect();
    let marginals = c.time_marginals(msgs);
    let grads: Vec<Vec<f64>> = phi.iter().map(|row| gradient(row, &x)).collect();
    battery
        .iter()
        .map(|probe| {
            let mut acc = 0.0;
            let mut prs = 0.0;
            for k in 1..t {
                let tk = k as f64 * dt;
                let psi: Vec<f64> = x.iter().map(|&xi| probe.value(tk, xi)).collect();
                let (ahead, behind) = (&pairs[k], &pairs[k - 1]);
                for j in 0..n {
                    for l in 0..n {
                        let d = x[l] - x[j];
                        acc += (ahead[j * n + l] * psi[j] - behind[j * n + l] * psi[l]) * d / dt;
                    }
                    prs += dt * marginals[k][j] * grads[k - 1][j] * psi[j];
                }
            }
            ProbeTerms {
                acceleration: acc,
                pressure: prs,
            }
        })
        .collect()
}

/// Dual potentials calibrated into a pressure by least squares over the
/// default probe battery.
pub fn recover_pressure(c: &ChainCoupling) -> PressureGrid {
    let msgs = c.messages();
    let phi = dual_potentials(c);
    let terms = probe_terms(c, &msgs, &phi, &default_battery(c.grid()));
    let num: f64 = terms.iter().map(|p| p.acceleration * p.pressure).sum();
    let den: f64 = terms.iter().map(|p| p.pressure * p.pressure).sum();
    let scale = if den > 0.0 { -num / den } else { 0.0 };
    let probe_scales = terms
        .iter()
        .map(|p| if p.pressure != 0.0 { -p.acceleration / p.pressure } else { 0.0 })
        .collect();
    let grid = c.grid();
    PressureGrid {
        times: (1..grid.steps).map(|k| k as f64 * grid.dt()).collect(),
        x: grid.centers(),
        phi,
        scale,
        probe_scales,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub terms: Vec<ProbeTerms>,
    /// ‖A + cB‖₂ over the battery.
    pub residual: f64,
    /// residual / ‖A‖₂, or the residual itself when A vanishes.
    pub relative: f64,
}

/// Weak residual of d²x/dt² + ∂ₓp = 0 for the pressure `p` over `battery`.
pub fn acceleration_consistency(c: &ChainCoupling, p: &PressureGrid, battery: &[Probe]) -> ConsistencyReport {
    let msgs = c.messages();
    let terms = probe_terms(c, &msgs, &p.phi, battery);
    let residual = terms
        .iter()
        .map(|q| (q.acceleration + p.scale * q.pressure).powi(2))
        .sum::<f64>()
        .sqrt();
    let size = terms.iter().map(|q| q.acceleration.powi(2)).sum::<f64>().sqrt();
    ConsistencyReport {
        terms,
        residual,
        relative: if size > 0.0 { residual / size } else { residual },
    }
}

/// Summary of an approximate minimizing geodesic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxGeodesicReport {
    pub action: f64,
    pub consistency_residual: f64,
    pub time_violation: f64,
    pub pair_violation: f64,
}

pub fn approx_geodesic_report(c: &ChainCoupling, p: &PressureGrid) -> ApproxGeodesicReport {
    let stats = path_statistics(c);
    let cons = acceleration_consistency(c, p, &default_battery(c.grid()));
    let (time_violation, pair_violation) = c.violations();
    ApproxGeodesicReport {
        action: stats.action,
        consistency_residual: cons.relative,
        time_violation,
        pair_violation,
    }
}

/// Relative gap between the pressure gradients of two solver runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// sup_k ‖∇φ₁ − ∇φ₂‖ / sup_k ‖∇φ₁‖.
    pub deviation: f64,
    /// sup_k ‖∇φ₁‖.
    pub scale: f64,
    /// ‖∇φ₁ − ∇φ₂‖ on each interior slice.
    pub per_slice: Vec<f64>,
    pub iterations: [usize; 2],
}

/// Solves the same problem with two configurations and compares the
/// gradients of their dual potentials. The calibration constant cancels.
pub fn uniqueness_probe(
    grid: &GridSpec,
    plan: &EndpointPlan,
    first: &SolverConfig,
    second: &SolverConfig,
) -> Result<UniquenessReport> {
    let a = solve(grid, plan, first)?;
    let b = solve(grid, plan, second)?;
    Ok(compare_gradients(&a, &b))
}

pub fn compare_gradients(a: &ChainCoupling, b: &ChainCoupling) -> UniquenessReport {
    let x = a.grid().centers();
    let w = a.grid().width();
    let norm = |v: &[f64]| (w * v.iter().map(|g| g * g).sum::<f64>()).sqrt();
    let (pa, pb) = (dual_potentials(a), dual_potentials(b));
    let mut scale: f64 = 0.0;
    let mut per_slice = Vec::with_capacity(pa.len());
    for (ra, rb) in pa.iter().zip(&pb) {
        let (ga, gb) = (gradient(ra, &x), gradient(rb, &x));
        scale = scale.max(norm(&ga));
        let diff: Vec<f64> = ga.iter().zip(&gb).map(|(u, v)| u - v).collect();
        per_slice.push(norm(&diff));
    }
    let worst = per_slice.iter().copied().fold(0.0, f64::max);
    UniquenessReport {
        deviation: if scale > 0.0 { worst / scale } else { 0.0 },
        scale,
        per_slice,
        iterations: [a.stats().iterations, b.stats().iterations],
    }
}

/// ∫_{−1}^{1} ½ dx ∫₀¹ ½|∂ₜg_t(x)|² dt for the self-similar map, the continuum
/// action of the self-similar plan under the uniform law.
pub fn self_similar_action(nodes: usize) -> f64 {
    use crate::quadrature::GaussLegendre;
    let rule = GaussLegendre::new(nodes);
    // x = u², t = t*·(1/t*)^τ removes the endpoint singularities
    let inner = |x: f64| {
        let t_star = x.powf(1.5);
        let span = -t_star.ln();
        rule.integrate(0.0, 1.0, |tau| {
            let t = t_star * (span * tau).exp();
            let v = crate::self_similar::first_component_rate(t, x);
            0.5 * v * v * t * span
        })
    };
    rule.integrate(0.0, 1.0, |u| 2.0 * u * inner(u * u))
}

/// Pearson correlation of two samples.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
