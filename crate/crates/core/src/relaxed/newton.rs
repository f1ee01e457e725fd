//! Damped Newton steps on the entropic dual.
//!
//! With θ = (log b_1..log b_{T−1}, log a on the support of γ) the dual divided
//! by ε is ⟨c, θ⟩ − Z(θ), where Z is the total mass of the path law. The
//! gradient is c − E[φ] and the Hessian of Z is the second moment E[φφᵀ] of
//! the constraint indicators. Its pair block is diagonal and is eliminated by
//! a Schur complement, leaving a dense (T−1)n system.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::logspace::{lse, lse_matmul};
use super::solver::State;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const RIDGE: f64 = 1e-12;

struct Moments {
    /// E[φ_time] indexed (k−1)·n + j.
    mu: Vec<f64>,
    /// E[φ_pair] on the support of γ.
    pi: Vec<f64>,
    support: Vec<usize>,
    hessian_time: DMatrix<f64>,
    cross: DMatrix<f64>,
}

impl State<'_> {
    /// log G_{k→m} for 1 ≤ k < m ≤ T: path sums from cell j at step k to cell
    /// l at step m, with the time potentials strictly between k and m.
    fn propagators(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.n();
        let t = self.grid.steps;
        (1..t)
            .map(|k| {
                let mut out = vec![self.kernel.clone()];
                for m in k + 1..t {
                    let lb = &self.log_b[m];
                    let prev = out.last().expect("nonempty");
                    let a: Vec<f64> = prev.iter().enumerate().map(|(idx, v)| v + lb[idx % n]).collect();
                    let mut next = vec![0.0; n * n];
                    lse_matmul(&a, &self.kernel, n, &mut next);
                    out.push(next);
                }
                out
            })
            .collect()
    }

    fn moments(&self) -> Moments {
        let n = self.n();
        let t = self.grid.steps;
        let nt = (t - 1) * n;
        let f = self.forward_all();
        let h = self.backward_all();
        let g = self.propagators();
        let mut mu = vec![0.0; nt];
        for k in 1..t {
            let s = self.log_marginal_sum(&f[k], &h[k]);
            for j in 0..n {
                mu[(k - 1) * n + j] = (s[j] + self.log_b[k][j]).exp();
            }
        }
        let support: Vec<usize> = (0..n * n).filter(|&i| self.log_gamma[i] > f64::NEG_INFINITY).collect();
        let pi: Vec<f64> = support.iter().map(|&i| (self.log_a[i] + f[t][i]).exp()).collect();

        let pairs: Vec<(usize, usize)> = (1..t).flat_map(|k| (k + 1..t).map(move |m| (k, m))).collect();
        let blocks: Vec<Vec<f64>> = pairs
            .par_iter()
            .map(|&(k, m)| {
                let gkm = &g[k - 1][m - k - 1];
                let mut block = vec![0.0; n * n];
                let mut buf = vec![0.0; n];
                for j in 0..n {
                    for l in 0..n {
                        for (i0, b) in buf.iter_mut().enumerate() {
                            *b = f[k][i0 * n + j] + h[m][i0 * n + l];
                        }
                        let v = lse(&buf) + self.log_b[k][j] + self.log_b[m][l] + gkm[j * n + l];
                        block[j * n + l] = v.exp();
                    }
                }
                block
            })
            .collect();
        let mut hessian_time = DMatrix::zeros(nt, nt);
        for (i, &v) in mu.iter().enumerate() {
            hessian_time[(i, i)] = v;
        }
        for (&(k, m), block) in pairs.iter().zip(&blocks) {
            for j in 0..n {
                for l in 0..n {
                    let v = block[j * n + l];
                    hessian_time[((k - 1) * n + j, (m - 1) * n + l)] = v;
                    hessian_time[((m - 1) * n + l, (k - 1) * n + j)] = v;
                }
            }
        }
        let mut cross = DMatrix::zeros(nt, support.len());
        for k in 1..t {
            let gkt = &g[k - 1][t - k - 1];
            for (p, &idx) in support.iter().enumerate() {
                let (a, b) = (idx / n, idx % n);
                for j in 0..n {
                    let v = f[k][a * n + j] + self.log_b[k][j] + gkt[j * n + b] + self.log_a[idx];
                    cross[((k - 1) * n + j, p)] = v.exp();
                }
            }
        }
        Moments { mu, pi, support, hessian_time, cross }
    }

    /// Dual divided by ε at the current potentials, with a fresh mass.
    fn scaled_dual(&self) -> f64 {
        let f_last = self.forward_last();
        let total: Vec<f64> = self.log_a.iter().zip(&f_last).map(|(a, b)| a + b).collect();
        self.linear_part() - lse(&total).exp()
    }

    fn forward_last(&self) -> Vec<f64> {
        let mut f = self.start();
        for k in 0..self.grid.steps {
            f = self.forward_step(&f, k);
        }
        f
    }

    fn linear_part(&self) -> f64 {
        let u = self.log_u.exp();
        let pair: f64 = self
            .log_gamma
            .iter()
            .zip(&self.log_a)
            .filter(|(g, _)| **g > f64::NEG_INFINITY)
            .map(|(g, a)| g.exp() * a)
            .sum();
        let time: f64 = self.log_b[1..self.grid.steps].iter().flatten().map(|v| u * v).sum();
        pair + time
    }

    /// One damped Newton step. Returns false when no ascent step was found.
    pub(super) fn newton_step(&mut self) -> bool {
        let n = self.n();
        let t = self.grid.steps;
        let nt = (t - 1) * n;
        let mom = self.moments();
        let u = self.log_u.exp();
        let g_time = DVector::from_iterator(nt, mom.mu.iter().map(|m| u - m));
        let g_pair = DVector::from_iterator(
            mom.support.len(),
            mom.support.iter().zip(&mom.pi).map(|(&i, p)| self.log_gamma[i].exp() - p),
        );
        if mom.pi.iter().any(|p| !(*p > 0.0)) {
            return false;
        }
        let inv_pi = DVector::from_iterator(mom.pi.len(), mom.pi.iter().map(|p| 1.0 / p));
        let mut scaled = mom.cross.clone();
        for (p, mut col) in scaled.column_iter_mut().enumerate() {
            col *= inv_pi[p].sqrt();
        }
        let schur = &mom.hessian_time - &scaled * scaled.transpose();
        let rhs = &g_time - &mom.cross * g_pair.component_mul(&inv_pi);
        let top = (0..nt).map(|i| schur[(i, i)]).fold(0.0, f64::max);
        let mut ridge = RIDGE * top.max(f64::MIN_POSITIVE);
        let d_time = loop {
            let mut m = schur.clone();
            for i in 0..nt {
                m[(i, i)] += ridge;
            }
            if let Some(ch) = m.cholesky() {
                break ch.solve(&rhs);
            }
            ridge *= 100.0;
            if ridge > top {
                return false;
            }
        };
        let d_pair = (&g_pair - mom.cross.transpose() * &d_time).component_mul(&inv_pi);
        let slope = g_time.dot(&d_time) + g_pair.dot(&d_pair);
        if !(slope > 0.0) {
            return false;
        }

        let base = self.linear_part() - self.mass;
        let (log_b0, log_a0) = (self.log_b.clone(), self.log_a.clone());
        let slack = 1e-14 * (1.0 + base.abs());
        let mut alpha = 1.0;
        for _ in 0..MAX_HALVINGS {
            for k in 1..t {
                for j in 0..n {
                    self.log_b[k][j] = log_b0[k][j] + alpha * d_time[(k - 1) * n + j];
                }
            }
            for (p, &idx) in mom.support.iter().enumerate() {
                self.log_a[idx] = log_a0[idx] + alpha * d_pair[p];
            }
            let trial = self.scaled_dual();
            if trial.is_finite() && trial >= base + ARMIJO * alpha * slope - slack {
                self.mass = self.linear_part() - trial;
                return true;
            }
            alpha *= 0.5;
        }
        self.log_b = log_b0;
        self.log_a = log_a0;
        false
    }
}
