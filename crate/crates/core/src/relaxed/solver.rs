use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logspace::{lse_columns, lse_matmul};
use super::plan::{EndpointPlan, GridSpec};
use crate::error::{invalid, Error, Result};

/// Order of the scaling updates within one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepOrder {
    /// Time marginals k = 1..T−1, then the endpoint pair.
    Forward,
    /// Endpoint pair, then time marginals k = T−1..1.
    Backward,
}

/// Starting point for the scaling potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    Zero,
    /// Time potentials drawn uniformly from [−amplitude, amplitude].
    Random { seed: u64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_factor: f64,
    /// Cap on the total number of sweeps over all stages.
    pub max_iter: usize,
    /// ℓ1 marginal tolerance at the final ε.
    pub tol_marg: f64,
    /// ℓ1 marginal tolerance at intermediate ε.
    pub stage_tol: f64,
    pub order: SweepOrder,
    pub init: Init,
    /// Sweeps between two marginal checks.
    pub check_every: usize,
    /// Scaling sweeps at the start of each stage before switching to damped
    /// Newton steps on the dual. `usize::MAX` gives pure iterative scaling.
    pub presweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_start: 0.1,
            eps_end: 1e-3,
            eps_factor: 0.5,
            max_iter: 50_000,
            tol_marg: 1e-8,
            stage_tol: 1e-5,
            order: SweepOrder::Forward,
            init: Init::Zero,
            check_every: 10,
            presweeps: 20,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_end > 0.0 && self.eps_end <= self.eps_start && self.eps_start.is_finite()) {
            return invalid(format!(
                "need 0 < eps_end <= eps_start, got {} and {}",
                self.eps_end, self.eps_start
            ));
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return invalid(format!("eps_factor must lie in (0, 1), got {}", self.eps_factor));
        }
        if !(self.tol_marg > 0.0 && self.stage_tol > 0.0) {
            return invalid("tolerances must be positive");
        }
        if self.max_iter == 0 || self.check_every == 0 {
            return invalid("max_iter and check_every must be positive");
        }
        if let Init::Random { amplitude, .. } = self.init {
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return invalid("random init amplitude must be finite and nonnegative");
            }
        }
        Ok(())
    }

    /// Geometric ε values from eps_start down to eps_end, the last one clamped.
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = vec![self.eps_start];
        let mut eps = self.eps_start;
        while eps > self.eps_end * (1.0 + 1e-12) {
            eps = (eps * self.eps_factor).max(self.eps_end);
            out.push(eps);
        }
        out
    }
}

/// Convergence record of one ε stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub eps: f64,
    pub sweeps: usize,
    pub newton_steps: usize,
    /// Dual objective after each sweep or Newton step.
    pub dual: Vec<f64>,
    pub time_violation: f64,
    pub pair_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub time_violation: f64,
    pub pair_violation: f64,
    pub stages: Vec<StageLog>,
}

/// Log-domain forward and backward messages of the augmented chain, indexed
/// [k][i₀·n + j] for k = 0..=T.
pub struct Messages {
    pub forward: Vec<Vec<f64>>,
    pub backward: Vec<Vec<f64>>,
}

/// Entropic generalized flow on the chain (start cell, cell at step k).
///
/// The path law is P(i₀..i_T) ∝ a(i₀, i_T) Π_k b_k(i_k) Π_k K(i_k, i_{k+1}) with
/// K = exp(−|x−y|²/(2εΔt)).
#[derive(Debug, Clone)]
pub struct ChainCoupling {
    grid: GridSpec,
    plan: EndpointPlan,
    eps: f64,
    schedule: Vec<f64>,
    log_b: Vec<Vec<f64>>,
    log_a: Vec<f64>,
    log_kernel: Vec<f64>,
    stats: SolveStats,
}

pub(crate) fn log_kernel(grid: &GridSpec, eps: f64) -> Vec<f64> {
    let x = grid.centers();
    let scale = 1.0 / (2.0 * eps * grid.dt());
    x.iter()
        .flat_map(|&xi| x.iter().map(move |&xj| -(xi - xj) * (xi - xj) * scale))
        .collect()
}

pub(super) struct State<'a> {
    pub(super) grid: &'a GridSpec,
    pub(super) log_gamma: Vec<f64>,
    pub(super) log_u: f64,
    pub(super) log_b: Vec<Vec<f64>>,
    pub(super) log_a: Vec<f64>,
    pub(super) kernel: Vec<f64>,
    /// Total mass of the current path law.
    pub(super) mass: f64,
}

impl State<'_> {
    pub(super) fn n(&self) -> usize {
        self.grid.n
    }

    pub(super) fn start(&self) -> Vec<f64> {
        let n = self.n();
        let mut f = vec![f64::NEG_INFINITY; n * n];
        (0..n).for_each(|i| f[i * n + i] = 0.0);
        f
    }

    pub(super) fn forward_step(&self, prev: &[f64], k: usize) -> Vec<f64> {
        let n = self.n();
        let lb = &self.log_b[k];
        let a: Vec<f64> = prev.iter().enumerate().map(|(idx, v)| v + lb[idx % n]).collect();
        let mut out = vec![0.0; n * n];
        lse_matmul(&a, &self.kernel, n, &mut out);
        out
    }

    fn backward_step(&self, next: &[f64], k: usize) -> Vec<f64> {
        let n = self.n();
        let lb = &self.log_b[k + 1];
        let a: Vec<f64> = next.iter().enumerate().map(|(idx, v)| v + lb[idx % n]).collect();
        let mut out = vec![0.0; n * n];
        lse_matmul(&a, &self.kernel, n, &mut out);
        out
    }

    pub(super) fn forward_all(&self) -> Vec<Vec<f64>> {
        let mut out = vec![self.start()];
        for k in 0..self.grid.steps {
            let next = self.forward_step(&out[k], k);
            out.push(next);
        }
        out
    }

    pub(super) fn backward_all(&self) -> Vec<Vec<f64>> {
        let t = self.grid.steps;
        let mut out = vec![Vec::new(); t + 1];
        out[t] = self.log_a.clone();
        for k in (0..t).rev() {
            out[k] = self.backward_step(&out[k + 1], k);
        }
        out
    }

    pub(super) fn log_marginal_sum(&self, f: &[f64], h: &[f64]) -> Vec<f64> {
        let sum: Vec<f64> = f.iter().zip(h).map(|(a, b)| a + b).collect();
        lse_columns(&sum, self.n())
    }

    fn update_time(&mut self, k: usize, f: &[f64], h: &[f64]) {
        let s = self.log_marginal_sum(f, h);
        self.log_b[k] = s.iter().map(|v| self.log_u - v).collect();
        self.mass = 1.0;
    }

    fn update_pair(&mut self, f_last: &[f64]) {
        self.log_a = self
            .log_gamma
            .iter()
            .zip(f_last)
            .map(|(g, f)| if *g == f64::NEG_INFINITY { *g } else { g - f })
            .collect();
        self.mass = 1.0;
    }

    fn sweep(&mut self, order: SweepOrder) {
        let t = self.grid.steps;
        match order {
            SweepOrder::Forward => {
                let h = self.backward_all();
                let mut f = self.start();
                for k in 1..t {
                    f = self.forward_step(&f, k - 1);
                    self.update_time(k, &f, &h[k]);
                }
                let f_last = self.forward_step(&f, t - 1);
                self.update_pair(&f_last);
            }
            SweepOrder::Backward => {
                let f = self.forward_all();
                self.update_pair(&f[t]);
                let mut h = self.log_a.clone();
                for k in (1..t).rev() {
                    h = self.backward_step(&h, k);
                    self.update_time(k, &f[k], &h);
                }
            }
        }
    }

    /// ℓ1 violations (max over interior times, endpoint pair).
    fn violations(&self) -> (f64, f64) {
        let f = self.forward_all();
        let h = self.backward_all();
        let u = self.log_u.exp();
        let time = (1..self.grid.steps)
            .map(|k| {
                self.log_marginal_sum(&f[k], &h[k])
                    .iter()
                    .zip(&self.log_b[k])
                    .map(|(s, lb)| ((s + lb).exp() - u).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let t = self.grid.steps;
        let pair = self
            .log_a
            .iter()
            .zip(&f[t])
            .zip(&self.log_gamma)
            .map(|((a, ft), g)| {
                let pi = if *a == f64::NEG_INFINITY { 0.0 } else { (a + ft).exp() };
                (pi - g.exp()).abs()
            })
            .sum();
        (time, pair)
    }

    fn dual(&self, eps: f64) -> f64 {
        let u = self.log_u.exp();
        let pair: f64 = self
            .log_gamma
            .iter()
            .zip(&self.log_a)
            .filter(|(g, _)| **g > f64::NEG_INFINITY)
            .map(|(g, a)| g.exp() * a)
            .sum();
        let time: f64 = self.log_b[1..self.grid.steps]
            .iter()
            .flat_map(|lb| lb.iter())
            .map(|lb| u * lb)
            .sum();
        eps * (pair + time - self.mass)
    }

    fn refresh_mass(&mut self) {
        let f = self.forward_all();
        let t = self.grid.steps;
        let total: Vec<f64> = self.log_a.iter().zip(&f[t]).map(|(a, b)| a + b).collect();
        self.mass = super::logspace::lse(&total).exp();
    }

    fn rescale(&mut self, factor: f64) {
        self.log_b.iter_mut().flatten().for_each(|v| *v *= factor);
        self.log_a.iter_mut().for_each(|v| *v *= factor);
    }
}

fn initial_state<'a>(grid: &'a GridSpec, plan: &EndpointPlan, init: Init) -> State<'a> {
    let n = grid.n;
    let t = grid.steps;
    let log_gamma: Vec<f64> = plan.as_slice().iter().map(|g| g.ln()).collect();
    let mut log_b = vec![vec![0.0; n]; t + 1];
    if let Init::Random { seed, amplitude } = init {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for lb in &mut log_b[1..t] {
            lb.iter_mut()
                .for_each(|v| *v = amplitude * rng.random_range(-1.0..=1.0));
        }
    }
    let log_a = log_gamma
        .iter()
        .map(|g| if *g == f64::NEG_INFINITY { *g } else { 0.0 })
        .collect();
    State {
        grid,
        log_gamma,
        log_u: grid.uniform().ln(),
        log_b,
        log_a,
        kernel: Vec::new(),
        mass: 1.0,
    }
}

#[cfg(test)]
pub(super) fn test_state<'a>(grid: &'a GridSpec, plan: &EndpointPlan, eps: f64, seed: u64) -> State<'a> {
    let mut s = initial_state(grid, plan, Init::Random { seed, amplitude: 1.0 });
    s.kernel = log_kernel(grid, eps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    for (a, g) in s.log_a.iter_mut().zip(&s.log_gamma) {
        if *g > f64::NEG_INFINITY {
            *a = rng.random_range(-1.0..=1.0);
        }
    }
    s.refresh_mass();
    s
}

/// Entropic solve with an ε-schedule and warm starts. Each stage starts with
/// iterative scaling sweeps and continues with damped Newton steps.
pub fn solve(grid: &GridSpec, plan: &EndpointPlan, cfg: &SolverConfig) -> Result<ChainCoupling> {
    cfg.validate()?;
    if plan.n() != grid.n {
        return invalid(format!("plan is {0}x{0} but the grid has {1} cells", plan.n(), grid.n));
    }
    let schedule = cfg.schedule();
    let mut state = initial_state(grid, plan, cfg.init);
    let mut stats = SolveStats::default();
    for (s, &eps) in schedule.iter().enumerate() {
        if s > 0 {
            state.rescale(schedule[s - 1] / eps);
        }
        state.kernel = log_kernel(grid, eps);
        state.refresh_mass();
        let last = s + 1 == schedule.len();
        let tol = if last { cfg.tol_marg } else { cfg.stage_tol.max(cfg.tol_marg) };
        let mut log = StageLog {
            eps,
            sweeps: 0,
            newton_steps: 0,
            dual: Vec::new(),
            time_violation: f64::INFINITY,
            pair_violation: f64::INFINITY,
        };
        loop {
            let newton = log.sweeps >= cfg.presweeps && state.newton_step();
            if newton {
                log.newton_steps += 1;
            } else {
                state.sweep(cfg.order);
                log.sweeps += 1;
            }
            stats.iterations += 1;
            log.dual.push(state.dual(eps));
            let due = newton || log.sweeps.is_multiple_of(cfg.check_every);
            let exhausted = stats.iterations >= cfg.max_iter;
            if due || exhausted {
                let (tv, pv) = state.violations();
                log.time_violation = tv;
                log.pair_violation = pv;
                if tv.max(pv) <= tol {
                    break;
                }
                if exhausted {
                    return Err(Error::NotConverged {
                        eps,
                        iterations: stats.iterations,
                        time_violation: tv,
                        pair_violation: pv,
                    });
                }
            }
        }
        stats.time_violation = log.time_violation;
        stats.pair_violation = log.pair_violation;
        stats.stages.push(log);
    }
    let eps = *schedule.last().expect("schedule is never empty");
    Ok(ChainCoupling {
        grid: *grid,
        plan: plan.clone(),
        eps,
        schedule,
        log_b: state.log_b,
        log_a: state.log_a,
        log_kernel: state.kernel,
        stats,
    })
}

impl ChainCoupling {
    /// Rebuilds a coupling from stored potentials; `log_b` holds the T−1
    /// interior time potentials.
    pub fn from_parts(
        grid: GridSpec,
        plan: EndpointPlan,
        eps: f64,
        schedule: Vec<f64>,
        log_b: Vec<Vec<f64>>,
        log_a: Vec<f64>,
        stats: SolveStats,
    ) -> Result<Self> {
        let n = grid.n;
        if plan.n() != n || log_a.len() != n * n || log_b.len() + 1 != grid.steps {
            return invalid("potential shapes do not match the grid");
        }
        if log_b.iter().any(|lb| lb.len() != n) || !(eps > 0.0) {
            return invalid("potential shapes do not match the grid");
        }
        let mut full = vec![vec![0.0; n]];
        full.extend(log_b);
        full.push(vec![0.0; n]);
        Ok(Self {
            log_kernel: log_kernel(&grid, eps),
            grid,
            plan,
            eps,
            schedule,
            log_b: full,
            log_a,
            stats,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn plan(&self) -> &EndpointPlan {
        &self.plan
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn schedule(&self) -> &[f64] {
        &self.schedule
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    /// log b_k for k = 0..=T; the end slices are identically zero.
    pub fn log_b(&self, k: usize) -> &[f64] {
        &self.log_b[k]
    }

    /// log a(i₀, i_T), row-major; −∞ where γ vanishes.
    pub fn log_a(&self) -> &[f64] {
        &self.log_a
    }

    fn state(&self) -> State<'_> {
        State {
            grid: &self.grid,
            log_gamma: self.plan.as_slice().iter().map(|g| g.ln()).collect(),
            log_u: self.grid.uniform().ln(),
            log_b: self.log_b.clone(),
            log_a: self.log_a.clone(),
            kernel: self.log_kernel.clone(),
            mass: 1.0,
        }
    }

    fn state_with_mass(&self) -> State<'_> {
        let mut s = self.state();
        s.refresh_mass();
        s
    }

    pub fn messages(&self) -> Messages {
        let s = self.state();
        Messages {
            forward: s.forward_all(),
            backward: s.backward_all(),
        }
    }

    /// ℓ1 violations (max over interior times, endpoint pair).
    pub fn violations(&self) -> (f64, f64) {
        self.state().violations()
    }

    pub fn dual_objective(&self) -> f64 {
        self.state_with_mass().dual(self.eps)
    }

    /// Marginal of the cell at step k for k = 0..=T.
    pub fn time_marginals(&self, msgs: &Messages) -> Vec<Vec<f64>> {
        let s = self.state();
        (0..=self.grid.steps)
            .map(|k| {
                s.log_marginal_sum(&msgs.forward[k], &msgs.backward[k])
                    .iter()
                    .zip(&self.log_b[k])
                    .map(|(v, lb)| (v + lb).exp())
                    .collect()
            })
            .collect()
    }

    /// Joint law of (i_k, i_{k+1}), row-major, for k = 0..T−1.
    pub fn two_time_marginal(&self, msgs: &Messages, k: usize) -> Vec<f64> {
        let n = self.grid.n;
        let f = &msgs.forward[k];
        let h = &msgs.backward[k + 1];
        let (lb0, lb1) = (&self.log_b[k], &self.log_b[k + 1]);
        let mut out = vec![0.0; n * n];
        let mut buf = vec![0.0; n];
        for j in 0..n {
            for l in 0..n {
                for (i0, b) in buf.iter_mut().enumerate() {
                    *b = f[i0 * n + j] + h[i0 * n + l];
                }
                let v = super::logspace::lse(&buf) + lb0[j] + lb1[l] + self.log_kernel[j * n + l];
                out[j * n + l] = v.exp();
            }
        }
        out
    }

    /// Joint law of (i₀, i_T).
    pub fn pair_marginal(&self, msgs: &Messages) -> Vec<f64> {
        let t = self.grid.steps;
        self.log_a
            .iter()
            .zip(&msgs.forward[t])
            .map(|(a, f)| if *a == f64::NEG_INFINITY { 0.0 } else { (a + f).exp() })
            .collect()
    }
}
