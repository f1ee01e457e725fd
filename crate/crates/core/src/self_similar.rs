//! The explicit self-similar generalized geodesic on D = [−L,L]×[0,1]².
//!
//! Only the first coordinate moves. With s(t) = t^{2/3}, a particle labelled
//! x₁ ∈ (0, s) sits at s(2√(x₁/s) − 1), one labelled x₁ ∈ (−s, 0) at
//! s(1 − 2√(−x₁/s)), and everything outside the support is at rest. The
//! pressure p_t(x₁) = −(s² − x₁²)₊ / (9t²) is Lipschitz but its second
//! derivative carries negative Dirac masses at x₁ = ±s.

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;

/// Half-width of the support at time t, t^{2/3}.
pub fn support_radius(t: f64) -> f64 {
    t.cbrt() * t.cbrt()
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("time must be positive and finite, got {t}"));
    }
    Ok(())
}

/// First component of g_t at label x₁. The label x₁ = 0 takes the limit from
/// the positive side, −t^{2/3}.
pub fn first_component(t: f64, x1: f64) -> f64 {
    let s = support_radius(t);
    if x1 >= s || x1 <= -s {
        x1
    } else if x1 >= 0.0 {
        s * (2.0 * (x1 / s).sqrt() - 1.0)
    } else {
        s * (1.0 - 2.0 * (-x1 / s).sqrt())
    }
}

/// Time derivative of [`first_component`] at fixed label.
pub(crate) fn first_component_rate(t: f64, x1: f64) -> f64 {
    let s = support_radius(t);
    if x1 >= s || x1 <= -s {
        return 0.0;
    }
    let drift = 2.0 / 3.0 / t.cbrt();
    if x1 >= 0.0 {
        2.0 / 3.0 * x1.sqrt() / (s) - drift
    } else {
        drift - 2.0 / 3.0 * (-x1).sqrt() / s
    }
}

/// D = [−L, L]×[0,1]² with L ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    half_width: f64,
}

impl DomainSpec {
    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width >= 1.0 && half_width.is_finite()) {
            return invalid(format!("domain half-width must be >= 1, got {half_width}"));
        }
        Ok(Self { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        x.x.abs() <= self.half_width && (0.0..=1.0).contains(&x.y) && (0.0..=1.0).contains(&x.z)
    }

    pub(crate) fn check(&self, x: &Vector3<f64>) -> Result<()> {
        if !self.contains(x) {
            return invalid(format!(
                "point ({}, {}, {}) lies outside [-{L}, {L}]x[0,1]^2",
                x.x,
                x.y,
                x.z,
                L = self.half_width
            ));
        }
        Ok(())
    }
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self { half_width: 1.0 }
    }
}

/// Absolutely continuous and singular parts of ∂²p_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2pParts {
    /// Density on |s| < t^{2/3}, equal to 2/(9t²).
    pub density: f64,
    /// Weight of each Dirac mass at ±t^{2/3}, equal to −2/(9t^{4/3}).
    pub dirac_weight: f64,
    /// Location t^{2/3} of the interfaces.
    pub interface: f64,
}

impl D2pParts {
    /// Total mass of ∂²p over the real line.
    pub fn total_mass(&self) -> f64 {
        self.density * 2.0 * self.interface + 2.0 * self.dirac_weight
    }
}

/// Quadrature used by [`SelfSimilarField::volume_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VolumeQuadrature {
    pub nodes: usize,
    /// Integrate in u with x₁ = ±s·u², which removes the square-root singularity.
    pub substitution: bool,
}

impl Default for VolumeQuadrature {
    fn default() -> Self {
        Self {
            nodes: 32,
            substitution: true,
        }
    }
}

/// Closed-form trajectory ξ_t = g_t(x) of one labelled particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: Vector3<f64>,
    pub times: Vec<f64>,
    pub xi: Vec<Vector3<f64>>,
    pub velocity: Vec<Vector3<f64>>,
    /// |x₁|^{3/2}, the time the particle starts moving.
    pub jump_time: f64,
    /// max |ξ'' + ∂₁p(t, ξ)| over nodes away from t = 0 and the jump time.
    pub ode_residual: f64,
    /// Number of nodes entering `ode_residual`.
    pub residual_nodes: usize,
}

/// Smooth path perturbation ζ with ζ(0) = ζ(1) = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// ζ_c(t) = Σ_k a_k sin(kπt), k = 1, 2, ...
    Sine { coeffs: [Vec<f64>; 3] },
    /// ζ_c(t) = t(1 − t) Σ_m a_m t^m.
    Bubble { coeffs: [Vec<f64>; 3] },
}

impl Perturbation {
    pub fn zero() -> Self {
        Perturbation::Sine {
            coeffs: [vec![], vec![], vec![]],
        }
    }

    /// Random sine sum with `modes` terms per component and coefficient
    /// a_k ~ U(−amplitude, amplitude)/k.
    pub fn random_sine<R: Rng + ?Sized>(rng: &mut R, modes: usize, amplitude: f64) -> Self {
        let mut draw = || -> Vec<f64> {
            (1..=modes)
                .map(|k| amplitude * rng.random_range(-1.0..1.0) / k as f64)
                .collect()
        };
        let coeffs = [draw(), draw(), draw()];
        Perturbation::Sine { coeffs }
    }

    pub fn value(&self, t: f64) -> Vector3<f64> {
        if t <= 0.0 || t >= 1.0 {
            return Vector3::zeros();
        }
        match self {
            Perturbation::Sine { coeffs } => Vector3::from_fn(|c, _| {
                coeffs[c]
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * t).sin())
                    .sum()
            }),
            Perturbation::Bubble { coeffs } => {
                Vector3::from_fn(|c, _| t * (1.0 - t) * horner(&coeffs[c], t))
            }
        }
    }

    pub fn derivative(&self, t: f64) -> Vector3<f64> {
        match self {
            Perturbation::Sine { coeffs } => Vector3::from_fn(|c, _| {
                coeffs[c]
                    .iter()
                    .enumerate()
                    .map(|(k, a)| {
                        let w = (k + 1) as f64 * std::f64::consts::PI;
                        a * w * (w * t).cos()
                    })
                    .sum()
            }),
            Perturbation::Bubble { coeffs } => Vector3::from_fn(|c, _| {
                let p = horner(&coeffs[c], t);
                let dp = horner_derivative(&coeffs[c], t);
                (1.0 - 2.0 * t) * p + t * (1.0 - t) * dp
            }),
        }
    }

    pub fn sample(&self, times: &[f64]) -> Vec<Vector3<f64>> {
        times.iter().map(|&t| self.value(t)).collect()
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

fn horner_derivative(coeffs: &[f64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (m, &a)| acc * t + m as f64 * a)
}

/// Second derivative at node i from its two neighbours on a non-uniform grid.
fn second_difference(times: &[f64], values: &[f64], i: usize) -> f64 {
    let (h1, h2) = (times[i] - times[i - 1], times[i + 1] - times[i]);
    2.0 * (values[i - 1] / (h1 * (h1 + h2)) - values[i] / (h1 * h2)
        + values[i + 1] / (h2 * (h1 + h2)))
}

/// Closed-form evaluators for the self-similar solution on a domain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SelfSimilarField {
    domain: DomainSpec,
}

impl SelfSimilarField {
    pub fn new(domain: DomainSpec) -> Self {
        Self { domain }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn eval_g(&self, t: f64, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        check_time(t)?;
        self.domain.check(x)?;
        Ok(Vector3::new(first_component(t, x.x), x.y, x.z))
    }

    pub fn eval_p(&self, t: f64, x1: f64) -> Result<f64> {
        check_time(t)?;
        let s = support_radius(t);
        Ok(-(s * s - x1 * x1).max(0.0) / (9.0 * t * t))
    }

    /// ∂₁p_t. On the interfaces |x₁| = t^{2/3} the limit from inside is returned.
    pub fn grad_p(&self, t: f64, x1: f64) -> Result<f64> {
        check_time(t)?;
        Ok(if x1.abs() <= support_radius(t) {
            2.0 * x1 / (9.0 * t * t)
        } else {
            0.0
        })
    }

    pub fn d2p_parts(&self, t: f64) -> Result<D2pParts> {
        check_time(t)?;
        let s = support_radius(t);
        Ok(D2pParts {
            density: 2.0 / (9.0 * t * t),
            dirac_weight: -2.0 * s / (9.0 * t * t),
            interface: s,
        })
    }

    /// Samples ξ_t = g_t(x) on `grid` ⊂ (0, 1] and measures the residual of
    /// ξ'' = −∂₁p(t, ξ) with second differences, skipping nodes within twice
    /// the local spacing of t = 0 or of the jump time.
    pub fn trajectory(&self, x: &Vector3<f64>, grid: &[f64]) -> Result<Trajectory> {
        self.domain.check(x)?;
        if grid.len() < 3 {
            return invalid("trajectory grid needs at least 3 nodes");
        }
        if grid[0] <= 0.0 || grid[grid.len() - 1] > 1.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("trajectory grid must be strictly increasing inside (0, 1]");
        }
        let xi: Vec<Vector3<f64>> = grid
            .iter()
            .map(|&t| Vector3::new(first_component(t, x.x), x.y, x.z))
            .collect();
        let velocity = grid
            .iter()
            .map(|&t| Vector3::new(first_component_rate(t, x.x), 0.0, 0.0))
            .collect();
        let jump_time = x.x.abs().powf(1.5);
        let (ode_residual, residual_nodes) = self.ode_residual(grid, &xi, jump_time);
        Ok(Trajectory {
            label: *x,
            times: grid.to_vec(),
            xi,
            velocity,
            jump_time,
            ode_residual,
            residual_nodes,
        })
    }

    fn ode_residual(&self, times: &[f64], xi: &[Vector3<f64>], jump_time: f64) -> (f64, usize) {
        let first: Vec<f64> = xi.iter().map(|p| p.x).collect();
        let mut worst: f64 = 0.0;
        let mut used = 0;
        for i in 1..times.len() - 1 {
            let t = times[i];
            let window = 2.0 * (times[i] - times[i - 1]).max(times[i + 1] - times[i]);
            if t <= window || (t - jump_time).abs() <= window {
                continue;
            }
            let accel = second_difference(times, &first, i);
            let force = self.grad_p(t, first[i]).expect("grid times are positive");
            worst = worst.max((accel + force).abs());
            used += 1;
        }
        (worst, used)
    }

    /// The trajectory displaced by ζ, with its residual recomputed.
    pub fn perturb(&self, traj: &Trajectory, pert: &Perturbation) -> Trajectory {
        let xi: Vec<Vector3<f64>> = traj
            .times
            .iter()
            .zip(&traj.xi)
            .map(|(&t, p)| p + pert.value(t))
            .collect();
        let velocity = traj
            .times
            .iter()
            .zip(&traj.velocity)
            .map(|(&t, v)| v + pert.derivative(t))
            .collect();
        let (ode_residual, residual_nodes) = self.ode_residual(&traj.times, &xi, traj.jump_time);
        Trajectory {
            label: traj.label,
            times: traj.times.clone(),
            xi,
            velocity,
            jump_time: traj.jump_time,
            ode_residual,
            residual_nodes,
        }
    }

    /// |∫ f(g_t(x₁)) dx₁ − ∫ f(x₁) dx₁| over the support [−s, s]; outside it
    /// g_t is the identity and both sides agree pointwise.
    pub fn volume_check<F: Fn(f64) -> f64>(&self, t: f64, f: F, quad: VolumeQuadrature) -> Result<f64> {
        check_time(t)?;
        if quad.nodes == 0 {
            return invalid("quadrature needs at least one node");
        }
        let s = support_radius(t);
        let rule = GaussLegendre::new(quad.nodes);
        let mapped = if quad.substitution {
            rule.integrate(0.0, 1.0, |u| {
                let x = s * u * u;
                2.0 * s * u * (f(first_component(t, x)) + f(first_component(t, -x)))
            })
        } else {
            rule.integrate(-s, 0.0, |x| f(first_component(t, x)))
                + rule.integrate(0.0, s, |x| f(first_component(t, x)))
        };
        let plain = rule.integrate(-s, s, &f);
        Ok((mapped - plain).abs())
    }

    /// Trapezoidal ∫ (½|ξ'|² − p_t(ξ_t)) dt along the sampled path.
    pub fn action_of_trajectory(&self, traj: &Trajectory) -> f64 {
        let density: Vec<f64> = traj
            .times
            .iter()
            .zip(traj.xi.iter().zip(&traj.velocity))
            .map(|(&t, (p, v))| 0.5 * v.norm_squared() - self.eval_p(t, p.x).expect("positive time"))
            .collect();
        traj.times
            .windows(2)
            .zip(density.windows(2))
            .map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1]))
            .sum()
    }

    /// SV = ½∫₀¹ (|ζ'|² − ∂²p_t((ξ_t)₁)(ζ_t)₁²) dt along the particle of `traj`.
    ///
    /// The absolutely continuous part is integrated with Gauss–Legendre panels
    /// on the time span the particle spends inside the support. The Dirac part
    /// is added at the interface crossing, located by bisection, with the
    /// weight divided by the crossing speed.
    pub fn second_variation(&self, traj: &Trajectory, pert: &Perturbation) -> f64 {
        let rule = GaussLegendre::new(24);
        let panels = 32;
        let kinetic = 0.5
            * rule.integrate_composite(0.0, 1.0, panels, |t| pert.derivative(t).norm_squared());

        let x1 = traj.label.x;
        let entry = if x1 == 0.0 { 0.0 } else { self.crossing_time(x1) };
        let mut pressure_term = 0.0;
        if entry < 1.0 {
            pressure_term -= 0.5
                * rule.integrate_composite(entry, 1.0, panels, |t| {
                    let z = pert.value(t).x;
                    2.0 / (9.0 * t * t) * z * z
                });
            if entry > 0.0 {
                let parts = self.d2p_parts(entry).expect("crossing time is positive");
                // |d/dt (|x₁| − t^{2/3})| at the crossing
                let speed = 2.0 / 3.0 / entry.cbrt();
                let z = pert.value(entry).x;
                pressure_term -= 0.5 * parts.dirac_weight * z * z / speed;
            }
        }
        kinetic + pressure_term
    }

    /// First time the particle labelled x₁ ≠ 0 meets the interface |ξ| = t^{2/3};
    /// returns a value ≥ 1 when it stays at rest on (0, 1].
    fn crossing_time(&self, x1: f64) -> f64 {
        let gap = |t: f64| first_component(t, x1).abs() - support_radius(t);
        if gap(1.0) >= 0.0 {
            return x1.abs().powf(1.5).max(1.0);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid > 0.0 && gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// ∫ (η')² − η²/(4t²) dt for the piecewise-linear interpolant of `eta` on
/// `times`, integrated exactly on each segment. If the grid starts at t = 0
/// the path must start at η = 0.
pub fn hardy_functional(eta: &[f64], times: &[f64]) -> Result<f64> {
    if eta.len() != times.len() || times.len() < 2 {
        return invalid("hardy functional needs matching samples on at least 2 nodes");
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("hardy functional grid must be increasing inside [0, inf)");
    }
    if times[0] == 0.0 && eta[0] != 0.0 {
        return invalid("path must vanish at t = 0");
    }
    let mut total = 0.0;
    for i in 0..times.len() - 1 {
        let (t0, t1) = (times[i], times[i + 1]);
        let dt = t1 - t0;
        let b = (eta[i + 1] - eta[i]) / dt;
        let a = eta[i] - b * t0;
        let mut hardy = b * b * dt;
        if t0 > 0.0 {
            hardy += a * a * (1.0 / t0 - 1.0 / t1) + 2.0 * a * b * (t1 / t0).ln();
        }
        total += b * b * dt - 0.25 * hardy;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field() -> SelfSimilarField {
        SelfSimilarField::default()
    }

    fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    #[test]
    fn domain_requires_half_width_at_least_one() {
        assert!(DomainSpec::new(0.5).is_err());
        assert!(DomainSpec::new(f64::NAN).is_err());
        assert!(DomainSpec::new(2.0).is_ok());
    }

    #[test]
    fn g_examples() {
        let f = field();
        let g = f.eval_g(1.0, &Vector3::new(0.25, 0.5, 0.5)).unwrap();
        assert_relative_eq!(g, Vector3::new(0.0, 0.5, 0.5), epsilon = 1e-15);
        let outside = Vector3::new(0.8, 0.3, 0.9);
        assert_eq!(f.eval_g(0.5, &outside).unwrap(), outside);
        let neg = f.eval_g(1.0, &Vector3::new(-0.25, 0.1, 0.2)).unwrap();
        assert_relative_eq!(neg.x, 0.0, epsilon = 1e-15);
        for x1 in [0.1, 0.37, 0.8] {
            assert_relative_eq!(first_component(0.7, -x1), -first_component(0.7, x1), epsilon = 1e-15);
        }
    }

    #[test]
    fn g_rejects_bad_input() {
        let f = field();
        assert!(f.eval_g(0.0, &Vector3::new(0.1, 0.5, 0.5)).is_err());
        assert!(f.eval_g(-1.0, &Vector3::new(0.1, 0.5, 0.5)).is_err());
        assert!(f.eval_g(0.5, &Vector3::new(1.5, 0.5, 0.5)).is_err());
        assert!(f.eval_p(0.0, 0.1).is_err());
        assert!(f.d2p_parts(-0.3).is_err());
    }

    #[test]
    fn pressure_examples() {
        let f = field();
        assert_relative_eq!(f.eval_p(1.0, 0.0).unwrap(), -1.0 / 9.0, epsilon = 1e-16);
        assert_relative_eq!(f.eval_p(1.0, 0.5).unwrap(), -1.0 / 12.0, epsilon = 1e-16);
        for t in [0.01, 0.3, 1.0] {
            let s = support_radius(t);
            assert_eq!(f.eval_p(t, s).unwrap(), 0.0);
            assert_eq!(f.eval_p(t, -1.2 * s).unwrap(), 0.0);
            assert_eq!(f.grad_p(t, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn second_derivative_parts() {
        let parts = field().d2p_parts(1.0).unwrap();
        assert_relative_eq!(parts.density, 2.0 / 9.0, epsilon = 1e-16);
        assert_relative_eq!(parts.dirac_weight, -2.0 / 9.0, epsilon = 1e-16);
        for t in [0.05, 0.5, 0.9] {
            let p = field().d2p_parts(t).unwrap();
            assert_relative_eq!(p.dirac_weight, -2.0 / (9.0 * t.powf(4.0 / 3.0)), max_relative = 1e-14);
            assert!(p.total_mass().abs() < 1e-12 * p.density);
        }
    }

    #[test]
    fn dirac_weight_matches_jump_of_gradient() {
        // The jump of ∂₁p across x₁ = s equals the Dirac weight.
        let f = field();
        let t = 0.4;
        let s = support_radius(t);
        let inside = f.grad_p(t, s * (1.0 - 1e-12)).unwrap();
        let outside = f.grad_p(t, s * (1.0 + 1e-12)).unwrap();
        assert_relative_eq!(outside - inside, f.d2p_parts(t).unwrap().dirac_weight, max_relative = 1e-9);
    }

    #[test]
    fn self_similarity_of_map_and_pressure() {
        let f = field();
        for t in [0.05, 0.3, 0.77] {
            let s = support_radius(t);
            for x1 in [-0.9, -0.3, -0.01, 0.02, 0.4, 0.95] {
                let y = x1 * s;
                assert_relative_eq!(first_component(t, y), s * first_component(1.0, x1), epsilon = 1e-12);
                assert_relative_eq!(
                    f.eval_p(t, y).unwrap(),
                    f.eval_p(1.0, x1).unwrap() / s,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn jump_time_and_static_particles() {
        let f = field();
        let grid = uniform(0.01, 1.0, 200);
        let traj = f.trajectory(&Vector3::new(0.25, 0.5, 0.5), &grid).unwrap();
        assert_relative_eq!(traj.jump_time, 0.125, epsilon = 1e-15);

        let domain = DomainSpec::new(2.0).unwrap();
        let wide = SelfSimilarField::new(domain);
        let x = Vector3::new(1.5, 0.2, 0.7);
        let still = wide.trajectory(&x, &grid).unwrap();
        assert!(still.xi.iter().all(|p| *p == x));
        assert!(still.ode_residual < 1e-9);
    }

    #[test]
    fn trajectory_rejects_bad_grids() {
        let f = field();
        let x = Vector3::new(0.2, 0.5, 0.5);
        assert!(f.trajectory(&x, &[0.0, 0.5, 1.0]).is_err());
        assert!(f.trajectory(&x, &[0.1, 0.5, 1.1]).is_err());
        assert!(f.trajectory(&x, &[0.1, 1.0]).is_err());
    }

    #[test]
    fn trajectory_residual_is_second_order() {
        let f = field();
        let x = Vector3::new(0.25, 0.5, 0.5);
        let res: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| f.trajectory(&x, &uniform(0.2, 1.0, n)).unwrap().ode_residual)
            .collect();
        for w in res.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order}");
        }
    }

    #[test]
    fn velocity_is_continuous_across_jump() {
        let x1: f64 = 0.36;
        let tj = x1.powf(1.5);
        for h in [1e-3, 1e-4] {
            let left = (first_component(tj, x1) - first_component(tj - h, x1)) / h;
            let right = (first_component(tj + h, x1) - first_component(tj, x1)) / h;
            assert!((left - right).abs() < 10.0 * h, "h={h}: {left} vs {right}");
        }
        assert!(first_component_rate(tj * (1.0 + 1e-9), x1).abs() < 1e-6);
    }

    #[test]
    fn analytic_velocity_matches_differences() {
        for x1 in [-0.7, -0.1, 0.0, 0.2, 0.6] {
            for t in [0.05, 0.4, 0.9] {
                let h = 1e-6;
                let fd = (first_component(t + h, x1) - first_component(t - h, x1)) / (2.0 * h);
                if (t - f64::abs(x1).powf(1.5)).abs() > 1e-3 {
                    assert_relative_eq!(first_component_rate(t, x1), fd, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn volume_check_examples() {
        let f = field();
        let q = VolumeQuadrature::default();
        assert!(f.volume_check(1.0, |x| x, q).unwrap() < 1e-14);
        assert!(f.volume_check(1.0, |_| 1.0, q).unwrap() < 1e-14);
        assert!(f.volume_check(1.0, |x| x * x, q).unwrap() < 1e-14);
        // ∫₀¹ (2√x − 1)² dx = 1/3
        let rule = GaussLegendre::new(20);
        let half = rule.integrate(0.0, 1.0, |u| 2.0 * u * (2.0 * u - 1.0).powi(2));
        assert_relative_eq!(half, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn substitution_beats_plain_quadrature() {
        let f = field();
        let cubic = |x: f64| x * x * x + x * x;
        let plain = f
            .volume_check(0.5, cubic, VolumeQuadrature { nodes: 16, substitution: false })
            .unwrap();
        let subst = f.volume_check(0.5, cubic, VolumeQuadrature::default()).unwrap();
        assert!(subst < 1e-14 && plain > 1e3 * subst.max(1e-16));
    }

    #[test]
    fn action_of_static_particle_is_zero() {
        let f = SelfSimilarField::new(DomainSpec::new(2.0).unwrap());
        let traj = f.trajectory(&Vector3::new(-1.5, 0.5, 0.5), &uniform(0.01, 1.0, 50)).unwrap();
        assert_eq!(f.action_of_trajectory(&traj), 0.0);
    }

    #[test]
    fn action_of_centre_particle() {
        // ξ = −t^{2/3} lies on the interface where p = 0, so the action is
        // ∫ (2/9) t^{−2/3} dt = (2/3)(1 − t_min^{1/3}).
        let f = field();
        let tmin: f64 = 0.01;
        let traj = f.trajectory(&Vector3::new(0.0, 0.5, 0.5), &uniform(tmin, 1.0, 20000)).unwrap();
        let exact = 2.0 / 3.0 * (1.0 - tmin.cbrt());
        assert_relative_eq!(f.action_of_trajectory(&traj), exact, max_relative = 1e-5);
    }

    #[test]
    fn second_variation_examples() {
        let f = field();
        let grid = uniform(0.001, 1.0, 100);
        let centre = f.trajectory(&Vector3::new(0.0, 0.5, 0.5), &grid).unwrap();
        assert_eq!(f.second_variation(&centre, &Perturbation::zero()), 0.0);

        // ζ = (t(1−t), 0, 0): ½·(1/3) − (1/9)·(1/3) = 7/54
        let bubble = Perturbation::Bubble {
            coeffs: [vec![1.0], vec![], vec![]],
        };
        assert_relative_eq!(f.second_variation(&centre, &bubble), 7.0 / 54.0, epsilon = 1e-12);

        let wide = SelfSimilarField::new(DomainSpec::new(2.0).unwrap());
        let still = wide.trajectory(&Vector3::new(1.4, 0.5, 0.5), &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pert = Perturbation::random_sine(&mut rng, 4, 0.2);
        let kinetic = 0.5
            * GaussLegendre::new(40).integrate_composite(0.0, 1.0, 8, |t| pert.derivative(t).norm_squared());
        assert_relative_eq!(wide.second_variation(&still, &pert), kinetic, max_relative = 1e-12);
    }

    #[test]
    fn dirac_crossing_contributes_positively() {
        let f = field();
        let x1: f64 = 0.3;
        let traj = f.trajectory(&Vector3::new(x1, 0.5, 0.5), &uniform(0.01, 1.0, 50)).unwrap();
        let pert = Perturbation::Sine {
            coeffs: [vec![0.1], vec![], vec![]],
        };
        let t_star = x1.powf(1.5);
        assert_relative_eq!(f.crossing_time(x1), t_star, epsilon = 1e-11);
        // Oracle: Dirac term ζ²/(6 t*) plus the two integrals by fine trapezoid.
        let z = |t: f64| 0.1 * (std::f64::consts::PI * t).sin();
        let dz = |t: f64| 0.1 * std::f64::consts::PI * (std::f64::consts::PI * t).cos();
        let trap = |g: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            let n = 200_000;
            let h = (b - a) / n as f64;
            (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * g(a + i as f64 * h)
                })
                .sum::<f64>()
                * h
        };
        let kinetic = 0.5 * trap(&|t| dz(t) * dz(t), 0.0, 1.0);
        let density = trap(&|t| z(t) * z(t) / (9.0 * t * t), t_star, 1.0);
        let dirac = z(t_star).powi(2) / (6.0 * t_star);
        let oracle = kinetic - density + dirac;
        assert_relative_eq!(f.second_variation(&traj, &pert), oracle, max_relative = 1e-8);
    }

    #[test]
    fn perturbed_paths_cost_more() {
        let f = field();
        let grid = uniform(1e-3, 1.0, 4000);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for x1 in [-0.6, 0.0, 0.25, 0.8] {
            let traj = f.trajectory(&Vector3::new(x1, 0.5, 0.5), &grid).unwrap();
            let base = f.action_of_trajectory(&traj);
            for _ in 0..10 {
                let pert = Perturbation::random_sine(&mut rng, 5, 0.05);
                let moved = f.perturb(&traj, &pert);
                assert!(f.action_of_trajectory(&moved) >= base - 1e-9, "x1={x1}");
            }
        }
    }

    #[test]
    fn perturbation_endpoints_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = Perturbation::random_sine(&mut rng, 6, 1.0);
        assert_eq!(p.value(0.0), Vector3::zeros());
        assert_eq!(p.value(1.0), Vector3::zeros());
        let b = Perturbation::Bubble {
            coeffs: [vec![1.0, -2.0, 0.5], vec![3.0], vec![]],
        };
        let h = 1e-6;
        let fd = (b.value(0.4 + h) - b.value(0.4 - h)) / (2.0 * h);
        assert_relative_eq!(b.derivative(0.4), fd, epsilon = 1e-8);
    }

    #[test]
    fn hardy_examples() {
        let grid = uniform(0.0, 1.0, 10);
        assert_relative_eq!(hardy_functional(&grid, &grid).unwrap(), 0.75, epsilon = 1e-14);
        assert_eq!(hardy_functional(&[0.0; 11], &grid).unwrap(), 0.0);
        assert!(hardy_functional(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn hardy_critical_profile_approaches_zero() {
        // η = √t on [δ, 1]: the integrand vanishes identically, so the
        // interpolant's value shrinks with the mesh.
        let mut last = f64::INFINITY;
        for n in [100, 400, 1600] {
            let delta: f64 = 1e-4;
            let grid: Vec<f64> = (0..=n)
                .map(|i| delta * (1.0 / delta).powf(i as f64 / n as f64))
                .collect();
            let eta: Vec<f64> = grid.iter().map(|t| t.sqrt()).collect();
            let v = hardy_functional(&eta, &grid).unwrap().abs();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-5);
    }
}
