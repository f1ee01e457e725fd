//! Geodesics on SO(3) for the metric Tr(U'ᵀ K² U'), seen as linear
//! volume-preserving flows g_t(x) = K U_t K⁻¹ x of the ellipsoid K·B₁.
//!
//! Paths are right-trivialized: U' = B U with B skew. Along a geodesic the
//! multiplier M = −K²(B' + B²) is symmetric, and the fluid pressure on the
//! ellipsoid is the quadratic form p_t(x) = ½ K⁻¹M_tK⁻¹ x·x.
//!
//! In vector form B = hat(ω) and the geodesic equation reduces to
//! J ω' = ω × Jω with J = tr(K²)·I − K², i.e. Euler's rigid-body equations
//! for the angular momentum m = Jω.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{invalid, Result};

/// Relative threshold below which a multiplier counts as symmetric.
pub const SYMMETRIC_REL_TOL: f64 = 1e-6;
/// Relative threshold above which a multiplier counts as asymmetric.
pub const ASYMMETRIC_REL_TOL: f64 = 0.1;
/// Largest internal step of [`integrate_geodesic`]; U is re-projected after each.
pub const MAX_STEP: f64 = 1e-3;
/// Tolerance on ‖K²a − (aᵀK²a)a‖ / ‖K²‖ for `a` to count as an inertia axis.
pub const PRINCIPAL_AXIS_TOL: f64 = 1e-10;

/// Skew matrix of ω, so that `hat(ω) x = ω × x`.
pub fn hat(omega: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -omega.z, omega.y, //
        omega.z, 0.0, -omega.x, //
        -omega.y, omega.x, 0.0,
    )
}

/// Inverse of [`hat`] on the skew part of `b`.
pub fn vee(b: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (b[(2, 1)] - b[(1, 2)]),
        0.5 * (b[(0, 2)] - b[(2, 0)]),
        0.5 * (b[(1, 0)] - b[(0, 1)]),
    )
}

/// exp(hat(ω)) by the Rodrigues formula.
pub fn rotation_exp(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let w = hat(omega);
    if theta < 1e-8 {
        // Taylor terms to second order keep the result orthogonal to rounding.
        return Matrix3::identity() + w + 0.5 * w * w;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Matrix3::identity() + a * w + b * w * w
}

fn skew_residual(m: &Matrix3<f64>) -> f64 {
    (m - m.transpose()).norm()
}

/// Nearest rotation in Frobenius norm (orthogonal polar factor).
fn project_to_rotation(u: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = u.svd(true, true);
    let (w, vt) = (svd.u.expect("svd u"), svd.v_t.expect("svd v_t"));
    let mut r = w * vt;
    if r.determinant() < 0.0 {
        let mut w = w;
        w.column_mut(2).neg_mut();
        r = w * vt;
    }
    r
}

/// Half-axes matrix K of the ellipsoid K·B₁ together with the inertia matrix K².
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaSpec {
    k: Matrix3<f64>,
    k2: Matrix3<f64>,
    k_inv: Matrix3<f64>,
    k2_inv: Matrix3<f64>,
    /// tr(K²)·I − K², the moment of inertia acting on ω.
    body: Matrix3<f64>,
    body_inv: Matrix3<f64>,
}

impl InertiaSpec {
    pub fn new(k: Matrix3<f64>) -> Result<Self> {
        if !k.iter().all(|v| v.is_finite()) {
            return invalid("inertia matrix has non-finite entries");
        }
        if skew_residual(&k) > 1e-12 * k.norm().max(1.0) {
            return invalid("half-axes matrix K must be symmetric");
        }
        let eig = k.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return invalid(format!(
                "half-axes matrix K must be positive definite, eigenvalues {:?}",
                eig.eigenvalues.as_slice()
            ));
        }
        let k2 = k * k;
        let k_inv = k.try_inverse().expect("SPD matrix is invertible");
        let body = Matrix3::identity() * k2.trace() - k2;
        Ok(Self {
            k,
            k2,
            k_inv,
            k2_inv: k_inv * k_inv,
            body,
            body_inv: body.try_inverse().expect("tr(K²)I − K² is SPD"),
        })
    }

    pub fn diagonal(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::new(k1, k2, k3)))
    }

    pub fn isotropic() -> Self {
        Self::new(Matrix3::identity()).expect("identity is SPD")
    }

    pub fn k(&self) -> &Matrix3<f64> {
        &self.k
    }

    pub fn k2(&self) -> &Matrix3<f64> {
        &self.k2
    }

    pub fn k_inv(&self) -> &Matrix3<f64> {
        &self.k_inv
    }

    pub fn k2_inv(&self) -> &Matrix3<f64> {
        &self.k2_inv
    }

    pub fn body_inertia(&self) -> &Matrix3<f64> {
        &self.body
    }

    /// Angular velocity ω' of the geodesic through ω.
    fn omega_rate(&self, omega: &Vector3<f64>) -> Vector3<f64> {
        self.body_inv * omega.cross(&(self.body * omega))
    }

    /// Kinetic energy density Tr(BᵀK²B) for B = hat(ω).
    pub fn energy(&self, omega: &Vector3<f64>) -> f64 {
        let b = hat(omega);
        (b.transpose() * self.k2 * b).trace()
    }

    /// Whether the unit vector `axis` is an eigenvector of K².
    pub fn is_principal_axis(&self, axis: &Vector3<f64>) -> bool {
        let ka = self.k2 * axis;
        let rayleigh = axis.dot(&ka);
        (ka - rayleigh * axis).norm() <= PRINCIPAL_AXIS_TOL * self.k2.norm()
    }

    /// Eigenvectors of K² as columns, eigenvalues ascending.
    pub fn principal_axes(&self) -> (Vector3<f64>, Matrix3<f64>) {
        let eig = self.k2.symmetric_eigen();
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = Vector3::new(
            eig.eigenvalues[idx[0]],
            eig.eigenvalues[idx[1]],
            eig.eigenvalues[idx[2]],
        );
        let vecs = Matrix3::from_columns(&[
            eig.eigenvectors.column(idx[0]).into_owned(),
            eig.eigenvectors.column(idx[1]).into_owned(),
            eig.eigenvectors.column(idx[2]).into_owned(),
        ]);
        (vals, vecs)
    }
}

/// Time-sampled rotations U_t and right-trivialized velocities B_t = hat(ω_t).
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPath {
    pub times: Vec<f64>,
    pub rotations: Vec<Matrix3<f64>>,
    /// B_t stored as its axial vector.
    pub omegas: Vec<Vector3<f64>>,
}

impl RotationPath {
    /// Constant-speed rotation U_t = exp(hat(ω)t).
    pub fn steady(times: &[f64], omega: Vector3<f64>) -> Self {
        Self {
            times: times.to_vec(),
            rotations: times.iter().map(|&t| rotation_exp(&(omega * t))).collect(),
            omegas: vec![omega; times.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn b(&self, i: usize) -> Matrix3<f64> {
        hat(&self.omegas[i])
    }

    /// max_t ‖U_tᵀU_t − I‖_F.
    pub fn orthogonality_drift(&self) -> f64 {
        self.rotations
            .iter()
            .map(|u| (u.transpose() * u - Matrix3::identity()).norm())
            .fold(0.0, f64::max)
    }

    /// U_t ↦ U_t·R; B is unchanged by right translation.
    pub fn right_translate(&self, r: &Matrix3<f64>) -> Self {
        Self {
            times: self.times.clone(),
            rotations: self.rotations.iter().map(|u| u * r).collect(),
            omegas: self.omegas.clone(),
        }
    }
}

/// Time-sampled multipliers M_t with their symmetry residuals ‖M − Mᵀ‖_F.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierPath {
    pub times: Vec<f64>,
    pub multipliers: Vec<Matrix3<f64>>,
    pub sym_residuals: Vec<f64>,
}

impl MultiplierPath {
    fn from_multipliers(times: Vec<f64>, multipliers: Vec<Matrix3<f64>>) -> Self {
        let sym_residuals = multipliers.iter().map(skew_residual).collect();
        Self {
            times,
            multipliers,
            sym_residuals,
        }
    }

    pub fn max_sym_residual(&self) -> f64 {
        self.sym_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.multipliers.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// Worst-case classification over all nodes.
    pub fn symmetry(&self) -> Symmetry {
        let mut worst = Symmetry::Symmetric;
        for (m, &r) in self.multipliers.iter().zip(&self.sym_residuals) {
            match classify_symmetry(r, m.norm()) {
                Symmetry::Asymmetric => return Symmetry::Asymmetric,
                Symmetry::Indeterminate => worst = Symmetry::Indeterminate,
                Symmetry::Symmetric => {}
            }
        }
        worst
    }

    /// sup_t ‖M_t − N_t‖_F.
    pub fn sup_gap(&self, other: &MultiplierPath) -> f64 {
        self.multipliers
            .iter()
            .zip(&other.multipliers)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Symmetric,
    Asymmetric,
    /// Between the two thresholds; reported, never silently resolved.
    Indeterminate,
}

pub fn classify_symmetry(residual: f64, norm: f64) -> Symmetry {
    if residual <= SYMMETRIC_REL_TOL * norm.max(1.0) {
        Symmetry::Symmetric
    } else if residual >= ASYMMETRIC_REL_TOL * norm {
        Symmetry::Asymmetric
    } else {
        Symmetry::Indeterminate
    }
}

/// Quadratic pressure p_t(x) = ½ Q_t x·x on the ellipsoid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPressure {
    pub times: Vec<f64>,
    pub q: Vec<Matrix3<f64>>,
}

impl QuadraticPressure {
    pub fn eval(&self, i: usize, x: &Vector3<f64>) -> f64 {
        0.5 * x.dot(&(self.q[i] * x))
    }

    pub fn gradient(&self, i: usize, x: &Vector3<f64>) -> Vector3<f64> {
        self.q[i] * x
    }

    /// sup_t ‖Q_t − Q'_t‖_F.
    pub fn sup_gap(&self, other: &QuadraticPressure) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.q.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return invalid(format!("time grid needs at least 3 nodes, got {}", grid.len()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("time grid must be finite and strictly increasing");
    }
    Ok(())
}

/// Uniform grid of `steps + 1` nodes on [0, 1].
pub fn unit_grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

/// Integrates the geodesic with U_0 = I and initial velocity `b0` on `grid`.
///
/// RK4 on (m = Jω, U) with internal steps of at most [`MAX_STEP`] and a polar
/// re-projection of U after every step. The multiplier is evaluated from the
/// exact rate ω' at each node.
pub fn integrate_geodesic(
    inertia: &InertiaSpec,
    b0: &Matrix3<f64>,
    grid: &[f64],
) -> Result<(RotationPath, MultiplierPath)> {
    check_grid(grid)?;
    if (b0 + b0.transpose()).norm() > 1e-12 * b0.norm().max(1.0) {
        return invalid("initial velocity B0 must be skew-symmetric");
    }
    let body = inertia.body_inertia();
    let mut m = body * vee(b0);
    let mut u = Matrix3::identity();

    let rhs = |m: &Vector3<f64>, u: &Matrix3<f64>| {
        let omega = inertia.body_inv * m;
        (omega.cross(m), hat(&omega) * u)
    };

    let mut rotations = Vec::with_capacity(grid.len());
    let mut omegas = Vec::with_capacity(grid.len());
    rotations.push(u);
    omegas.push(inertia.body_inv * m);
    for w in grid.windows(2) {
        let span = w[1] - w[0];
        let substeps = (span / MAX_STEP).ceil().max(1.0) as usize;
        let h = span / substeps as f64;
        for _ in 0..substeps {
            let (k1m, k1u) = rhs(&m, &u);
            let (k2m, k2u) = rhs(&(m + 0.5 * h * k1m), &(u + 0.5 * h * k1u));
            let (k3m, k3u) = rhs(&(m + 0.5 * h * k2m), &(u + 0.5 * h * k2u));
            let (k4m, k4u) = rhs(&(m + h * k3m), &(u + h * k3u));
            m += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            u = project_to_rotation(&u);
        }
        rotations.push(u);
        omegas.push(inertia.body_inv * m);
    }

    let multipliers = omegas
        .iter()
        .map(|omega| {
            let b = hat(omega);
            -inertia.k2() * (hat(&inertia.omega_rate(omega)) + b * b)
        })
        .collect();
    let path = RotationPath {
        times: grid.to_vec(),
        rotations,
        omegas,
    };
    Ok((path, MultiplierPath::from_multipliers(grid.to_vec(), multipliers)))
}

/// Three-point derivative weights (previous, current, next) on a non-uniform grid.
fn derivative_weights(times: &[f64], i: usize) -> [(usize, f64); 3] {
    let n = times.len();
    if i == 0 {
        let (h1, h2) = (times[1] - times[0], times[2] - times[1]);
        [
            (0, -(2.0 * h1 + h2) / (h1 * (h1 + h2))),
            (1, (h1 + h2) / (h1 * h2)),
            (2, -h1 / (h2 * (h1 + h2))),
        ]
    } else if i == n - 1 {
        let (h1, h2) = (times[n - 2] - times[n - 3], times[n - 1] - times[n - 2]);
        [
            (n - 3, h2 / (h1 * (h1 + h2))),
            (n - 2, -(h1 + h2) / (h1 * h2)),
            (n - 1, (2.0 * h2 + h1) / (h2 * (h1 + h2))),
        ]
    } else {
        let (h1, h2) = (times[i] - times[i - 1], times[i + 1] - times[i]);
        [
            (i - 1, -h2 / (h1 * (h1 + h2))),
            (i, (h2 - h1) / (h1 * h2)),
            (i + 1, h1 / (h2 * (h1 + h2))),
        ]
    }
}

/// M_t = −K²(B' + B²) with B' from central differences (one-sided at the ends).
pub fn multiplier_from_path(path: &RotationPath, inertia: &InertiaSpec) -> Result<MultiplierPath> {
    check_grid(&path.times)?;
    let multipliers = (0..path.len())
        .map(|i| {
            let db: Matrix3<f64> = derivative_weights(&path.times, i)
                .iter()
                .map(|&(j, w)| path.b(j) * w)
                .sum();
            let b = path.b(i);
            -inertia.k2() * (db + b * b)
        })
        .collect();
    Ok(MultiplierPath::from_multipliers(path.times.clone(), multipliers))
}

/// Q_t = K⁻¹M_tK⁻¹, rejecting multipliers that are not symmetric.
pub fn pressure_on_ellipsoid(
    multipliers: &MultiplierPath,
    inertia: &InertiaSpec,
) -> Result<QuadraticPressure> {
    for (i, (m, &r)) in multipliers
        .multipliers
        .iter()
        .zip(&multipliers.sym_residuals)
        .enumerate()
    {
        if classify_symmetry(r, m.norm()) != Symmetry::Symmetric {
            return invalid(format!(
                "multiplier at node {i} is not symmetric (residual {r:.3e}); path is not a geodesic"
            ));
        }
    }
    let kinv = inertia.k_inv();
    Ok(QuadraticPressure {
        times: multipliers.times.clone(),
        q: multipliers.multipliers.iter().map(|m| kinv * m * kinv).collect(),
    })
}

/// Trajectory g_t(x) = K U_t K⁻¹ x of a fluid particle in the ellipsoid.
pub fn embed_flow(
    path: &RotationPath,
    inertia: &InertiaSpec,
    x: &Vector3<f64>,
) -> Result<Vec<Vector3<f64>>> {
    let label = inertia.k_inv() * x;
    if label.norm() > 1.0 + 1e-12 {
        return invalid(format!(
            "point lies outside the ellipsoid: |K⁻¹x| = {:.6}",
            label.norm()
        ));
    }
    Ok(path
        .rotations
        .iter()
        .map(|u| inertia.k() * (u * label))
        .collect())
}

/// ‖BL + LB + L²‖_F.
pub fn commutator_identity_residual(b: &Matrix3<f64>, l: &Matrix3<f64>) -> f64 {
    (b * l + l * b + l * l).norm()
}

/// Trapezoidal ∫ Tr(U'ᵀK²U') dt with U' = BU.
pub fn action_of_path(path: &RotationPath, inertia: &InertiaSpec) -> f64 {
    let density: Vec<f64> = path
        .rotations
        .iter()
        .zip(&path.omegas)
        .map(|(u, omega)| {
            let du = hat(omega) * u;
            (du.transpose() * inertia.k2() * du).trace()
        })
        .collect();
    path.times
        .windows(2)
        .zip(density.windows(2))
        .map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairVerdict {
    /// Rotation about an inertia axis: both paths are geodesics with equal multipliers.
    Exceptional,
    /// The multiplier is asymmetric, so the constant-speed pair is not a geodesic pair.
    NotGeodesicPair,
    Indeterminate,
}

/// Outcome of the two-rotation experiment U_t = exp(B₀t), V_t = exp(−B₀t).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub axis: [f64; 3],
    pub principal: bool,
    /// ‖U₁ − V₁‖_F.
    pub endpoint_gap: f64,
    /// sup_t ‖M_t − N_t‖_F between the geodesics integrated from B₀ and −B₀.
    pub multiplier_gap: f64,
    pub sym_residual_u: f64,
    pub sym_residual_v: f64,
    /// ‖M‖_F of the constant-speed multiplier −K²B₀².
    pub multiplier_norm: f64,
    /// ‖M − π²K²(I − aaᵀ)‖_F.
    pub squared_form_gap: f64,
    /// ‖M − π²K(I − aaᵀ)‖_F, the form with K in place of K².
    pub printed_form_gap: f64,
    pub verdict: PairVerdict,
}

/// Builds the pair of constant-speed rotations by ±π about `axis` (β = 2π)
/// and tests whether they are geodesics sharing one multiplier.
pub fn theorem2_pair(inertia: &InertiaSpec, axis: &Vector3<f64>, steps: usize) -> Result<PairReport> {
    if !axis.iter().all(|a| a.is_finite()) || (axis.norm() - 1.0).abs() > 1e-12 {
        return invalid(format!("axis must be a unit vector, |axis| = {}", axis.norm()));
    }
    if steps < 2 {
        return invalid("theorem2 pair needs at least 2 time steps");
    }
    let beta = 2.0 * PI;
    let omega = axis * (beta / 2.0);
    let grid = unit_grid(steps);

    let u = RotationPath::steady(&grid, omega);
    let v = RotationPath::steady(&grid, -omega);
    let endpoint_gap = (u.rotations[steps] - v.rotations[steps]).norm();
    let mu = multiplier_from_path(&u, inertia)?;
    let mv = multiplier_from_path(&v, inertia)?;

    let (_, geo_m) = integrate_geodesic(inertia, &hat(&omega), &grid)?;
    let (_, geo_n) = integrate_geodesic(inertia, &hat(&(-omega)), &grid)?;
    let multiplier_gap = geo_m.sup_gap(&geo_n);

    let b0 = hat(&omega);
    let m0 = -inertia.k2() * b0 * b0;
    let plane = Matrix3::identity() - axis * axis.transpose();
    let squared_form_gap = (m0 - PI * PI * inertia.k2() * plane).norm();
    let printed_form_gap = (m0 - PI * PI * inertia.k() * plane).norm();

    let principal = inertia.is_principal_axis(axis);
    let sym_u = mu.symmetry();
    let sym_v = mv.symmetry();
    let verdict = if sym_u == Symmetry::Asymmetric || sym_v == Symmetry::Asymmetric {
        PairVerdict::NotGeodesicPair
    } else if sym_u == Symmetry::Symmetric
        && sym_v == Symmetry::Symmetric
        && multiplier_gap <= 1e-8
    {
        PairVerdict::Exceptional
    } else {
        PairVerdict::Indeterminate
    };

    Ok(PairReport {
        axis: [axis.x, axis.y, axis.z],
        principal,
        endpoint_gap,
        multiplier_gap,
        sym_residual_u: mu.max_sym_residual(),
        sym_residual_v: mv.max_sym_residual(),
        multiplier_norm: m0.norm(),
        squared_form_gap,
        printed_form_gap,
        verdict,
    })
}

/// Quadratic pressures of two steady geodesics compared side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureContrast {
    /// sup_t ‖Q^a_t − Q^b_t‖_F.
    pub gap: f64,
    /// max of sup_t ‖Q_t‖_F over both paths.
    pub scale: f64,
    pub relative_gap: f64,
}

/// Pressures of the steady rotations exp(hat(ω_a)t) and exp(hat(ω_b)t).
/// Both must be geodesics, i.e. rotations about inertia axes.
pub fn pressure_contrast(
    inertia: &InertiaSpec,
    omega_a: &Vector3<f64>,
    omega_b: &Vector3<f64>,
    steps: usize,
) -> Result<PressureContrast> {
    let grid = unit_grid(steps.max(2));
    let pa = pressure_on_ellipsoid(
        &multiplier_from_path(&RotationPath::steady(&grid, *omega_a), inertia)?,
        inertia,
    )?;
    let pb = pressure_on_ellipsoid(
        &multiplier_from_path(&RotationPath::steady(&grid, *omega_b), inertia)?,
        inertia,
    )?;
    let gap = pa.sup_gap(&pb);
    let scale = pa.max_norm().max(pb.max_norm());
    Ok(PressureContrast {
        gap,
        scale,
        relative_gap: if scale > 0.0 { gap / scale } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag123() -> InertiaSpec {
        InertiaSpec::diagonal(1.0, 2.0, 3.0).unwrap()
    }

    #[test]
    fn hat_of_zero_is_zero() {
        assert_eq!(hat(&Vector3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn hat_matches_quarter_turn_generator() {
        // hat(0,0,π) x = (−x₂, x₁, 0)π
        let b = hat(&Vector3::new(0.0, 0.0, PI));
        let x = Vector3::new(0.3, -0.7, 2.0);
        assert_relative_eq!(b * x, Vector3::new(0.7, 0.3, 0.0) * PI, epsilon = 1e-15);
    }

    #[test]
    fn hat_e1_times_e2_is_e3() {
        assert_eq!(hat(&Vector3::x()) * Vector3::y(), Vector3::z());
    }

    #[test]
    fn hat_is_cross_product() {
        let w = Vector3::new(0.2, -1.1, 0.7);
        let x = Vector3::new(-0.4, 0.9, 1.3);
        assert_relative_eq!(hat(&w) * x, w.cross(&x), epsilon = 1e-15);
        assert_relative_eq!(vee(&hat(&w)), w);
    }

    #[test]
    fn anticommutator_with_symmetric_matrix() {
        // K²hat(ω) + hat(ω)K² = hat((tr K² I − K²)ω)
        let inertia = diag123();
        let w = Vector3::new(0.3, -0.8, 1.7);
        let lhs = inertia.k2() * hat(&w) + hat(&w) * inertia.k2();
        assert_relative_eq!(lhs, hat(&(inertia.body_inertia() * w)), epsilon = 1e-13);
    }

    #[test]
    fn rodrigues_matches_series() {
        let w = Vector3::new(0.4, -0.2, 0.9);
        let b = hat(&w);
        let mut series = Matrix3::identity();
        let mut term = Matrix3::identity();
        for k in 1..30 {
            term = term * b / k as f64;
            series += term;
        }
        assert_relative_eq!(rotation_exp(&w), series, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_spd_inertia() {
        assert!(InertiaSpec::diagonal(1.0, -2.0, 3.0).is_err());
        assert!(InertiaSpec::diagonal(1.0, 0.0, 3.0).is_err());
        let asym = Matrix3::new(1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(InertiaSpec::new(asym).is_err());
    }

    #[test]
    fn rejects_short_or_unsorted_grids() {
        let inertia = diag123();
        let b0 = hat(&Vector3::z());
        assert!(integrate_geodesic(&inertia, &b0, &[0.0, 1.0]).is_err());
        assert!(integrate_geodesic(&inertia, &b0, &[0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(integrate_geodesic(&inertia, &Matrix3::identity(), &unit_grid(4)).is_err());
    }

    #[test]
    fn isotropic_geodesic_is_matrix_exponential() {
        let inertia = InertiaSpec::isotropic();
        let omega = Vector3::new(0.0, 0.0, PI);
        let grid = unit_grid(100);
        let (path, mult) = integrate_geodesic(&inertia, &hat(&omega), &grid).unwrap();
        let expected_m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)) * PI * PI;
        for (i, &t) in grid.iter().enumerate() {
            assert_relative_eq!(path.rotations[i], rotation_exp(&(omega * t)), epsilon = 1e-10);
            assert_relative_eq!(mult.multipliers[i], expected_m, epsilon = 1e-12);
        }
    }

    #[test]
    fn rest_state_stays_at_identity() {
        let inertia = diag123();
        let (path, mult) = integrate_geodesic(&inertia, &Matrix3::zeros(), &unit_grid(10)).unwrap();
        assert!(path.rotations.iter().all(|u| *u == Matrix3::identity()));
        assert!(mult.multipliers.iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn principal_axis_rotation_is_steady() {
        let inertia = diag123();
        let (path, mult) = integrate_geodesic(&inertia, &hat(&Vector3::z()), &unit_grid(50)).unwrap();
        for w in &path.omegas {
            assert_relative_eq!(*w, Vector3::z(), epsilon = 1e-14);
        }
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0, 4.0, 0.0));
        for m in &mult.multipliers {
            assert_relative_eq!(*m, expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn generic_geodesic_conserves_energy_and_orthogonality() {
        let inertia = diag123();
        let omega0 = Vector3::new(0.9, 1.3, -0.6);
        let (path, mult) = integrate_geodesic(&inertia, &hat(&omega0), &unit_grid(1000)).unwrap();
        let e0 = inertia.energy(&omega0);
        for w in &path.omegas {
            assert_relative_eq!(inertia.energy(w), e0, max_relative = 1e-6);
        }
        assert!(path.orthogonality_drift() <= 1e-9);
        assert!(path.rotations.iter().all(|u| (u.determinant() - 1.0).abs() < 1e-12));
        assert_eq!(mult.symmetry(), Symmetry::Symmetric);

        let fd = multiplier_from_path(&path, &inertia).unwrap();
        for (m, &r) in fd.multipliers.iter().zip(&fd.sym_residuals) {
            assert!(r <= SYMMETRIC_REL_TOL * m.norm().max(1.0), "residual {r}");
        }
    }

    #[test]
    fn geodesic_satisfies_second_order_equation() {
        // K²U'' + MU = 0 checked with second differences of U.
        let inertia = diag123();
        let grid = unit_grid(400);
        let (path, mult) =
            integrate_geodesic(&inertia, &hat(&Vector3::new(0.5, -1.0, 0.8)), &grid).unwrap();
        let h = grid[1];
        let mut worst: f64 = 0.0;
        for i in 1..grid.len() - 1 {
            let upp = (path.rotations[i + 1] - 2.0 * path.rotations[i] + path.rotations[i - 1]) / (h * h);
            let r = inertia.k2() * upp + mult.multipliers[i] * path.rotations[i];
            worst = worst.max(r.norm());
        }
        assert!(worst < 1e-4, "residual {worst}");
    }

    #[test]
    fn steady_principal_multiplier_by_differences() {
        let inertia = diag123();
        let omega = 1.7;
        let path = RotationPath::steady(&unit_grid(20), Vector3::z() * omega);
        let mult = multiplier_from_path(&path, &inertia).unwrap();
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0, 4.0, 0.0)) * omega * omega;
        for m in &mult.multipliers {
            assert_relative_eq!(*m, expected, epsilon = 1e-12);
        }
        assert_eq!(mult.symmetry(), Symmetry::Symmetric);
    }

    #[test]
    fn zero_velocity_gives_zero_multiplier() {
        let path = RotationPath::steady(&unit_grid(5), Vector3::zeros());
        let mult = multiplier_from_path(&path, &diag123()).unwrap();
        assert!(mult.multipliers.iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn non_principal_steady_rotation_is_asymmetric() {
        let inertia = diag123();
        let axis = Vector3::new(1.0, 1.0, 0.0).normalize();
        let path = RotationPath::steady(&unit_grid(20), axis);
        let mult = multiplier_from_path(&path, &inertia).unwrap();
        assert_eq!(mult.symmetry(), Symmetry::Asymmetric);
        // M − Mᵀ has entries ±1.5 in the (1,2) block.
        assert_relative_eq!(mult.max_sym_residual(), 1.5 * 2f64.sqrt(), epsilon = 1e-12);
        assert!(pressure_on_ellipsoid(&mult, &inertia).is_err());
    }

    #[test]
    fn ellipsoid_pressure_for_isotropic_spin() {
        let inertia = InertiaSpec::isotropic();
        let path = RotationPath::steady(&unit_grid(4), Vector3::z() * PI);
        let mult = multiplier_from_path(&path, &inertia).unwrap();
        let p = pressure_on_ellipsoid(&mult, &inertia).unwrap();
        let x = Vector3::new(0.3, -0.4, 0.5);
        assert_relative_eq!(p.eval(2, &x), PI * PI * (0.09 + 0.16) / 2.0, epsilon = 1e-12);

        let zero = pressure_on_ellipsoid(
            &multiplier_from_path(&RotationPath::steady(&unit_grid(4), Vector3::zeros()), &inertia)
                .unwrap(),
            &inertia,
        )
        .unwrap();
        assert_eq!(zero.eval(1, &x), 0.0);
    }

    #[test]
    fn ellipsoid_pressure_is_linear_in_multiplier() {
        let inertia = diag123();
        let path = RotationPath::steady(&unit_grid(4), Vector3::y() * 0.8);
        let mult = multiplier_from_path(&path, &inertia).unwrap();
        let mut scaled = mult.clone();
        for m in &mut scaled.multipliers {
            *m *= 3.5;
        }
        let p = pressure_on_ellipsoid(&mult, &inertia).unwrap();
        let ps = pressure_on_ellipsoid(&scaled, &inertia).unwrap();
        let x = Vector3::new(0.5, 1.0, -0.7);
        assert_relative_eq!(ps.eval(1, &x), 3.5 * p.eval(1, &x), max_relative = 1e-14);
    }

    #[test]
    fn embedded_flow_examples() {
        let inertia = InertiaSpec::isotropic();
        let grid = unit_grid(10);
        let path = RotationPath::steady(&grid, Vector3::z() * PI);
        let traj = embed_flow(&path, &inertia, &Vector3::x()).unwrap();
        for (g, &t) in traj.iter().zip(&grid) {
            assert_relative_eq!(*g, Vector3::new((PI * t).cos(), (PI * t).sin(), 0.0), epsilon = 1e-14);
        }
        let origin = embed_flow(&path, &inertia, &Vector3::zeros()).unwrap();
        assert!(origin.iter().all(|g| g.norm() == 0.0));
        assert!(embed_flow(&path, &inertia, &Vector3::new(1.0, 0.1, 0.0)).is_err());
    }

    #[test]
    fn embedded_flow_stays_on_ellipsoid_shells() {
        let inertia = diag123();
        let (path, _) = integrate_geodesic(&inertia, &hat(&Vector3::new(1.0, 0.5, -0.3)), &unit_grid(200)).unwrap();
        let x = Vector3::new(0.4, -0.9, 1.2);
        let r0 = (inertia.k_inv() * x).norm();
        for g in embed_flow(&path, &inertia, &x).unwrap() {
            assert_relative_eq!((inertia.k_inv() * g).norm(), r0, epsilon = 1e-12);
        }
    }

    #[test]
    fn embedded_flow_accelerates_down_the_pressure_gradient() {
        let inertia = diag123();
        let b0 = hat(&Vector3::new(0.7, -0.4, 1.1));
        let x = Vector3::new(0.3, 0.8, -1.0);
        let residual = |steps: usize| {
            let grid = unit_grid(steps);
            let (path, mult) = integrate_geodesic(&inertia, &b0, &grid).unwrap();
            let p = pressure_on_ellipsoid(&mult, &inertia).unwrap();
            let g = embed_flow(&path, &inertia, &x).unwrap();
            let h = grid[1];
            (1..steps)
                .map(|i| ((g[i + 1] - 2.0 * g[i] + g[i - 1]) / (h * h) + p.gradient(i, &g[i])).norm())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (residual(50), residual(100));
        let order = (coarse / fine).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn commutator_identity_examples() {
        let b = hat(&Vector3::new(0.0, 0.0, -PI));
        let l = hat(&Vector3::new(0.0, 0.0, 2.0 * PI));
        assert!(commutator_identity_residual(&b, &l) < 1e-12);
        assert_eq!(commutator_identity_residual(&b, &Matrix3::zeros()), 0.0);
        let b1 = hat(&(Vector3::x() * PI));
        let l3 = hat(&(Vector3::z() * 2.0 * PI));
        assert!(commutator_identity_residual(&b1, &l3) > 1.0);
    }

    #[test]
    fn action_examples() {
        let inertia = InertiaSpec::isotropic();
        let grid = unit_grid(100);
        let rest = RotationPath::steady(&grid, Vector3::zeros());
        assert_eq!(action_of_path(&rest, &inertia), 0.0);
        let spin = RotationPath::steady(&grid, Vector3::z() * PI);
        assert_relative_eq!(action_of_path(&spin, &inertia), 2.0 * PI * PI, epsilon = 1e-12);
        let fast = RotationPath::steady(&grid, Vector3::z() * 2.0 * PI);
        assert_relative_eq!(
            action_of_path(&fast, &inertia),
            4.0 * action_of_path(&spin, &inertia),
            epsilon = 1e-11
        );
    }

    #[test]
    fn action_is_right_invariant() {
        let inertia = diag123();
        let (path, _) = integrate_geodesic(&inertia, &hat(&Vector3::new(0.2, 1.0, -0.5)), &unit_grid(100)).unwrap();
        let r = rotation_exp(&Vector3::new(0.3, -1.2, 0.4));
        assert_relative_eq!(
            action_of_path(&path.right_translate(&r), &inertia),
            action_of_path(&path, &inertia),
            max_relative = 1e-12
        );
    }

    #[test]
    fn principal_pair_is_exceptional() {
        let inertia = diag123();
        let report = theorem2_pair(&inertia, &Vector3::z(), 1000).unwrap();
        assert!(report.principal);
        assert!(report.endpoint_gap <= 1e-10);
        assert!(report.multiplier_gap <= 1e-8);
        assert!(report.squared_form_gap < 1e-12);
        assert!(report.printed_form_gap > 1.0);
        assert_eq!(report.verdict, PairVerdict::Exceptional);
    }

    #[test]
    fn isotropic_pairs_are_exceptional_for_any_axis() {
        let inertia = InertiaSpec::isotropic();
        let axis = Vector3::new(0.3, -0.5, 0.8).normalize();
        let report = theorem2_pair(&inertia, &axis, 200).unwrap();
        assert!(report.principal);
        assert_eq!(report.verdict, PairVerdict::Exceptional);
    }

    #[test]
    fn diagonal_axis_pair_is_not_a_geodesic_pair() {
        let inertia = diag123();
        let report = theorem2_pair(&inertia, &Vector3::new(1.0, 1.0, 0.0).normalize(), 200).unwrap();
        assert!(!report.principal);
        assert_eq!(report.verdict, PairVerdict::NotGeodesicPair);
        assert!(report.sym_residual_u >= ASYMMETRIC_REL_TOL * report.multiplier_norm);
        assert!(report.multiplier_gap > 1e-3);
    }

    #[test]
    fn pair_rejects_non_unit_axis() {
        assert!(theorem2_pair(&diag123(), &Vector3::new(1.0, 1.0, 0.0), 10).is_err());
    }

    #[test]
    fn isotropic_pressures_depend_on_axis() {
        let c = pressure_contrast(
            &InertiaSpec::isotropic(),
            &(Vector3::x() * PI),
            &(Vector3::y() * PI),
            10,
        )
        .unwrap();
        assert_relative_eq!(c.gap, PI * PI * 2f64.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(c.relative_gap, 1.0, epsilon = 1e-12);
    }
}
