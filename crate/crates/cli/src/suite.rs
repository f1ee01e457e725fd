//! Acceptance checks grouped by criterion. The per-module `verify` commands
//! and `verify-all` share these routines.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use geolab_core::hydrostatic::{Bump, HydroField, StartTime, Stepper};
use geolab_core::relaxed::{
    compare_gradients, direct_solve, discretize_map, path_statistics, pearson, recover_pressure,
    solve, straight_line_action, ChainCoupling, EndpointPlan, GridSpec, Init, SolverConfig,
    SweepOrder, UniquenessReport,
};
use geolab_core::rigid_body::{pressure_contrast, theorem2_pair, InertiaSpec, PairVerdict};
use geolab_core::self_similar::{first_component, DomainSpec, Perturbation, SelfSimilarField};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, CliResult};
use crate::format::{nums, Num};
use crate::report::Check;
use crate::MapKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Quick,
    Full,
}

const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("selfsim.volume_gap", 1e-8),
    ("selfsim.residual_order_deviation", 0.2),
    ("selfsim.sv_negativity", 1e-6),
    ("selfsim.dirac_weight_rel_gap", 4.0 * f64::EPSILON),
    ("rigid.principal_multiplier_gap", 1e-8),
    ("rigid.non_principal_asymmetry", 0.1),
    ("rigid.endpoint_closure", 1e-10),
    ("rigid.orthogonality_drift", 1e-9),
    ("rigid.energy_drift", 1e-6),
    ("contrast.relative_pressure_gap", 0.1),
    ("contrast.uniqueness_deviation", 0.05),
    ("hydro.continuity", 1e-14),
    ("hydro.divergence", 1e-9),
    ("hydro.tracer_gap_ratio", 10.0),
    ("hydro.weak_refinement_ratio", 2.0),
    ("hydro.reconstruction", 1e-12),
    ("relax.brute_force_objective", 1e-6),
    ("relax.feasibility", 1e-8),
    ("relax.pearson_mid_time", 0.9),
    ("relax.time_reversal", 1e-6),
    ("relax.reflection", 1e-6),
    ("relax.uniqueness_deviation", 0.05),
    ("relax.identity_gradient_scale", 1e-2),
];

/// Check thresholds by name, with command-line overrides.
#[derive(Debug, Clone)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(DEFAULT_TOLERANCES.iter().copied().collect())
    }
}

impl Tolerances {
    /// Applies `NAME=VALUE` overrides; unknown names and non-positive values
    /// are usage errors.
    pub fn with_overrides(overrides: &[String]) -> CliResult<Self> {
        let mut tol = Self::default();
        for o in overrides {
            let Some((name, value)) = o.split_once('=') else {
                return usage(format!("tolerance override '{o}' is not NAME=VALUE"));
            };
            let Some(key) = tol.0.keys().find(|k| **k == name).copied() else {
                return usage(format!("unknown tolerance '{name}'"));
            };
            match value.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => {
                    tol.0.insert(key, v);
                }
                _ => return usage(format!("tolerance '{name}' must be a positive number, got '{value}'")),
            }
        }
        Ok(tol)
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    pub fn at_most(&self, name: &str, value: f64) -> Check {
        Check::at_most(name, value, self.get(name))
    }

    pub fn at_least(&self, name: &str, value: f64) -> Check {
        Check::at_least(name, value, self.get(name))
    }
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Per-index generator, independent of evaluation order.
fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------- selfsim

#[derive(Debug, Clone)]
pub struct SelfsimParams {
    pub half_width: f64,
    pub tmin: f64,
    pub steps: usize,
    pub perturbations: usize,
    pub seed: u64,
}

impl Default for SelfsimParams {
    fn default() -> Self {
        Self {
            half_width: 1.0,
            tmin: 1e-3,
            steps: 400,
            perturbations: 100,
            seed: crate::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VolumeRow {
    pub t: Num,
    pub degree: u32,
    pub gap: Num,
}

#[derive(Debug, Serialize)]
pub struct OrderRow {
    pub label: Num,
    pub steps: Vec<usize>,
    pub residuals: Vec<Num>,
    pub orders: Vec<Num>,
}

#[derive(Debug, Serialize)]
pub struct SvRegion {
    pub region: &'static str,
    pub label_range: [Num; 2],
    pub perturbations: usize,
    pub min: Num,
    pub mean: Num,
}

#[derive(Debug, Serialize)]
pub struct DiracRow {
    pub t: Num,
    pub weight: Num,
    pub reference: Num,
    pub rel_gap: Num,
    pub total_mass: Num,
}

#[derive(Debug, Serialize)]
pub struct SelfsimData {
    pub volume: Vec<VolumeRow>,
    pub residual_order: Vec<OrderRow>,
    pub second_variation: Vec<SvRegion>,
    pub dirac: Vec<DiracRow>,
}

const VOLUME_TIMES: [f64; 3] = [0.1, 0.5, 1.0];
const ORDER_LABELS: [f64; 3] = [0.25, -0.4, 0.6];
const DIRAC_TIMES: [f64; 4] = [0.01, 0.1, 0.5, 1.0];

pub fn selfsim_suite(p: &SelfsimParams, tol: &Tolerances) -> CliResult<(SelfsimData, Vec<Check>)> {
    if !(p.tmin > 0.0 && p.tmin < 1.0) {
        return usage(format!("tmin must lie in (0, 1), got {}", p.tmin));
    }
    if p.steps < 4 || p.perturbations == 0 {
        return usage("need steps >= 4 and at least one perturbation");
    }
    let field = SelfSimilarField::new(DomainSpec::new(p.half_width)?);

    let mut volume = Vec::new();
    for &t in &VOLUME_TIMES {
        for degree in 0..=6u32 {
            let gap = field.volume_check(t, |x| x.powi(degree as i32), Default::default())?;
            volume.push(VolumeRow {
                t: Num(t),
                degree,
                gap: Num(gap),
            });
        }
    }
    let volume_gap = max(volume.iter().map(|r| r.gap.0));

    let steps = [p.steps, 2 * p.steps, 4 * p.steps];
    let mut residual_order = Vec::new();
    for &label in &ORDER_LABELS {
        let residuals = steps
            .iter()
            .map(|&n| {
                let grid: Vec<f64> = (0..=n)
                    .map(|i| p.tmin + (1.0 - p.tmin) * i as f64 / n as f64)
                    .collect();
                Ok(field.trajectory(&Vector3::new(label, 0.5, 0.5), &grid)?.ode_residual)
            })
            .collect::<CliResult<Vec<f64>>>()?;
        let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        residual_order.push(OrderRow {
            label: Num(label),
            steps: steps.to_vec(),
            residuals: nums(&residuals),
            orders: nums(&orders),
        });
    }
    let order_deviation = residual_order
        .iter()
        .flat_map(|r| r.orders.iter().map(|o| (o.0 - 2.0).abs()))
        .fold(0.0, |m: f64, d| if m.is_nan() || d.is_nan() { f64::NAN } else { m.max(d) });

    let still_edge = p.half_width.max(1.5);
    let still_field = SelfSimilarField::new(DomainSpec::new(still_edge)?);
    let regions: [(&str, [f64; 2], &SelfSimilarField); 3] = [
        ("positive", [0.0, 1.0], &field),
        ("negative", [-1.0, 0.0], &field),
        ("still", [1.0, still_edge], &still_field),
    ];
    let sv_grid = [p.tmin, 0.5 * (1.0 + p.tmin), 1.0];
    let mut second_variation = Vec::new();
    let mut checks_sv = Vec::new();
    for (r, (name, range, f)) in regions.iter().enumerate() {
        let values = (0..p.perturbations)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(p.seed, ((r as u64) << 32) | i as u64);
                let mut x1 = rng.random_range(range[0]..range[1]);
                if *name == "still" && rng.random_bool(0.5) {
                    x1 = -x1;
                }
                let pert = Perturbation::random_sine(&mut rng, 6, 0.1);
                let traj = f.trajectory(&Vector3::new(x1, 0.5, 0.5), &sv_grid)?;
                Ok(f.second_variation(&traj, &pert))
            })
            .collect::<geolab_core::Result<Vec<f64>>>()?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        checks_sv.push(Check::at_most(
            &format!("selfsim.sv_negativity.{name}"),
            (-min).max(0.0),
            tol.get("selfsim.sv_negativity"),
        ));
        second_variation.push(SvRegion {
            region: name,
            label_range: [Num(range[0]), Num(range[1])],
            perturbations: p.perturbations,
            min: Num(min),
            mean: Num(mean),
        });
    }

    let mut dirac = Vec::new();
    for &t in &DIRAC_TIMES {
        let parts = field.d2p_parts(t)?;
        let reference = -2.0 / (9.0 * t.powf(4.0 / 3.0));
        dirac.push(DiracRow {
            t: Num(t),
            weight: Num(parts.dirac_weight),
            reference: Num(reference),
            rel_gap: Num((parts.dirac_weight - reference).abs() / reference.abs()),
            total_mass: Num(parts.total_mass()),
        });
    }
    let dirac_gap = max(dirac.iter().map(|d| d.rel_gap.0));

    let mut checks = vec![
        tol.at_most("selfsim.volume_gap", volume_gap),
        tol.at_most("selfsim.residual_order_deviation", order_deviation),
    ];
    checks.extend(checks_sv);
    checks.push(tol.at_most("selfsim.dirac_weight_rel_gap", dirac_gap));
    Ok((
        SelfsimData {
            volume,
            residual_order,
            second_variation,
            dirac,
        },
        checks,
    ))
}

// ------------------------------------------------------------------ rigid

#[derive(Debug, Serialize)]
pub struct AxisRow {
    pub axis: [Num; 3],
    pub principal: bool,
    pub endpoint_gap: Num,
    pub multiplier_gap: Num,
    pub sym_residual_u: Num,
    pub sym_residual_v: Num,
    pub multiplier_norm: Num,
    pub verdict: PairVerdict,
}

#[derive(Debug, Serialize)]
pub struct RigidData {
    pub inertia: [Num; 3],
    pub min_angle_deg: Num,
    pub axes: Vec<AxisRow>,
}

pub const RIGID_STEPS: usize = 1000;
const RANDOM_AXES: usize = 20;
const MIN_ANGLE_DEG: f64 = 15.0;

/// Uniform axes on the sphere at least `MIN_ANGLE_DEG` away from every
/// coordinate axis.
fn random_axes(seed: u64, count: usize) -> Vec<Vector3<f64>> {
    let mut rng = rng_for(seed, 2);
    let limit = MIN_ANGLE_DEG.to_radians().cos();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vector3<f64> = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let r = v.norm();
        if !(0.1..=1.0).contains(&r) {
            continue;
        }
        let a = v / r;
        if a.iter().all(|c| c.abs() <= limit) {
            out.push(a);
        }
    }
    out
}

pub fn axis_row(inertia: &InertiaSpec, axis: &Vector3<f64>, steps: usize) -> CliResult<AxisRow> {
    let r = theorem2_pair(inertia, axis, steps)?;
    Ok(AxisRow {
        axis: r.axis.map(Num),
        principal: r.principal,
        endpoint_gap: Num(r.endpoint_gap),
        multiplier_gap: Num(r.multiplier_gap),
        sym_residual_u: Num(r.sym_residual_u),
        sym_residual_v: Num(r.sym_residual_v),
        multiplier_norm: Num(r.multiplier_norm),
        verdict: r.verdict,
    })
}

/// Smaller of the two symmetry residuals relative to ‖M‖.
pub fn asymmetry(row: &AxisRow) -> f64 {
    row.sym_residual_u.0.min(row.sym_residual_v.0) / row.multiplier_norm.0
}

pub fn rigid_suite(seed: u64, tol: &Tolerances) -> CliResult<(RigidData, Vec<Check>)> {
    let k = [1.0, 2.0, 3.0];
    let inertia = InertiaSpec::diagonal(k[0], k[1], k[2])?;
    let mut axes = vec![Vector3::x(), Vector3::y(), Vector3::z()];
    axes.extend(random_axes(seed, RANDOM_AXES));
    let rows = axes
        .par_iter()
        .map(|a| axis_row(&inertia, a, RIGID_STEPS))
        .collect::<CliResult<Vec<_>>>()?;
    let principal_gap = max(rows[..3].iter().map(|r| r.multiplier_gap.0));
    let min_asym = rows[3..]
        .iter()
        .map(asymmetry)
        .fold(f64::INFINITY, f64::min);
    let closure = max(rows.iter().map(|r| r.endpoint_gap.0));
    let checks = vec![
        tol.at_most("rigid.principal_multiplier_gap", principal_gap),
        tol.at_least("rigid.non_principal_asymmetry", min_asym),
        tol.at_most("rigid.endpoint_closure", closure),
    ];
    Ok((
        RigidData {
            inertia: k.map(Num),
            min_angle_deg: Num(MIN_ANGLE_DEG),
            axes: rows,
        },
        checks,
    ))
}

// ----------------------------------------------------------------- probes

pub fn plan_for(map: MapKind, grid: &GridSpec) -> CliResult<EndpointPlan> {
    Ok(match map {
        MapKind::Flip => EndpointPlan::flip(grid.n),
        MapKind::Identity => EndpointPlan::identity(grid.n),
        MapKind::Selfsim => discretize_map(|x| first_component(1.0, x), grid)?,
    })
}

/// Second probe configuration: later ε endpoint, reversed sweep order and a
/// random start.
pub fn second_config(first: &SolverConfig, seed: u64) -> SolverConfig {
    SolverConfig {
        eps_end: first.eps_end * 1.25,
        order: SweepOrder::Backward,
        init: Init::Random { seed, amplitude: 1.0 },
        ..first.clone()
    }
}

#[derive(Debug, Serialize)]
pub struct ProbeData {
    pub map: &'static str,
    pub n: usize,
    pub steps: usize,
    pub eps_end: [Num; 2],
    pub deviation: Num,
    pub scale: Num,
    pub per_slice: Vec<Num>,
    pub iterations: [usize; 2],
}

pub fn probe_data(map: MapKind, grid: &GridSpec, first: &SolverConfig, second: &SolverConfig, r: &UniquenessReport) -> ProbeData {
    ProbeData {
        map: map.name(),
        n: grid.n,
        steps: grid.steps,
        eps_end: [Num(first.eps_end), Num(second.eps_end)],
        deviation: Num(r.deviation),
        scale: Num(r.scale),
        per_slice: nums(&r.per_slice),
        iterations: r.iterations,
    }
}

/// Runs both configurations and checks the deviation, or for the identity
/// plan, whose gradients vanish, the absolute gradient size.
pub fn probe(map: MapKind, grid: &GridSpec, eps_end: f64, seed: u64, tol: &Tolerances, deviation_name: &str) -> CliResult<(ProbeData, Check)> {
    let plan = plan_for(map, grid)?;
    let first = SolverConfig {
        eps_end,
        ..SolverConfig::default()
    };
    let second = second_config(&first, seed);
    let (a, b) = rayon::join(|| solve(grid, &plan, &first), || solve(grid, &plan, &second));
    let report = compare_gradients(&a?, &b?);
    let check = if map == MapKind::Identity {
        let size = report.scale + max(report.per_slice.iter().copied());
        tol.at_most("relax.identity_gradient_scale", size)
    } else {
        tol.at_most(deviation_name, report.deviation)
    };
    Ok((probe_data(map, grid, &first, &second, &report), check))
}

// --------------------------------------------------------------- contrast

#[derive(Debug, Serialize)]
pub struct ContrastData {
    pub rigid_axes: [[Num; 3]; 2],
    pub rigid_gap: Num,
    pub rigid_scale: Num,
    pub rigid_relative_gap: Num,
    pub relaxed: ProbeData,
}

pub fn contrast_suite(scale: Scale, seed: u64, tol: &Tolerances) -> CliResult<(ContrastData, Vec<Check>)> {
    let (ea, eb) = (Vector3::z(), Vector3::x());
    let c = pressure_contrast(&InertiaSpec::isotropic(), &(ea * PI), &(eb * PI), 100)?;
    let grid = match scale {
        Scale::Quick => GridSpec::new(16, 8)?,
        Scale::Full => GridSpec::new(32, 16)?,
    };
    let (relaxed, probe_check) = probe(MapKind::Flip, &grid, 1e-3, seed, tol, "contrast.uniqueness_deviation")?;
    let checks = vec![tol.at_least("contrast.relative_pressure_gap", c.relative_gap), probe_check];
    let v = |a: Vector3<f64>| [Num(a.x), Num(a.y), Num(a.z)];
    Ok((
        ContrastData {
            rigid_axes: [v(ea), v(eb)],
            rigid_gap: Num(c.gap),
            rigid_scale: Num(c.scale),
            rigid_relative_gap: Num(c.relative_gap),
            relaxed,
        },
        checks,
    ))
}

// ------------------------------------------------------------------ hydro

#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub seed: [Num; 3],
    pub t0: Num,
    pub gap: Num,
    pub stepper_tolerance: Num,
}

#[derive(Debug, Serialize)]
pub struct HydroData {
    pub continuity: Vec<[Num; 2]>,
    /// (h, max residual) over the interior sample points.
    pub divergence: Vec<[Num; 2]>,
    pub traces: Vec<TraceRow>,
    /// (nodes, max weak residual) for the skewed bump.
    pub weak_residual: Vec<(usize, Num)>,
    pub weak_ratios: Vec<Num>,
    pub reconstruction: Vec<[Num; 2]>,
}

const CONTINUITY_TIMES: [f64; 3] = [0.05, 0.4, 1.0];
const DIVERGENCE_POINTS: [(f64, f64, f64); 4] = [(0.5, 0.1, 0.2), (0.5, -0.3, 0.8), (0.3, 0.9, 0.5), (0.9, 0.2, 0.4)];
const TRACE_SEEDS: [[f64; 3]; 4] = [[0.25, 0.5, 0.25], [-0.4, 0.5, 0.7], [0.6, 0.5, 0.9], [-0.1, 0.5, 0.1]];
const WEAK_NODES: [usize; 5] = [4, 8, 16, 32, 64];
const RECONSTRUCTION_TIMES: [f64; 3] = [0.1, 0.5, 1.0];

pub fn hydro_suite(tol: &Tolerances) -> CliResult<(HydroData, Vec<Check>)> {
    let field = HydroField::new(DomainSpec::default());

    let continuity = CONTINUITY_TIMES
        .iter()
        .map(|&t| Ok([Num(t), Num(field.stream_continuity_gap(t, 101)?)]))
        .collect::<CliResult<Vec<_>>>()?;

    let mut divergence = Vec::new();
    for h in [1e-2, 1e-3, 1e-4] {
        let mut worst: f64 = 0.0;
        for &(t, x1, x3) in &DIVERGENCE_POINTS {
            if let Some(r) = field.divergence_residual(t, &Vector3::new(x1, 0.5, x3), h)? {
                worst = worst.max(r);
            }
        }
        divergence.push([Num(h), Num(worst)]);
    }

    let stepper = Stepper::default();
    let traces = TRACE_SEEDS
        .iter()
        .map(|s| {
            let path = field.trace_flow(&Vector3::new(s[0], s[1], s[2]), StartTime::Auto, 1.0, stepper)?;
            Ok(TraceRow {
                seed: s.map(Num),
                t0: Num(path.t0),
                gap: Num(path.closed_form_gap()),
                stepper_tolerance: Num(stepper.tolerance()),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let trace_ratio = max(traces.iter().map(|r| r.gap.0 / r.stepper_tolerance.0));

    let bump = Bump::new([0.2, 0.9], [-0.1, 0.7])?;
    let weak: Vec<f64> = WEAK_NODES
        .iter()
        .map(|&n| Ok(field.weak_momentum_residual(&bump, n)?.max()))
        .collect::<CliResult<_>>()?;
    let ratios: Vec<f64> = weak.windows(2).map(|w| w[0] / w[1]).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);

    let reconstruction = RECONSTRUCTION_TIMES
        .iter()
        .map(|&t| Ok([Num(t), Num(field.reconstruct_theorem3(t, 201)?.max_gap)]))
        .collect::<CliResult<Vec<_>>>()?;

    let checks = vec![
        tol.at_most("hydro.continuity", max(continuity.iter().map(|r| r[1].0))),
        tol.at_most("hydro.divergence", max(divergence.iter().map(|r| r[1].0))),
        tol.at_most("hydro.tracer_gap_ratio", trace_ratio),
        tol.at_least("hydro.weak_refinement_ratio", min_ratio),
        tol.at_most("hydro.reconstruction", max(reconstruction.iter().map(|r| r[1].0))),
    ];
    Ok((
        HydroData {
            continuity,
            divergence,
            traces,
            weak_residual: WEAK_NODES.iter().copied().zip(nums(&weak)).collect(),
            weak_ratios: nums(&ratios),
            reconstruction,
        },
        checks,
    ))
}

// ---------------------------------------------------------------- relaxed

#[derive(Debug, Serialize)]
pub struct BruteForceRow {
    pub case: &'static str,
    pub n: usize,
    pub eps: Num,
    pub solver_objective: Num,
    pub direct_objective: Num,
    pub objective_gap: Num,
    pub dual_gap: Num,
    pub first_step_gap: Num,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub map: &'static str,
    pub n: usize,
    pub steps: usize,
    pub eps: Num,
    pub iterations: usize,
    pub time_violation: Num,
    pub pair_violation: Num,
    pub action: Num,
    pub straight_line_action: Num,
    pub calibration: Num,
    pub calibration_spread: Num,
}

#[derive(Debug, Serialize)]
pub struct RelaxData {
    pub brute_force: Vec<BruteForceRow>,
    pub run: RunSummary,
    /// Time of the compared slice and the correlation with the closed-form profile.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pearson_mid_time: Option<[Num; 2]>,
    pub time_reversal_gap: Num,
    pub reflection_asymmetry: Num,
}

fn brute_force_cases() -> CliResult<Vec<(&'static str, EndpointPlan, f64)>> {
    let mixed = EndpointPlan::from_matrix(
        4,
        vec![
            0.1, 0.15, 0.0, 0.0, //
            0.15, 0.0, 0.1, 0.0, //
            0.0, 0.1, 0.0, 0.15, //
            0.0, 0.0, 0.15, 0.1,
        ],
    )?;
    Ok(vec![
        ("flip3", EndpointPlan::flip(3), 0.2),
        ("mixed4", mixed, 0.1),
        ("identity4", EndpointPlan::identity(4), 0.02),
    ])
}

fn brute_force_row(case: &'static str, plan: &EndpointPlan, eps: f64) -> CliResult<BruteForceRow> {
    let grid = GridSpec::new(plan.n(), 2)?;
    let direct = direct_solve(&grid, plan, eps)?;
    let cfg = SolverConfig {
        eps_start: eps,
        eps_end: eps,
        tol_marg: 1e-12,
        ..SolverConfig::default()
    };
    let c = solve(&grid, plan, &cfg)?;
    let stats = path_statistics(&c);
    let msgs = c.messages();
    let first = c.two_time_marginal(&msgs, 0);
    Ok(BruteForceRow {
        case,
        n: plan.n(),
        eps: Num(eps),
        solver_objective: Num(stats.objective),
        direct_objective: Num(direct.objective),
        objective_gap: Num((stats.objective - direct.objective).abs()),
        dual_gap: Num((stats.dual - direct.objective).abs()),
        first_step_gap: Num(max(first.iter().zip(&direct.first_step).map(|(a, b)| (a - b).abs()))),
    })
}

pub fn run_summary(map: MapKind, c: &ChainCoupling) -> RunSummary {
    let grid = c.grid();
    let stats = path_statistics(c);
    let p = recover_pressure(c);
    let (tv, pv) = c.violations();
    RunSummary {
        map: map.name(),
        n: grid.n,
        steps: grid.steps,
        eps: Num(c.eps()),
        iterations: c.stats().iterations,
        time_violation: Num(tv),
        pair_violation: Num(pv),
        action: Num(stats.action),
        straight_line_action: Num(straight_line_action(grid, c.plan())),
        calibration: Num(p.scale),
        calibration_spread: Num(p.scale_spread()),
    }
}

pub fn relax_suite(scale: Scale, tol: &Tolerances) -> CliResult<(RelaxData, Vec<Check>)> {
    let brute_force = brute_force_cases()?
        .par_iter()
        .map(|(name, plan, eps)| brute_force_row(name, plan, *eps))
        .collect::<CliResult<Vec<_>>>()?;

    // the quick grid keeps the kernel contrast Δx²/(εΔt) of the full one
    let (grid, eps_end) = match scale {
        Scale::Quick => (GridSpec::new(16, 8)?, 8e-3),
        Scale::Full => (GridSpec::new(64, 16)?, 1e-3),
    };
    let plan = plan_for(MapKind::Selfsim, &grid)?;
    let cfg = SolverConfig {
        eps_end,
        ..SolverConfig::default()
    };
    let (forward, backward) = rayon::join(|| solve(&grid, &plan, &cfg), || solve(&grid, &plan.transpose(), &cfg));
    let (forward, backward) = (forward?, backward?);
    let (pf, pb) = (recover_pressure(&forward), recover_pressure(&backward));
    let (tv, pv) = forward.violations();

    let pearson_mid_time = match scale {
        Scale::Quick => None,
        Scale::Full => {
            let mid = grid.steps / 2 - 1;
            let t = pf.times[mid];
            let field = SelfSimilarField::new(DomainSpec::default());
            let reference = pf
                .x
                .iter()
                .map(|&x| field.eval_p(t, x))
                .collect::<geolab_core::Result<Vec<f64>>>()?;
            Some([Num(t), Num(pearson(&pf.values()[mid], &reference))])
        }
    };

    let mut checks = vec![
        tol.at_most("relax.brute_force_objective", max(brute_force.iter().map(|r| r.objective_gap.0))),
        tol.at_most("relax.feasibility", tv.max(pv)),
    ];
    if let Some([_, r]) = pearson_mid_time {
        checks.push(tol.at_least("relax.pearson_mid_time", r.0));
    }
    let time_reversal_gap = pf.time_reversal_gap(&pb);
    let reflection_asymmetry = pf.reflection_asymmetry();
    checks.push(tol.at_most("relax.time_reversal", time_reversal_gap));
    checks.push(tol.at_most("relax.reflection", reflection_asymmetry));
    Ok((
        RelaxData {
            brute_force,
            run: run_summary(MapKind::Selfsim, &forward),
            pearson_mid_time,
            time_reversal_gap: Num(time_reversal_gap),
            reflection_asymmetry: Num(reflection_asymmetry),
        },
        checks,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_defaults() {
        let t = Tolerances::with_overrides(&["hydro.continuity=1e-12".to_string()]).unwrap();
        assert_eq!(t.get("hydro.continuity"), 1e-12);
        assert_eq!(t.get("hydro.divergence"), 1e-9);
        assert!(Tolerances::with_overrides(&["hydro.continuity".to_string()]).is_err());
        assert!(Tolerances::with_overrides(&["hydro.continuity=0".to_string()]).is_err());
        assert!(Tolerances::with_overrides(&["nope=1".to_string()]).is_err());
    }

    #[test]
    fn every_default_tolerance_is_positive() {
        assert!(DEFAULT_TOLERANCES.iter().all(|(_, v)| *v > 0.0));
    }

    #[test]
    fn random_axes_keep_their_distance_from_coordinate_axes() {
        let axes = random_axes(3, 50);
        let limit = MIN_ANGLE_DEG.to_radians().cos();
        for a in &axes {
            assert!((a.norm() - 1.0).abs() < 1e-12);
            assert!(a.iter().all(|c| c.abs() <= limit));
        }
        assert_eq!(axes, random_axes(3, 50));
        assert_ne!(axes, random_axes(4, 50));
    }

    #[test]
    fn second_configuration_differs_in_order_start_and_endpoint() {
        let a = SolverConfig::default();
        let b = second_config(&a, 9);
        assert_eq!(b.eps_end, 1.25 * a.eps_end);
        assert_eq!(b.order, SweepOrder::Backward);
        assert_eq!(b.init, Init::Random { seed: 9, amplitude: 1.0 });
    }

    #[test]
    fn hydro_suite_passes_with_default_tolerances() {
        let (_, checks) = hydro_suite(&Tolerances::default()).unwrap();
        for c in &checks {
            assert!(c.pass, "{c:?}");
        }
    }
}
