//! Explicit solution of the hydrostatic Euler equations on D = [−L,L]×[0,1]².
//!
//! With ξ = x₁t^{−2/3}, the support |ξ| < 1 is split by the vortex sheet
//! x₃ = (1+ξ)/2 into a lower region, where ψ = t^{−1/3}x₃(ξ−1)/3, and an upper
//! region, where ψ = t^{−1/3}(x₃−1)(ξ+1)/3. The velocity is v = (∂₃ψ, 0, −∂₁ψ).

use nalgebra::Vector3;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{breakpoints, GaussLegendre};
use crate::self_similar::DomainSpec;

const EVENT_TOL: f64 = 1e-10;
const MAX_EVENTS: usize = 1000;

/// Piece of the domain on which the field is smooth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// |ξ| < 1 and x₃ below the sheet.
    Lower,
    /// |ξ| < 1 and x₃ above the sheet.
    Upper,
    /// |ξ| > 1, where the fluid is at rest.
    Still,
}

impl Region {
    /// 1, 2, 3 for lower, upper, still.
    pub fn index(self) -> u8 {
        match self {
            Region::Lower => 1,
            Region::Upper => 2,
            Region::Still => 3,
        }
    }
}

/// Region of a point plus whether it sits exactly on an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub region: Region,
    pub on_interface: bool,
}

/// Velocity at a point together with the side it was evaluated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySample {
    pub v: Vector3<f64>,
    pub location: Location,
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("time must be positive and finite, got {t}"));
    }
    Ok(())
}

fn rescaled(t: f64, x1: f64) -> f64 {
    x1 / (t.cbrt() * t.cbrt())
}

/// Region containing (x₁, x₃) at time t. Points on |ξ| = 1 are assigned to the
/// inside; points on the sheet go below it, except on the lid x₃ = 1.
pub fn classify(t: f64, x1: f64, x3: f64) -> Location {
    let xi = rescaled(t, x1);
    if xi.abs() > 1.0 {
        return Location {
            region: Region::Still,
            on_interface: false,
        };
    }
    let sheet = 0.5 * (1.0 + xi);
    let on_sheet = x3 == sheet;
    let region = if x3 < sheet || (on_sheet && x3 < 1.0) {
        Region::Lower
    } else {
        Region::Upper
    };
    Location {
        region,
        on_interface: on_sheet || xi.abs() == 1.0,
    }
}

/// Stream function of the smooth field of `region`, extended to the whole plane.
fn region_stream(region: Region, t: f64, x1: f64, x3: f64) -> f64 {
    let xi = rescaled(t, x1);
    let scale = 1.0 / (3.0 * t.cbrt());
    match region {
        Region::Lower => scale * x3 * (xi - 1.0),
        Region::Upper => scale * (x3 - 1.0) * (xi + 1.0),
        Region::Still => 0.0,
    }
}

/// Velocity of the smooth field of `region`, extended to the whole plane.
fn region_velocity(region: Region, t: f64, x1: f64, x3: f64) -> Vector3<f64> {
    let xi = rescaled(t, x1);
    match region {
        Region::Lower => Vector3::new((xi - 1.0) / (3.0 * t.cbrt()), 0.0, -x3 / (3.0 * t)),
        Region::Upper => Vector3::new((xi + 1.0) / (3.0 * t.cbrt()), 0.0, -(x3 - 1.0) / (3.0 * t)),
        Region::Still => Vector3::zeros(),
    }
}

/// Fraction of the column above x₁ occupied by `region`.
fn column_fraction(region: Region, t: f64, x1: f64) -> f64 {
    let xi = rescaled(t, x1).clamp(-1.0, 1.0);
    match region {
        Region::Lower => 0.5 * (1.0 + xi),
        Region::Upper => 0.5 * (1.0 - xi),
        Region::Still => 0.0,
    }
}

/// Three-branch closed form of the horizontal flow map x₁ ↦ X₁(t, x₁).
pub fn closed_form_x1(t: f64, x1: f64) -> Result<f64> {
    check_time(t)?;
    let s = t.powf(2.0 / 3.0);
    Ok(if 0.0 < x1 && x1 < s {
        s * (2.0 * (x1 / s).sqrt() - 1.0)
    } else if -s < x1 && x1 < 0.0 {
        s * (1.0 - 2.0 * (-x1 / s).sqrt())
    } else if x1 == 0.0 {
        -s
    } else {
        x1
    })
}

/// Pressure −(t^{4/3} − x₁²)₊/(9t²) and its x₁-derivative.
fn pressure(t: f64, x1: f64) -> (f64, f64) {
    let s2 = t.powf(4.0 / 3.0);
    if x1 * x1 < s2 {
        (-(s2 - x1 * x1) / (9.0 * t * t), 2.0 * x1 / (9.0 * t * t))
    } else {
        (0.0, 0.0)
    }
}

/// Fixed or adaptive RK4 for the particle tracer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepper {
    /// Classical RK4 with step dt·t, matching the t^{1/3} self-similar scaling.
    Rk4 { dt: f64 },
    /// RK4 with step doubling; the local error per unit time is kept below `tol`.
    Adaptive { tol: f64 },
}

impl Stepper {
    pub fn tolerance(&self) -> f64 {
        match *self {
            Stepper::Rk4 { dt } => dt.powi(4),
            Stepper::Adaptive { tol } => tol,
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            Stepper::Rk4 { dt } => dt > 0.0 && dt < 1.0,
            Stepper::Adaptive { tol } => tol > 0.0 && tol.is_finite(),
        };
        if !ok {
            return invalid(format!("invalid stepper {self:?}"));
        }
        Ok(())
    }
}

impl Default for Stepper {
    fn default() -> Self {
        Stepper::Rk4 { dt: 1e-3 }
    }
}

/// When the tracer starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartTime {
    /// |x₁|^{3/2}, the moment the particle starts to move.
    Auto,
    At(f64),
}

/// Sampled particle path with X(t₀) = seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticlePath {
    pub seed: Vector3<f64>,
    pub t0: f64,
    /// Label at t = 0 of the particle found at `seed` at time t₀.
    pub label: f64,
    pub times: Vec<f64>,
    pub positions: Vec<Vector3<f64>>,
    pub regions: Vec<Region>,
    pub events: usize,
}

impl ParticlePath {
    /// max |X₁ − closed_form_x1(t, label)| along the path.
    pub fn closed_form_gap(&self) -> f64 {
        self.times
            .iter()
            .zip(&self.positions)
            .map(|(&t, p)| (p.x - closed_form_x1(t, self.label).expect("path times are positive")).abs())
            .fold(0.0, f64::max)
    }
}

/// Smooth test function φ(t, x₁) with compact support in (0,1)×(−L,L).
pub trait TestFunction {
    /// ([t_lo, t_hi], [x_lo, x_hi]) containing the support.
    fn support(&self) -> ([f64; 2], [f64; 2]);
    fn value(&self, t: f64, x1: f64) -> f64;
    fn dt(&self, t: f64, x1: f64) -> f64;
    fn dx(&self, t: f64, x1: f64) -> f64;
}

/// Product of standard bumps exp(−1/(1−y²)) on a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub t: [f64; 2],
    pub x: [f64; 2],
}

impl Bump {
    pub fn new(t: [f64; 2], x: [f64; 2]) -> Result<Self> {
        if !(0.0 < t[0] && t[0] < t[1] && t[1] < 1.0 && x[0] < x[1]) {
            return invalid(format!("bump support {t:?} x {x:?} must lie in (0,1) x R"));
        }
        Ok(Self { t, x })
    }

    fn profile(range: [f64; 2], s: f64) -> (f64, f64) {
        let half = 0.5 * (range[1] - range[0]);
        let y = (s - 0.5 * (range[0] + range[1])) / half;
        if y.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - y * y;
        let b = (-1.0 / q).exp();
        (b, -2.0 * y / (q * q) * b / half)
    }
}

impl TestFunction for Bump {
    fn support(&self) -> ([f64; 2], [f64; 2]) {
        (self.t, self.x)
    }

    fn value(&self, t: f64, x1: f64) -> f64 {
        Self::profile(self.t, t).0 * Self::profile(self.x, x1).0
    }

    fn dt(&self, t: f64, x1: f64) -> f64 {
        Self::profile(self.t, t).1 * Self::profile(self.x, x1).0
    }

    fn dx(&self, t: f64, x1: f64) -> f64 {
        Self::profile(self.t, t).0 * Self::profile(self.x, x1).1
    }
}

/// Weak residuals of the column-integrated equations in each moving region.
///
/// For the lower and upper regions with column fractions ρ, the residuals of
/// ∂ₜρ + ∂₁(ρu) = 0 and ∂ₜ(ρu) + ∂₁(ρu²) + ρ∂₁p = 0 against φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    pub mass: [f64; 2],
    pub momentum: [f64; 2],
    /// ∫∫ |ρu∂ₜφ| + |ρu²∂₁φ| + |ρ∂₁pφ|, the size of the terms that cancel.
    pub scale: f64,
}

impl WeakResidual {
    pub fn max(&self) -> f64 {
        self.mass
            .iter()
            .chain(&self.momentum)
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

/// Gap between the horizontal flow map and the self-similar map.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub t: f64,
    pub x1: Vec<f64>,
    pub hydro: Vec<f64>,
    pub self_similar: Vec<f64>,
    pub max_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HydroField {
    domain: DomainSpec,
}

impl HydroField {
    pub fn new(domain: DomainSpec) -> Self {
        Self { domain }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn eval_stream(&self, t: f64, x1: f64, x3: f64) -> Result<f64> {
        check_time(t)?;
        Ok(region_stream(classify(t, x1, x3).region, t, x1, x3))
    }

    /// Largest jump of ψ across the three interfaces at time t, comparing the
    /// region formulas on `samples` points of the sheet x₃ = (1 + ξ)/2 and of
    /// the walls ξ = ±1.
    pub fn stream_continuity_gap(&self, t: f64, samples: usize) -> Result<f64> {
        check_time(t)?;
        if samples < 2 {
            return invalid("need at least two samples");
        }
        let s = t.cbrt() * t.cbrt();
        let mut gap: f64 = 0.0;
        for i in 0..samples {
            let u = i as f64 / (samples - 1) as f64;
            let x1 = s * (2.0 * u - 1.0);
            let sheet = 0.5 * (1.0 + x1 / s);
            gap = gap.max((region_stream(Region::Lower, t, x1, sheet) - region_stream(Region::Upper, t, x1, sheet)).abs());
            // the lower region fills the wall ξ = 1, the upper one ξ = −1
            gap = gap.max(region_stream(Region::Lower, t, s, u).abs());
            gap = gap.max(region_stream(Region::Upper, t, -s, u).abs());
        }
        Ok(gap)
    }

    pub fn eval_velocity(&self, t: f64, x: &Vector3<f64>) -> Result<VelocitySample> {
        check_time(t)?;
        self.domain.check(x)?;
        let location = classify(t, x.x, x.z);
        Ok(VelocitySample {
            v: region_velocity(location.region, t, x.x, x.z),
            location,
        })
    }

    /// |∂₁v₁ + ∂₃v₃| by central differences of step h, or `None` when x lies
    /// within 2h of an interface.
    pub fn divergence_residual(&self, t: f64, x: &Vector3<f64>, h: f64) -> Result<Option<f64>> {
        check_time(t)?;
        self.domain.check(x)?;
        if !(h > 0.0) {
            return invalid("difference step must be positive");
        }
        let here = classify(t, x.x, x.z).region;
        let probes = [
            (x.x - 2.0 * h, x.z),
            (x.x + 2.0 * h, x.z),
            (x.x, x.z - 2.0 * h),
            (x.x, x.z + 2.0 * h),
            (x.x - 2.0 * h, x.z - 2.0 * h),
            (x.x + 2.0 * h, x.z + 2.0 * h),
            (x.x - 2.0 * h, x.z + 2.0 * h),
            (x.x + 2.0 * h, x.z - 2.0 * h),
        ];
        if probes.iter().any(|&(a, b)| classify(t, a, b).region != here) {
            return Ok(None);
        }
        let v = |a: f64, b: f64| region_velocity(classify(t, a, b).region, t, a, b);
        let d1v1 = (v(x.x + h, x.z).x - v(x.x - h, x.z).x) / (2.0 * h);
        let d3v3 = (v(x.x, x.z + h).z - v(x.x, x.z - h).z) / (2.0 * h);
        Ok(Some((d1v1 + d3v3).abs()))
    }

    /// D_t v₃ = ∂ₜv₃ + v·∇v₃, the term the hydrostatic system drops.
    pub fn vertical_acceleration(&self, t: f64, x: &Vector3<f64>) -> Result<f64> {
        check_time(t)?;
        self.domain.check(x)?;
        Ok(match classify(t, x.x, x.z).region {
            Region::Lower => 4.0 * x.z / (9.0 * t * t),
            Region::Upper => 4.0 * (x.z - 1.0) / (9.0 * t * t),
            Region::Still => 0.0,
        })
    }

    /// Label at t = 0 of the particle found at x at time t.
    pub fn label_of(&self, t: f64, x: &Vector3<f64>) -> Result<f64> {
        check_time(t)?;
        let s = t.cbrt() * t.cbrt();
        let xi = x.x / s;
        Ok(match classify(t, x.x, x.z).region {
            Region::Lower => s * (0.25 * (1.0 + xi) * (1.0 + xi)),
            Region::Upper => -s * (0.25 * (1.0 - xi) * (1.0 - xi)),
            Region::Still => x.x,
        })
    }

    /// Integrates ∂ₜX = v(t, X) from X(t₀) = x up to t₁. Each step uses the
    /// smooth field of the region it starts in; when the end point lands in
    /// another region the crossing time is bisected to 1e−10.
    pub fn trace_flow(
        &self,
        x: &Vector3<f64>,
        start: StartTime,
        t1: f64,
        stepper: Stepper,
    ) -> Result<ParticlePath> {
        self.domain.check(x)?;
        stepper.check()?;
        if !(t1 > 0.0 && t1 <= 1.0) {
            return invalid(format!("end time must lie in (0, 1], got {t1}"));
        }
        let t0 = match start {
            StartTime::Auto => {
                if x.x == 0.0 {
                    return invalid("automatic start is undefined at x1 = 0; give t0");
                }
                x.x.abs().powf(1.5).min(t1)
            }
            StartTime::At(t0) => {
                if !(t0 > 0.0 && t0 < t1) {
                    return invalid(format!("start time must satisfy 0 < t0 < t1, got {t0}"));
                }
                t0
            }
        };
        let label = self.label_of(t0, x)?;
        let mut path = ParticlePath {
            seed: *x,
            t0,
            label,
            times: vec![t0],
            positions: vec![*x],
            regions: vec![classify(t0, x.x, x.z).region],
            events: 0,
        };
        let mut t = t0;
        let mut y = *x;
        let mut h = match stepper {
            Stepper::Rk4 { dt } => dt * t0,
            Stepper::Adaptive { tol } => tol.powf(0.25) * t0,
        };
        while t < t1 {
            let region = classify(t, y.x, y.z).region;
            let (step, next) = match stepper {
                Stepper::Rk4 { dt } => {
                    let step = (dt * t).min(t1 - t);
                    (step, rk4(region, t, &y, step))
                }
                Stepper::Adaptive { tol } => {
                    let (step, next, h_next) = adaptive_step(region, t, &y, h.min(t1 - t), tol);
                    h = h_next;
                    (step, next)
                }
            };
            let (step, next) = if classify(t + step, next.x, next.z).region != region {
                path.events += 1;
                if path.events > MAX_EVENTS {
                    return Err(Error::InvalidInput(format!(
                        "tracer from {x:?} kept switching regions near t = {t}"
                    )));
                }
                locate_crossing(region, t, &y, step)
            } else {
                (step, next)
            };
            t = if t1 - (t + step) <= 1e-14 * t1 { t1 } else { t + step };
            y = next;
            y.z = y.z.clamp(0.0, 1.0);
            path.times.push(t);
            path.positions.push(y);
            path.regions.push(classify(t, y.x, y.z).region);
        }
        Ok(path)
    }

    /// Column-integrated weak residuals against φ with `nodes` Gauss points per
    /// smooth piece in each direction.
    pub fn weak_momentum_residual<F: TestFunction>(&self, phi: &F, nodes: usize) -> Result<WeakResidual> {
        let ([ta, tb], [xa, xb]) = phi.support();
        if !(0.0 < ta && ta < tb && tb < 1.0) {
            return invalid("test function must be supported in (0, 1) in time");
        }
        let l = self.domain.half_width();
        if !(-l <= xa && xa < xb && xb <= l) {
            return invalid("test function must be supported inside the domain");
        }
        if nodes == 0 {
            return invalid("quadrature needs at least one node");
        }
        let rule = GaussLegendre::new(nodes);
        let t_breaks = breakpoints(ta, tb, &[xa.abs().powf(1.5), xb.abs().powf(1.5)]);
        let mut out = WeakResidual {
            mass: [0.0; 2],
            momentum: [0.0; 2],
            scale: 0.0,
        };
        for w in t_breaks.windows(2) {
            for (t, wt) in rule.mapped(w[0], w[1]) {
                let s = t.cbrt() * t.cbrt();
                let x_breaks = breakpoints(xa, xb, &[-s, s]);
                for p in x_breaks.windows(2) {
                    for (x1, wx) in rule.mapped(p[0], p[1]) {
                        let weight = wt * wx;
                        let (f, ft, fx) = (phi.value(t, x1), phi.dt(t, x1), phi.dx(t, x1));
                        let (_, dp) = pressure(t, x1);
                        for (k, region) in [Region::Lower, Region::Upper].into_iter().enumerate() {
                            let rho = if rescaled(t, x1).abs() < 1.0 {
                                column_fraction(region, t, x1)
                            } else {
                                // outside the support the region has either collapsed or filled the column
                                let xi = rescaled(t, x1);
                                match region {
                                    Region::Lower => (xi > 0.0) as u8 as f64,
                                    _ => (xi < 0.0) as u8 as f64,
                                }
                            };
                            let u = if rescaled(t, x1).abs() < 1.0 {
                                region_velocity(region, t, x1, 0.0).x
                            } else {
                                0.0
                            };
                            out.mass[k] += weight * rho * (ft + u * fx);
                            let terms = [rho * u * ft, rho * u * u * fx, -rho * dp * f];
                            out.momentum[k] += weight * terms.iter().sum::<f64>();
                            out.scale += weight * terms.iter().map(|v| v.abs()).sum::<f64>();
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Compares x₁ ↦ X₁(t, x₁) with the self-similar map on `samples` points
    /// spread over [−L, L].
    pub fn reconstruct_theorem3(&self, t: f64, samples: usize) -> Result<Reconstruction> {
        if !(t > 0.0 && t <= 1.0) {
            return invalid(format!("time must lie in (0, 1], got {t}"));
        }
        if samples < 2 {
            return invalid("need at least two samples");
        }
        let l = self.domain.half_width();
        let x1: Vec<f64> = (0..samples)
            .map(|i| -l + 2.0 * l * i as f64 / (samples - 1) as f64)
            .collect();
        let hydro = x1
            .iter()
            .map(|&x| closed_form_x1(t, x))
            .collect::<Result<Vec<_>>>()?;
        let self_similar: Vec<f64> = x1
            .iter()
            .map(|&x| crate::self_similar::first_component(t, x))
            .collect();
        let max_gap = hydro
            .iter()
            .zip(&self_similar)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(Reconstruction {
            t,
            x1,
            hydro,
            self_similar,
            max_gap,
        })
    }
}

fn rk4(region: Region, t: f64, y: &Vector3<f64>, h: f64) -> Vector3<f64> {
    let f = |s: f64, p: &Vector3<f64>| region_velocity(region, s, p.x, p.z);
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + 0.5 * h * k1));
    let k3 = f(t + 0.5 * h, &(y + 0.5 * h * k2));
    let k4 = f(t + h, &(y + h * k3));
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// One accepted step-doubling RK4 step: (step taken, new state, next step).
fn adaptive_step(region: Region, t: f64, y: &Vector3<f64>, mut h: f64, tol: f64) -> (f64, Vector3<f64>, f64) {
    loop {
        let full = rk4(region, t, y, h);
        let half = rk4(region, t, y, 0.5 * h);
        let fine = rk4(region, t + 0.5 * h, &half, 0.5 * h);
        let err = (fine - full).amax() / 15.0;
        let bound = tol * h;
        let grow = if err > 0.0 {
            (0.9 * (bound / err).powf(0.25)).clamp(0.2, 4.0)
        } else {
            4.0
        };
        if err <= bound || h < 1e-14 {
            return (h, fine + (fine - full) / 15.0, h * grow);
        }
        h *= grow;
    }
}

/// Shrinks a step that left `region` until its end point lies within
/// 1e−10 of the crossing, and returns the first step past it.
fn locate_crossing(region: Region, t: f64, y: &Vector3<f64>, step: f64) -> (f64, Vector3<f64>) {
    let (mut lo, mut hi) = (0.0, step);
    while hi - lo > EVENT_TOL {
        let mid = 0.5 * (lo + hi);
        let p = rk4(region, t, y, mid);
        if classify(t + mid, p.x, p.z).region == region {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi, rk4(region, t, y, hi))
}
