use geolab_core::hydrostatic::{HydroField, Region, StartTime, Stepper};
use geolab_core::self_similar::DomainSpec;
use nalgebra::Vector3;
use serde::Serialize;

use crate::commands::write_csv;
use crate::error::{usage, CliResult};
use crate::format::{fmt, Num};
use crate::report::Report;
use crate::suite::{hydro_suite, Tolerances};
use crate::{HydroTraceArgs, HydroVerifyArgs};

fn branch(r: Region) -> &'static str {
    match r {
        Region::Lower => "lower",
        Region::Upper => "upper",
        Region::Still => "still",
    }
}

#[derive(Serialize)]
struct TraceData {
    out: String,
    t0: Num,
    label: Num,
    nodes: usize,
    events: usize,
    closed_form_gap: Num,
    stepper_tolerance: Num,
}

pub fn trace(a: &HydroTraceArgs, echo: &[String]) -> CliResult<()> {
    let start = match a.t0.as_str() {
        "auto" => StartTime::Auto,
        s => match s.parse::<f64>() {
            Ok(t) => StartTime::At(t),
            Err(_) => return usage(format!("--t0 must be 'auto' or a number, got '{s}'")),
        },
    };
    let stepper = match a.adaptive_tol {
        Some(tol) => Stepper::Adaptive { tol },
        None => Stepper::Rk4 { dt: a.dt },
    };
    let field = HydroField::new(DomainSpec::default());
    let path = field.trace_flow(&Vector3::from(a.x), start, a.t1, stepper)?;
    let rows = path.times.iter().zip(&path.positions).zip(&path.regions).map(|((t, x), r)| {
        vec![fmt(*t), fmt(x.x), fmt(x.y), fmt(x.z), branch(*r).to_string()]
    });
    write_csv(&a.out, &["t", "X1", "X2", "X3", "branch"], rows)?;

    let gap = path.closed_form_gap();
    let tol = Tolerances::default();
    let checks = vec![tol.at_most("hydro.tracer_gap_ratio", gap / stepper.tolerance())];
    let data = TraceData {
        out: a.out.display().to_string(),
        t0: Num(path.t0),
        label: Num(path.label),
        nodes: path.times.len(),
        events: path.events,
        closed_form_gap: Num(gap),
        stepper_tolerance: Num(stepper.tolerance()),
    };
    Report::new(echo, data, checks).emit(None)
}

pub fn verify(a: &HydroVerifyArgs, echo: &[String]) -> CliResult<()> {
    let tol = Tolerances::with_overrides(&a.tol)?;
    let (data, checks) = hydro_suite(&tol)?;
    Report::new(echo, data, checks).emit(a.out.as_deref())
}
