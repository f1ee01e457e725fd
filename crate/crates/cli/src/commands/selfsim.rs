use geolab_core::self_similar::{first_component, DomainSpec, SelfSimilarField};
use serde::Serialize;

use crate::commands::write_csv;
use crate::error::{usage, CliResult};
use crate::format::{fmt, Num};
use crate::report::Report;
use crate::suite::{selfsim_suite, SelfsimParams, Tolerances};
use crate::{SelfsimFieldArgs, SelfsimVerifyArgs};

pub fn verify(a: &SelfsimVerifyArgs, echo: &[String]) -> CliResult<()> {
    let tol = Tolerances::with_overrides(&a.tol)?;
    let params = SelfsimParams {
        half_width: a.l,
        tmin: a.tmin,
        steps: a.steps,
        perturbations: a.perturbations,
        seed: a.seed,
    };
    let (data, checks) = selfsim_suite(&params, &tol)?;
    Report::new(echo, data, checks).emit(a.out.as_deref())
}

#[derive(Serialize)]
struct FieldData {
    out: String,
    t: Num,
    samples: usize,
    support_radius: Num,
    min_p: Num,
}

pub fn field(a: &SelfsimFieldArgs, echo: &[String]) -> CliResult<()> {
    if a.samples < 2 {
        return usage("--samples must be at least 2");
    }
    let field = SelfSimilarField::new(DomainSpec::new(a.l)?);
    let mut rows = Vec::with_capacity(a.samples);
    let mut min_p: f64 = 0.0;
    for i in 0..a.samples {
        let x1 = -a.l + 2.0 * a.l * i as f64 / (a.samples - 1) as f64;
        let p = field.eval_p(a.t, x1)?;
        min_p = min_p.min(p);
        rows.push(vec![fmt(x1), fmt(first_component(a.t, x1)), fmt(p), fmt(field.grad_p(a.t, x1)?)]);
    }
    write_csv(&a.out, &["x1", "g1", "p", "dp"], rows)?;
    let data = FieldData {
        out: a.out.display().to_string(),
        t: Num(a.t),
        samples: a.samples,
        support_radius: Num(field.d2p_parts(a.t)?.interface),
        min_p: Num(min_p),
    };
    Report::new(echo, data, Vec::new()).emit(None)
}
