use geolab_core::rigid_body::{hat, integrate_geodesic, unit_grid, vee, InertiaSpec};
use nalgebra::Vector3;
use serde::Serialize;

use crate::commands::write_csv;
use crate::error::{usage, CliResult};
use crate::format::{fmt, Num};
use crate::report::Report;
use crate::suite::{asymmetry, axis_row, AxisRow, Tolerances};
use crate::{RigidSimulateArgs, RigidTheorem2Args};

#[derive(Serialize)]
struct SimulateData {
    out: String,
    rows: usize,
    orthogonality_drift: Num,
    energy_drift: Num,
    max_sym_residual: Num,
    max_multiplier_norm: Num,
}

pub fn simulate(a: &RigidSimulateArgs, echo: &[String]) -> CliResult<()> {
    if a.steps < 2 {
        return usage("--steps must be at least 2");
    }
    let inertia = InertiaSpec::diagonal(a.inertia[0], a.inertia[1], a.inertia[2])?;
    let omega = Vector3::from(a.omega0);
    let (path, mult) = integrate_geodesic(&inertia, &hat(&omega), &unit_grid(a.steps))?;

    let mut header = vec!["t".to_string()];
    for prefix in ["u", "m"] {
        if prefix == "m" {
            header.extend(["b1", "b2", "b3"].map(String::from));
        }
        for i in 1..=3 {
            for j in 1..=3 {
                header.push(format!("{prefix}{i}{j}"));
            }
        }
    }
    header.push("sym_residual".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();

    let rows = (0..path.len()).map(|i| {
        let mut row = vec![fmt(path.times[i])];
        let u = &path.rotations[i];
        let m = &mult.multipliers[i];
        row.extend((0..9).map(|k| fmt(u[(k / 3, k % 3)])));
        row.extend(vee(&path.b(i)).iter().map(|v| fmt(*v)));
        row.extend((0..9).map(|k| fmt(m[(k / 3, k % 3)])));
        row.push(fmt(mult.sym_residuals[i]));
        row
    });
    write_csv(&a.out, &header, rows)?;

    let e0 = inertia.energy(&path.omegas[0]);
    let drift = path
        .omegas
        .iter()
        .map(|w| (inertia.energy(w) - e0).abs())
        .fold(0.0, f64::max)
        / e0.max(f64::MIN_POSITIVE);
    let tol = Tolerances::default();
    let checks = vec![
        tol.at_most("rigid.orthogonality_drift", path.orthogonality_drift()),
        tol.at_most("rigid.energy_drift", drift),
    ];
    let data = SimulateData {
        out: a.out.display().to_string(),
        rows: path.len(),
        orthogonality_drift: Num(path.orthogonality_drift()),
        energy_drift: Num(drift),
        max_sym_residual: Num(mult.max_sym_residual()),
        max_multiplier_norm: Num(mult.max_norm()),
    };
    Report::new(echo, data, checks).emit(None)
}

pub fn theorem2(a: &RigidTheorem2Args, echo: &[String]) -> CliResult<()> {
    let tol = Tolerances::with_overrides(&a.tol)?;
    let axis = Vector3::from(a.axis);
    if axis.norm() == 0.0 {
        return usage("--axis must be nonzero");
    }
    if a.steps < 2 {
        return usage("--steps must be at least 2");
    }
    let inertia = InertiaSpec::diagonal(a.inertia[0], a.inertia[1], a.inertia[2])?;
    let row: AxisRow = axis_row(&inertia, &axis.normalize(), a.steps)?;
    let mut checks = vec![tol.at_most("rigid.endpoint_closure", row.endpoint_gap.0)];
    if row.principal {
        checks.push(tol.at_most("rigid.principal_multiplier_gap", row.multiplier_gap.0));
    } else {
        checks.push(tol.at_least("rigid.non_principal_asymmetry", asymmetry(&row)));
    }
    Report::new(echo, row, checks).emit(a.out.as_deref())
}
