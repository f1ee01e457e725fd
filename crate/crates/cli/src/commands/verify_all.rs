use serde::Serialize;

use crate::error::CliResult;
use crate::report::{Check, Report};
use crate::suite::{
    contrast_suite, hydro_suite, relax_suite, rigid_suite, selfsim_suite, ContrastData, HydroData,
    RelaxData, RigidData, Scale, SelfsimData, SelfsimParams, Tolerances,
};
use crate::VerifyAllArgs;

#[derive(Serialize, Default)]
struct SuiteData {
    #[serde(skip_serializing_if = "Option::is_none")]
    selfsim: Option<SelfsimData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rigid: Option<RigidData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contrast: Option<ContrastData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hydro: Option<HydroData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relax: Option<RelaxData>,
}

#[derive(Serialize)]
struct VerifyAllData {
    suite: Scale,
    seed: u64,
    criteria: Vec<u8>,
    results: SuiteData,
}

/// Criteria 1 to 5 in order; an empty selection runs all of them.
pub fn run(a: &VerifyAllArgs, echo: &[String]) -> CliResult<()> {
    let tol = Tolerances::with_overrides(&a.tol)?;
    let scale = a.scale();
    let mut criteria: Vec<u8> = if a.criteria.is_empty() {
        (1..=5).collect()
    } else {
        a.criteria.clone()
    };
    criteria.sort_unstable();
    criteria.dedup();

    let mut results = SuiteData::default();
    let mut checks: Vec<Check> = Vec::new();
    for &c in &criteria {
        match c {
            1 => {
                let params = SelfsimParams {
                    seed: a.seed,
                    ..SelfsimParams::default()
                };
                let (d, ch) = selfsim_suite(&params, &tol)?;
                results.selfsim = Some(d);
                checks.extend(ch);
            }
            2 => {
                let (d, ch) = rigid_suite(a.seed, &tol)?;
                results.rigid = Some(d);
                checks.extend(ch);
            }
            3 => {
                let (d, ch) = contrast_suite(scale, a.seed, &tol)?;
                results.contrast = Some(d);
                checks.extend(ch);
            }
            4 => {
                let (d, ch) = hydro_suite(&tol)?;
                results.hydro = Some(d);
                checks.extend(ch);
            }
            _ => {
                let (d, ch) = relax_suite(scale, &tol)?;
                results.relax = Some(d);
                checks.extend(ch);
            }
        }
    }
    let data = VerifyAllData {
        suite: scale,
        seed: a.seed,
        criteria,
        results,
    };
    Report::new(echo, data, checks).emit(a.out.as_deref())
}
