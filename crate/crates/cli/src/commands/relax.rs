use geolab_core::relaxed::{
    acceleration_consistency, default_battery, path_statistics, recover_pressure,
    ChainCoupling, EndpointPlan, GridSpec, Init, SolveStats, SolverConfig, StageLog, SweepOrder,
};
use serde::{Deserialize, Serialize};

use crate::commands::write_csv;
use crate::error::{usage, CliError, CliResult};
use crate::format::{fmt, num_rows, nums, Num};
use crate::report::{write_file, Check, Report, SCHEMA_VERSION};
use crate::suite::{self, plan_for, run_summary, RunSummary, Tolerances};
use crate::{MapKind, OrderArg, RelaxPressureArgs, RelaxProbeArgs, RelaxSolveArgs};

/// Stored solver run. `F` is [`Num`] when writing and `Option<f64>` when
/// reading, where `None` stands for a potential of −∞ off the plan support.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile<F> {
    pub schema_version: u32,
    pub map: String,
    pub grid: RunGrid<F>,
    pub schedule: Vec<F>,
    pub eps: F,
    /// γ, n rows of n entries.
    pub plan: Vec<Vec<F>>,
    /// log b_k for the interior times k = 1..T−1.
    pub log_b: Vec<Vec<F>>,
    /// log a(i₀, i_T), n rows of n entries.
    pub log_a: Vec<Vec<F>>,
    pub stats: RunStats<F>,
    pub diagnostics: Diagnostics<F>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunGrid<F> {
    pub n: usize,
    pub steps: usize,
    pub a: F,
    pub b: F,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunStats<F> {
    pub iterations: usize,
    pub time_violation: F,
    pub pair_violation: F,
    pub stages: Vec<RunStage<F>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunStage<F> {
    pub eps: F,
    pub sweeps: usize,
    pub newton_steps: usize,
    pub final_dual: F,
    pub time_violation: F,
    pub pair_violation: F,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics<F> {
    pub action: F,
    pub straight_line_action: F,
    pub objective: F,
    pub dual: F,
}

fn chunk(v: &[f64], n: usize) -> Vec<Vec<f64>> {
    v.chunks(n).map(<[f64]>::to_vec).collect()
}

impl RunFile<Num> {
    pub fn from_coupling(map: MapKind, c: &ChainCoupling, straight_line: f64) -> Self {
        let grid = c.grid();
        let n = grid.n;
        let stats = path_statistics(c);
        let s = c.stats();
        RunFile {
            schema_version: SCHEMA_VERSION,
            map: map.name().to_string(),
            grid: RunGrid {
                n,
                steps: grid.steps,
                a: Num(grid.a),
                b: Num(grid.b),
            },
            schedule: nums(c.schedule()),
            eps: Num(c.eps()),
            plan: num_rows(&chunk(c.plan().as_slice(), n)),
            log_b: (1..grid.steps).map(|k| nums(c.log_b(k))).collect(),
            log_a: num_rows(&chunk(c.log_a(), n)),
            stats: RunStats {
                iterations: s.iterations,
                time_violation: Num(s.time_violation),
                pair_violation: Num(s.pair_violation),
                stages: s
                    .stages
                    .iter()
                    .map(|st| RunStage {
                        eps: Num(st.eps),
                        sweeps: st.sweeps,
                        newton_steps: st.newton_steps,
                        final_dual: Num(st.dual.last().copied().unwrap_or(f64::NAN)),
                        time_violation: Num(st.time_violation),
                        pair_violation: Num(st.pair_violation),
                    })
                    .collect(),
            },
            diagnostics: Diagnostics {
                action: Num(stats.action),
                straight_line_action: Num(straight_line),
                objective: Num(stats.objective),
                dual: Num(stats.dual),
            },
        }
    }
}

fn finite(v: Option<f64>, what: &str) -> CliResult<f64> {
    match v {
        Some(x) if x.is_finite() => Ok(x),
        _ => usage(format!("run file: {what} must be a finite number")),
    }
}

fn flatten(rows: &[Vec<Option<f64>>], n: usize, what: &str, missing: f64) -> CliResult<Vec<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return usage(format!("run file: {what} must be {n} rows of {n} entries"));
    }
    Ok(rows.iter().flatten().map(|v| v.unwrap_or(missing)).collect())
}

impl RunFile<Option<f64>> {
    pub fn into_coupling(self) -> CliResult<ChainCoupling> {
        if self.schema_version != SCHEMA_VERSION {
            return usage(format!(
                "run file has schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        let g = &self.grid;
        let grid = GridSpec::with_domain(g.n, g.steps, finite(g.a, "grid.a")?, finite(g.b, "grid.b")?)?;
        let plan = EndpointPlan::from_matrix(g.n, flatten(&self.plan, g.n, "plan", 0.0)?)?;
        let log_a = flatten(&self.log_a, g.n, "log_a", f64::NEG_INFINITY)?;
        let log_b = self
            .log_b
            .iter()
            .map(|row| row.iter().map(|v| finite(*v, "log_b")).collect())
            .collect::<CliResult<Vec<Vec<f64>>>>()?;
        let schedule = self
            .schedule
            .iter()
            .map(|v| finite(*v, "schedule"))
            .collect::<CliResult<Vec<f64>>>()?;
        let stats = SolveStats {
            iterations: self.stats.iterations,
            time_violation: finite(self.stats.time_violation, "stats.time_violation")?,
            pair_violation: finite(self.stats.pair_violation, "stats.pair_violation")?,
            stages: self
                .stats
                .stages
                .iter()
                .map(|s| {
                    Ok(StageLog {
                        eps: finite(s.eps, "stage eps")?,
                        sweeps: s.sweeps,
                        newton_steps: s.newton_steps,
                        dual: s.final_dual.into_iter().collect(),
                        time_violation: finite(s.time_violation, "stage violation")?,
                        pair_violation: finite(s.pair_violation, "stage violation")?,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?,
        };
        Ok(ChainCoupling::from_parts(
            grid,
            plan,
            finite(self.eps, "eps")?,
            schedule,
            log_b,
            log_a,
            stats,
        )?)
    }
}

pub fn read_run(path: &std::path::Path) -> CliResult<ChainCoupling> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let run: RunFile<Option<f64>> = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })?;
    run.into_coupling()
}

fn solver_config(a: &RelaxSolveArgs) -> SolverConfig {
    SolverConfig {
        eps_start: a.eps_start,
        eps_end: a.eps_end,
        eps_factor: a.eps_factor,
        max_iter: a.max_iter,
        tol_marg: a.tol_marg,
        order: match a.order {
            OrderArg::Forward => SweepOrder::Forward,
            OrderArg::Backward => SweepOrder::Backward,
        },
        init: match a.init_seed {
            Some(seed) => Init::Random { seed, amplitude: 1.0 },
            None => Init::Zero,
        },
        ..SolverConfig::default()
    }
}

pub fn solve(a: &RelaxSolveArgs, echo: &[String]) -> CliResult<()> {
    let grid = GridSpec::new(a.n, a.steps)?;
    let plan = plan_for(a.map, &grid)?;
    let cfg = solver_config(a);
    cfg.validate()?;
    let c = geolab_core::relaxed::solve(&grid, &plan, &cfg)?;
    let summary: RunSummary = run_summary(a.map, &c);
    let run = RunFile::from_coupling(a.map, &c, summary.straight_line_action.0);
    let mut text = serde_json::to_string_pretty(&run).expect("run file serializes");
    text.push('\n');
    write_file(&a.out, &text)?;
    let (tv, pv) = c.violations();
    let checks = vec![Check::at_most("relax.feasibility", tv.max(pv), a.tol_marg)];
    Report::new(echo, summary, checks).emit(None)
}

#[derive(Serialize)]
struct PressureData {
    out: String,
    calibration: Num,
    calibration_spread: Num,
    probe_calibrations: Vec<Num>,
    consistency_relative_residual: Num,
    reflection_asymmetry: Num,
    max_abs_phi: Num,
}

pub fn pressure(a: &RelaxPressureArgs, echo: &[String]) -> CliResult<()> {
    let c = read_run(&a.run)?;
    let p = recover_pressure(&c);
    let values = p.values();
    let rows = values.iter().enumerate().flat_map(|(k, row)| {
        let t = p.times[k];
        row.iter()
            .zip(&p.x)
            .map(move |(v, x)| vec![(k + 1).to_string(), fmt(t), fmt(*x), fmt(*v)])
    });
    write_csv(&a.out, &["k", "t_k", "x_i", "p"], rows)?;
    let consistency = acceleration_consistency(&c, &p, &default_battery(c.grid()));
    let data = PressureData {
        out: a.out.display().to_string(),
        calibration: Num(p.scale),
        calibration_spread: Num(p.scale_spread()),
        probe_calibrations: nums(&p.probe_scales),
        consistency_relative_residual: Num(consistency.relative),
        reflection_asymmetry: Num(p.reflection_asymmetry()),
        max_abs_phi: Num(p.max_abs()),
    };
    Report::new(echo, data, Vec::new()).emit(None)
}

pub fn probe(a: &RelaxProbeArgs, echo: &[String]) -> CliResult<()> {
    let tol = Tolerances::with_overrides(&a.tol)?;
    let grid = GridSpec::new(a.n, a.steps)?;
    let (data, check) = suite::probe(a.map, &grid, a.eps_end, a.seed, &tol, "relax.uniqueness_deviation")?;
    Report::new(echo, data, vec![check]).emit(a.out.as_deref())
}
