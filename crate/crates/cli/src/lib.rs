//! `geolab` command line: experiments on the four computational modules and
//! the acceptance suite, with JSON reports and CSV field data.

pub mod commands;
pub mod error;
pub mod format;
pub mod report;
pub mod suite;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{usage, CliError, CliResult};
use crate::suite::Scale;

pub use crate::error::CliError as Error;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "geolab", version, about = "Numerical laboratory for minimizing geodesics of incompressible flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rigid-body geodesics on SO(3).
    #[command(subcommand)]
    Rigid(RigidCommand),
    /// The explicit self-similar generalized geodesic.
    #[command(subcommand)]
    Selfsim(SelfsimCommand),
    /// The hydrostatic realization of the self-similar flow.
    #[command(subcommand)]
    Hydro(HydroCommand),
    /// Entropic relaxed solver.
    #[command(subcommand)]
    Relax(RelaxCommand),
    /// Run the acceptance suite.
    VerifyAll(VerifyAllArgs),
}

#[derive(Debug, Subcommand)]
pub enum RigidCommand {
    /// Integrate a geodesic and write U, B and M along it as CSV.
    Simulate(RigidSimulateArgs),
    /// Test the constant-speed rotation pair by ±π about an axis.
    Theorem2(RigidTheorem2Args),
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct RigidSimulateArgs {
    /// Diagonal of K as k1,k2,k3.
    #[arg(long, value_parser = parse_vec3)]
    pub inertia: [f64; 3],
    /// Initial body angular velocity w1,w2,w3.
    #[arg(long, value_parser = parse_vec3)]
    pub omega0: [f64; 3],
    /// Output intervals on [0, 1].
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct RigidTheorem2Args {
    /// Diagonal of K as k1,k2,k3.
    #[arg(long, value_parser = parse_vec3)]
    pub inertia: [f64; 3],
    /// Rotation axis a1,a2,a3; normalized before use.
    #[arg(long, value_parser = parse_vec3)]
    pub axis: [f64; 3],
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a check tolerance, NAME=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum SelfsimCommand {
    /// Volume identity, ODE residual order, second variation and Dirac weights.
    Verify(SelfsimVerifyArgs),
    /// Sample g₁, p and ∂₁p at one time as CSV.
    Field(SelfsimFieldArgs),
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct SelfsimVerifyArgs {
    /// Domain half width; the still region is sampled up to max(L, 1.5).
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    /// First node of the trajectory grids.
    #[arg(long, default_value_t = 1e-3)]
    pub tmin: f64,
    /// Intervals of the coarsest trajectory grid.
    #[arg(long, default_value_t = 400)]
    pub steps: usize,
    /// Perturbations per region.
    #[arg(long, default_value_t = 100)]
    pub perturbations: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a check tolerance, NAME=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct SelfsimFieldArgs {
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Samples are spread over [−L, L].
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum HydroCommand {
    /// Trace one particle through the hydrostatic flow.
    Trace(HydroTraceArgs),
    /// Continuity, divergence, tracer, weak residual and reconstruction checks.
    Verify(HydroVerifyArgs),
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct HydroTraceArgs {
    /// Seed point x1,x2,x3.
    #[arg(long, value_parser = parse_vec3)]
    pub x: [f64; 3],
    /// Start time, or `auto` for |x1|^{3/2}.
    #[arg(long, default_value = "auto")]
    pub t0: String,
    #[arg(long, default_value_t = 1.0)]
    pub t1: f64,
    /// Fixed RK4 step relative to the current time.
    #[arg(long, default_value_t = 1e-3, conflicts_with = "adaptive_tol")]
    pub dt: f64,
    /// Use adaptive RK4 with this local error per unit time.
    #[arg(long)]
    pub adaptive_tol: Option<f64>,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct HydroVerifyArgs {
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a check tolerance, NAME=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum RelaxCommand {
    /// Solve the entropic problem and store the potentials.
    Solve(RelaxSolveArgs),
    /// Recover the pressure from a stored run as CSV.
    Pressure(RelaxPressureArgs),
    /// Compare pressure gradients of two solver configurations.
    ProbeUniqueness(RelaxProbeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MapKind {
    Flip,
    Identity,
    Selfsim,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Flip => "flip",
            MapKind::Identity => "identity",
            MapKind::Selfsim => "selfsim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OrderArg {
    Forward,
    Backward,
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct RelaxSolveArgs {
    #[arg(long, value_enum)]
    pub map: MapKind,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 16)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps_start: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_end: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps_factor: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_marg: f64,
    #[arg(long, value_enum, default_value_t = OrderArg::Forward)]
    pub order: OrderArg,
    /// Random initial potentials from this seed instead of zeros.
    #[arg(long)]
    pub init_seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct RelaxPressureArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct RelaxProbeArgs {
    #[arg(long, value_enum)]
    pub map: MapKind,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 16)]
    pub steps: usize,
    /// ε endpoint of the first configuration; the second uses 1.25 times it.
    #[arg(long, default_value_t = 1e-3)]
    pub eps_end: f64,
    /// Seed of the random start of the second configuration.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a check tolerance, NAME=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Debug, Args)]
#[command(rename_all = "kebab-case")]
pub struct VerifyAllArgs {
    /// Reduced problem sizes.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Run only these criteria (1 to 5).
    #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=5))]
    pub criteria: Vec<u8>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a check tolerance, NAME=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

impl VerifyAllArgs {
    pub fn scale(&self) -> Scale {
        if self.quick {
            Scale::Quick
        } else {
            Scale::Full
        }
    }
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got '{s}'"));
    }
    let mut out = [0.0_f64; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .trim()
            .parse()
            .map_err(|_| format!("'{p}' is not a number"))?;
        if !o.is_finite() {
            return Err(format!("'{p}' is not finite"));
        }
    }
    Ok(out)
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("GEOLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = match value.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => return usage(format!("GEOLAB_THREADS must be a positive integer, got '{value}'")),
    };
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on failed checks or numerical failure,
/// 2 on usage errors.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut echo = vec!["geolab".to_string()];
    echo.extend(argv.iter().skip(1).cloned());
    match configure_threads().and_then(|()| dispatch(cli.command, &echo)) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::ChecksFailed(names) => {
                    eprintln!("geolab: {} check(s) failed:", names.len());
                    for n in names {
                        eprintln!("  {n}");
                    }
                }
                other => eprintln!("geolab: {other}"),
            }
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, echo: &[String]) -> CliResult<()> {
    use commands::*;
    match command {
        Command::Rigid(RigidCommand::Simulate(a)) => rigid::simulate(&a, echo),
        Command::Rigid(RigidCommand::Theorem2(a)) => rigid::theorem2(&a, echo),
        Command::Selfsim(SelfsimCommand::Verify(a)) => selfsim::verify(&a, echo),
        Command::Selfsim(SelfsimCommand::Field(a)) => selfsim::field(&a, echo),
        Command::Hydro(HydroCommand::Trace(a)) => hydro::trace(&a, echo),
        Command::Hydro(HydroCommand::Verify(a)) => hydro::verify(&a, echo),
        Command::Relax(RelaxCommand::Solve(a)) => relax::solve(&a, echo),
        Command::Relax(RelaxCommand::Pressure(a)) => relax::pressure(&a, echo),
        Command::Relax(RelaxCommand::ProbeUniqueness(a)) => relax::probe(&a, echo),
        Command::VerifyAll(a) => verify_all::run(&a, echo),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_parse_from_comma_lists() {
        assert_eq!(parse_vec3("1,2.5,-3").unwrap(), [1.0, 2.5, -3.0]);
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("1,x,3").is_err());
        assert!(parse_vec3("1,inf,3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["geolab", "relax", "solve", "--bogus"]), 2);
        assert_eq!(run(["geolab", "verify-all", "--criterion", "7"]), 2);
        assert_eq!(run(["geolab", "hydro", "verify", "--tol", "nonsense=1"]), 2);
        assert_eq!(run(["geolab", "hydro", "verify", "--tol", "hydro.continuity=-1"]), 2);
    }
}
