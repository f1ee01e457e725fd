//! Entropic relaxation of the minimizing-geodesic problem on a 1D grid.
//!
//! A discrete generalized flow is a law on grid paths (i₀, …, i_T) whose
//! interior time marginals are uniform and whose (i₀, i_T) marginal is a
//! prescribed doubly stochastic plan. The entropic problem is solved by
//! iterative scaling in log space; pressures are read off the dual potentials
//! of the time-marginal constraints.

mod analysis;
mod direct;
mod logspace;
mod newton;
mod plan;
mod solver;

pub use analysis::{
    acceleration_consistency, approx_geodesic_report, compare_gradients, default_battery,
    dual_potentials, path_statistics, pearson, recover_pressure, self_similar_action,
    straight_line_action, uniqueness_probe, ApproxGeodesicReport, ConsistencyReport,
    PathStatistics, PressureGrid, Probe, ProbeTerms, UniquenessReport,
};
pub use direct::{direct_solve, DirectSolution, DIRECT_MAX_CELLS};
pub use plan::{discretize_map, EndpointPlan, GridSpec};
pub use solver::{
    solve, ChainCoupling, Init, Messages, SolveStats, SolverConfig, StageLog, SweepOrder,
};
