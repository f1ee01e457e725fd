//! Numerical laboratory for minimizing geodesics of incompressible flows.
//!
//! - [`rigid_body`]: geodesics on SO(3) and their multipliers, embedded as
//!   ellipsoid flows with quadratic pressure.
//! - [`self_similar`]: the explicit generalized geodesic with pressure
//!   −(t^{4/3} − x₁²)₊/(9t²) and its second variation.
//! - [`hydrostatic`]: the stream function, velocity and particle flow that
//!   realize it as a hydrostatic Euler solution.
//! - [`relaxed`]: a discrete entropic generalized-flow solver with pressure
//!   recovery.

pub mod error;
pub mod hydrostatic;
pub mod quadrature;
pub mod relaxed;
pub mod rigid_body;
pub mod self_similar;

pub use error::{Error, Result};
pub use hydrostatic::{HydroField, ParticlePath, Region, Stepper};
pub use relaxed::{ChainCoupling, EndpointPlan, GridSpec, PressureGrid, SolverConfig};
pub use rigid_body::{InertiaSpec, MultiplierPath, QuadraticPressure, RotationPath};
pub use self_similar::{DomainSpec, Perturbation, SelfSimilarField, Trajectory};
