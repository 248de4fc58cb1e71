//! Solver library for the gray radiative transfer equations in the
//! spherical-harmonics (P_N) moment formulation.
//!
//! The time integrators split each moment equation into a stiff part
//! (relaxation and the coupling to lower-degree moments) treated
//! implicitly and a non-stiff part (coupling to higher-degree moments)
//! treated explicitly. Because the implicit data is always available
//! when the degrees are swept in ascending order, every step costs the
//! same as an explicit one, and the scheme degenerates to an explicit
//! five-point stencil for the nonlinear diffusion equation when the
//! Knudsen number goes to zero. That limit stencil is implemented
//! separately in [`diffusion`] and doubles as a reference solver.
//!
//! Modules follow the pipeline: [`harmonics`] builds the angular
//! operators, [`discretization`] provides the finite-volume machinery,
//! [`physics`] the material models, [`integrator`] the time steppers,
//! [`scenario`] + [`runner`] the benchmark problems and orchestration,
//! and [`diagnostics`] / [`output`] the observers and writers.

pub mod diagnostics;
pub mod diffusion;
pub mod discretization;
pub mod error;
pub mod harmonics;
pub mod integrator;
pub mod output;
pub(crate) mod par;
pub mod physics;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
pub use harmonics::{Geometry, MomentBasis, PnOperator};
pub use physics::PhysicalConstants;
pub use scenario::Scenario;
