//! Steady states, folds and stability of 1D heterogeneous reaction-diffusion
//! systems.
//!
//! The heterogeneity enters through an amplitude `θ`: `θ = 0` is the
//! homogeneous problem with a uniform steady state, and the base state is the
//! branch obtained by continuing that state in `θ`.

pub mod banded;
pub mod continuation;
pub mod discretization;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod newton;
pub mod problem;
pub mod quadrature;
pub mod stability;

pub use discretization::{assemble_jacobian, residual, AssembledJacobian, Discretization};
pub use error::{Error, Result};
pub use grid::{Grid1D, StateVector};
pub use model::{HeterogeneityProfile, Kinetics, ModelSpec};
pub use newton::{newton_solve, NewtonOutcome, NewtonSettings};
pub use problem::{ActiveParam, RdProblem, ScalarFold, SteadyProblem};
