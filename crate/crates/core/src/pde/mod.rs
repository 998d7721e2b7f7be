//! Finite-difference solvers for the parabolic systems that generate the drift-removing
//! transformations.

pub mod grid;
pub mod linear;
pub mod solve;

pub use grid::{gradient_and_hessian, GridFunction, SpaceTimeGrid, SpatialGrid};
pub use solve::{
    boundary_sensitivity, solve_backward_system, solve_resolvent_system, PdeSolutionReport, RESIDUAL_TOL,
    STATIONARY_TOL,
};
