//! Nonnegative boundary control of the 1D semilinear heat equation
//!
//! ```text
//! y_t - y_xx + f(t, x, y) = 0   on (0, T) x (0, 1)
//! y(t, 0) = u0(t),  y(t, 1) = u1(t),  y(0, x) = y0(x)
//! ```
//!
//! discretized by the explicit three-point scheme. The crate covers forward
//! simulation, the exact discrete adjoint, closed-form waiting-time bounds
//! with their adjoint certificates, steady-state continuation, constrained
//! steering and minimal-time estimation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod bounds;
pub mod control;
pub mod error;
pub mod export;
pub mod fdsolver;
pub mod mesh;
pub mod mintime;
pub mod nonlinearity;
pub mod steady;
pub mod synth;
pub mod trajectory;

pub use adjoint::{
    duality_residual, normal_derivative, objective_gradient, solve_adjoint, terminal_jacobian,
    AdjointTrajectory, BoundaryFlux, ObjectiveEval, Potential, SteeringObjective,
};
pub use bounds::{lower_bound, BoundCase, BoundResult, Certificate};
pub use control::BoundaryControl;
pub use error::{Error, Result};
pub use fdsolver::{simulate, SimOutcome};
pub use mesh::{make_meshes, Grid1D, Meshes, TimeGrid};
pub use mintime::{
    feasible, mass_sweep, min_time_bisection, MinTimeProblem, MinTimeResult, Profile,
};
pub use nonlinearity::{Nonlinearity, TableNonlinearity};
pub use steady::{build_path, solve_steady, SteadyPath, SteadyState};
pub use synth::{
    local_steer, stabilize_then_steer, staircase, StabilizeResult, StairOptions, StairResult,
    SteerOptions, SteerProblem, SteerResult,
};
pub use trajectory::Trajectory;
