use thiserror::Error;

use crate::synth::SteerResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("CFL condition violated: 2*dt = {two_dt:e} exceeds dx^2 = {dx_sq:e}")]
    CflViolation { two_dt: f64, dx_sq: f64 },

    #[error("incompatible data: {0}")]
    IncompatibleData(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("state exceeded the blow-up cap at time step {step}")]
    BlowUp { step: usize },

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(
        "stair-case refinement exhausted on segment {segment} after {levels} levels \
         (deviation {deviation:e} against floor {floor:e})"
    )]
    RefinementExhausted {
        segment: usize,
        levels: usize,
        deviation: f64,
        floor: f64,
    },

    #[error("stabilize-then-steer needs a larger horizon: final deviation {deviation:e} >= floor {floor:e}")]
    HorizonTooShort { deviation: f64, floor: f64 },

    #[error(
        "could not bracket the minimal time: feasible({lo:e}) = {lo_feasible}, feasible({hi:e}) = {hi_feasible}"
    )]
    BracketFailure {
        lo: f64,
        hi: f64,
        lo_feasible: bool,
        hi_feasible: bool,
        lo_result: Box<Option<SteerResult>>,
        hi_result: Box<Option<SteerResult>>,
    },
}

impl Error {
    /// True for failures of an iterative solver, as opposed to rejected input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::RefinementExhausted { .. }
                | Error::BracketFailure { .. }
                | Error::HorizonTooShort { .. }
                | Error::DegenerateFit(_)
                | Error::BlowUp { .. }
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
