//! Linear and mixed-binary programming for the covering solvers: a bounded
//! revised simplex with certificates, and a branch-and-cut driver with lazy
//! constraint callbacks.

mod certificate;
mod factor;
mod mip;
mod problem;
mod simplex;

pub use certificate::{dual_objective, farkas_margin, is_improving_ray};
pub use mip::{
    mip_solve, set_incumbent_start, Callbacks, MipOptions, MipProblem, MipResult, MipStatus, NoCallbacks, StartStatus,
    Verdict,
};
pub use problem::{LpProblem, Row, RowSense, Sense};
pub use simplex::{lp_solve, Basis, LpOutcome, LpSolution, Simplex, FEAS_TOL, OPT_TOL, PIVOT_TOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit reached")]
    IterationLimit,
    #[error("time limit reached")]
    TimeLimit,
}
