//! Maximal covering (MC) and partial covering (PC) network design.
//!
//! A network design selects nodes and edges to build; an origin/destination
//! pair counts as covered when the built network joins its endpoints by a
//! path no longer than the pair's utility. MC maximizes covered demand under
//! a budget, PC minimizes build cost subject to covering a fraction of the
//! demand. Both are solved exactly, either through a flow formulation or by
//! branch-and-Benders-cut with several cut families.

pub mod benders;
pub mod gen;
pub mod graph;
pub mod heuristics;
pub mod model;
pub mod preprocess;

#[cfg(test)]
mod testdata;

pub use covnet_lp::LpError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("invalid flow: {0}")]
    Flow(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("instance generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}
