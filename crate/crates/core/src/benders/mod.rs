//! Flow formulations, the Benders master, the cut families, and the
//! branch-and-Benders-cut driver.

mod formulation;
mod separation;
mod solver;

pub use formulation::{build_direct_model, build_master, DirectModel, Formulation, VarMap};
pub use separation::{
    separate_cutset, separate_cutset_first, separate_cw, separate_family, separate_norm1, separate_norm2,
    separate_norm3, separate_trd, BendersCut, CutFamily, Family, SEPARATION_TOL,
};
pub use solver::{solve, solve_branch_and_benders, solve_direct, Method, SolveOptions, SolveOutput};
