//! Nonlinear stage solves: Picard iteration around a Schur-complement
//! pressure system, with GMRES for the linear solves.

mod gmres;
mod picard;

pub use gmres::{gmres, GmresConfig, GmresStats};
pub use picard::{
    coupled_residual, schur_operator, solve_stage, solve_stage_r1, solve_stage_r2, PicardConfig, StageProblem,
    StageSolution, Strategy,
};
