//! A small, self-contained mixed-binary linear programming engine.
//!
//! Models are built with [`MilpModel`] (maximization, finite variable
//! bounds, binary or continuous variables). LP relaxations are solved with a
//! bounded-variable dual simplex over a sparse product-form basis inverse
//! ([`DualSimplex`]), and [`solve_milp`] runs best-bound branch-and-bound on
//! top of it.

mod bnb;
mod error;
mod factor;
mod lp;
pub mod lp_format;
mod model;
mod tolerances;

pub use bnb::{
    solve_milp, solve_milp_with, CutGenerator, MilpSettings, NoCuts, NoopMonitor, SearchMonitor,
    SolveReport, SolveStatus,
};
pub use error::{LpError, ModelError};
pub use lp::{solve_lp, DualSimplex, LpSolution, LpStatus};
pub use model::{Constraint, MilpModel, Sense, VarId, VarKind, Variable};
pub use tolerances::Tolerances;
