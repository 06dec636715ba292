//! Joint user/target scheduling, user-target pairing and low-resolution
//! phase-only beamforming for integrated sensing and communication.
//!
//! The allocation problem is written as an exact mixed-binary linear program
//! ([`reformulation`]), solved with the in-repo `milp` engine, checked
//! against brute-force enumeration ([`oracle`]) and an independent
//! evaluation of the original nonlinear constraints ([`evaluator`]), and
//! compared with four stage-wise heuristics ([`baselines`]).

pub mod baselines;
pub mod codebook;
pub mod error;
pub mod evaluator;
pub mod linalg;
pub mod oracle;
pub mod reformulation;
pub mod scenario;

pub use baselines::{run_baseline, BaselineKind, BaselineOutcome, FixedAssignment};
pub use codebook::{build_codebook, PhaseCodebook};
pub use error::{
    BaselineError, BuildError, CodebookError, DecodeError, OracleError, ScenarioError, SolveError,
};
pub use linalg::{CMatrix, C64};
pub use reformulation::{
    build_milp, decode_solution, encode_allocation, solve_joint, Allocation, JointSolution,
    VariableIndex,
};
pub use scenario::{load_scenario, NormalizedScenario, Scenario, ScenarioTemplate};
