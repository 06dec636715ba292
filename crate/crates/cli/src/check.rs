//! Side-by-side comparison of the mixed-binary model and exhaustive search.

use isac_core::oracle::{exhaustive_solve, OracleResult};
use isac_core::{build_codebook, solve_joint, JointSolution, NormalizedScenario};
use milp::MilpSettings;

use crate::experiment::{check_allocation, ExperimentError};

/// Relative tolerance between the two optimal gains.
pub const OPTIMUM_TOLERANCE: f64 = 1e-6;

/// Gap used when the model is compared with enumeration.
pub const EXACT_GAP: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Comparison {
    pub oracle: OracleResult,
    pub milp: JointSolution,
}

impl Comparison {
    pub fn milp_tau(&self) -> Option<f64> {
        self.milp.allocation.as_ref().map(|a| a.tau)
    }

    /// Both infeasible, or both feasible with matching optima.
    pub fn agrees(&self) -> bool {
        match (self.oracle.tau, self.milp_tau()) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= OPTIMUM_TOLERANCE * a.abs().max(b.abs()),
            _ => false,
        }
    }
}

/// Solves `s` both ways. Allocations returned by either side are verified
/// against the original constraints.
pub fn compare(
    s: &NormalizedScenario,
    settings: &MilpSettings,
) -> Result<Comparison, ExperimentError> {
    let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas)?;
    let oracle = exhaustive_solve(s, &cb).map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    let milp = solve_joint(s, &cb, settings)?;
    for a in oracle.allocation.iter().chain(milp.allocation.iter()) {
        check_allocation(s, a).map_err(|detail| ExperimentError::Verification {
            method: crate::experiment::Method::Opt,
            sweep_value: f64::NAN,
            realization: 0,
            detail,
        })?;
    }
    Ok(Comparison { oracle, milp })
}

pub fn exact_settings() -> MilpSettings {
    MilpSettings::with_gap(EXACT_GAP)
}
