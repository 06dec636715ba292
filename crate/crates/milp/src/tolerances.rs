/// Numerical tolerances shared by the LP and the branch-and-bound layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bound violation (on row-equilibrated rows) accepted as feasible.
    pub primal_feasibility: f64,
    /// Wrong-signed reduced cost accepted at optimality.
    pub dual_feasibility: f64,
    /// Smallest pivot magnitude admitted by the ratio test.
    pub pivot: f64,
    /// Distance from {0, 1} below which a binary counts as integral.
    pub integrality: f64,
    /// Residual of `A x` above which the basis inverse is rebuilt.
    pub drift: f64,
    /// Magnitude of the cost perturbation used against dual degeneracy.
    /// Zero disables it.
    pub cost_perturbation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            primal_feasibility: 1e-9,
            dual_feasibility: 1e-9,
            pivot: 1e-7,
            integrality: 1e-6,
            drift: 1e-8,
            cost_perturbation: 1e-7,
        }
    }
}
