use crate::error::LpError;
use crate::factor::BasisFactor;
use crate::model::{MilpModel, Sense, VarId};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value (maximization); meaningless when infeasible.
    pub objective: f64,
    /// Structural variable values; meaningless when infeasible.
    pub values: Vec<f64>,
    /// Row duals in the model's own sign convention (non-negative on `<=`
    /// rows, non-positive on `>=` rows for a maximization).
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// Solves the LP relaxation of `model` (integrality dropped).
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution, LpError> {
    solve_lp_with(model, Tolerances::default())
}

pub fn solve_lp_with(model: &MilpModel, tol: Tolerances) -> Result<LpSolution, LpError> {
    let mut lp = DualSimplex::new(model, tol)?;
    let status = lp.solve()?;
    Ok(LpSolution {
        status,
        objective: lp.objective(),
        values: lp.values().to_vec(),
        duals: lp.duals(),
        iterations: lp.iterations(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

/// Basis status of every variable, for restarting a later solve from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSnapshot {
    states: Vec<State>,
}

const NOT_BASIC: usize = usize::MAX;
/// Consecutive dual-degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 400;
const DRIFT_CHECK_INTERVAL: usize = 100;
/// Basis updates kept in product form before refactoring.
const REFACTOR_INTERVAL: usize = 100;
/// Pivot magnitude below which a basis column counts as dependent.
const SINGULAR_PIVOT: f64 = 1e-11;
/// Pivot threshold used once the regular one left rows without a pivot.
const RELAXED_PIVOT: f64 = 1e-11;

/// Bounded-variable dual simplex over a product-form basis inverse.
///
/// Every row `i` gets a logical variable `z_i = -a_i x`, so the basis starts
/// as the identity. Rows are equilibrated so that their largest coefficient
/// is one. All variables, logicals included, are kept boxed: the free side of
/// an inequality row is closed at the row's activity range implied by the
/// structural bounds, which any feasible point satisfies anyway. With every
/// variable boxed, any basis can be made dual feasible by moving nonbasic
/// variables to the bound matching their reduced-cost sign, so the solver
/// never needs a primal phase and re-solves after bound changes start from
/// the previous basis.
#[derive(Debug, Clone)]
pub struct DualSimplex {
    m: usize,
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_scale: Vec<f64>,
    obj: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    factor: BasisFactor,
    basis: Vec<usize>,
    pos: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    d: Vec<f64>,
    tol: Tolerances,
    alpha_row: Vec<f64>,
    touched: Vec<usize>,
    is_touched: Vec<bool>,
    alpha_col: Vec<f64>,
    rho: Vec<f64>,
    rho_nz: Vec<usize>,
    iterations: usize,
    pivots_since_check: usize,
    pivots_since_invert: usize,
    repairs: usize,
    skipped: Vec<usize>,
    relaxed: bool,
}

impl DualSimplex {
    pub fn new(model: &MilpModel, tol: Tolerances) -> Result<Self, LpError> {
        model.validate()?;
        let n = model.num_vars();
        let root_lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
        let root_upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
        let mut obj = vec![0.0; n];
        for &(v, c) in model.objective() {
            obj[v.0] += c;
        }
        let mut lp = Self {
            m: 0,
            n,
            rows: Vec::new(),
            row_start: vec![0],
            row_col: Vec::new(),
            row_val: Vec::new(),
            col_start: vec![0; n + 1],
            col_row: Vec::new(),
            col_val: Vec::new(),
            row_scale: Vec::new(),
            cost: obj.iter().map(|c| -c).collect(),
            obj,
            lower: root_lower.clone(),
            upper: root_upper.clone(),
            root_lower,
            root_upper,
            factor: BasisFactor::default(),
            basis: Vec::new(),
            pos: vec![NOT_BASIC; n],
            state: vec![State::Lower; n],
            x: vec![0.0; n],
            d: vec![0.0; n],
            tol,
            alpha_row: vec![0.0; n],
            touched: Vec::new(),
            is_touched: vec![false; n],
            alpha_col: Vec::new(),
            rho: Vec::new(),
            rho_nz: Vec::new(),
            iterations: 0,
            pivots_since_check: 0,
            pivots_since_invert: 0,
            repairs: 0,
            skipped: Vec::new(),
            relaxed: false,
        };
        for j in 0..n {
            lp.state[j] = if lp.cost[j] >= 0.0 {
                State::Lower
            } else {
                State::Upper
            };
        }
        let rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = model
            .constraints()
            .iter()
            .map(|c| {
                (
                    c.terms.iter().map(|&(v, a)| (v.0, a)).collect(),
                    c.sense,
                    c.rhs,
                )
            })
            .collect();
        lp.append_rows(rows);
        Ok(lp)
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Basis columns replaced by logicals during reinversion so far.
    pub fn basis_repairs(&self) -> usize {
        self.repairs
    }

    /// Structural variable values of the current basic solution.
    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        self.obj.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Tightens (or restores) the bounds of a structural variable. Bounds must
    /// stay inside those of the model the solver was built from.
    pub fn set_var_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let j = var.0;
        debug_assert!(lower >= self.root_lower[j] - 1e-12 && upper <= self.root_upper[j] + 1e-12);
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            states: self.state.clone(),
        }
    }

    /// Makes a previously saved basis current. Rows appended after the
    /// snapshot was taken keep their logicals basic.
    pub fn restore(&mut self, snap: &BasisSnapshot) {
        let total = self.n + self.m;
        let mut states = snap.states.clone();
        states.resize(total, State::Basic);
        let basis: Vec<usize> = (0..total).filter(|&j| states[j] == State::Basic).collect();
        if basis.len() != self.m {
            return;
        }
        for (j, &st) in states.iter().enumerate() {
            self.state[j] = st;
            self.pos[j] = NOT_BASIC;
            if st != State::Basic {
                self.x[j] = if st == State::Lower {
                    self.lower[j]
                } else {
                    self.upper[j]
                };
            }
        }
        for (i, &v) in basis.iter().enumerate() {
            self.pos[v] = i;
        }
        self.basis = basis;
        self.reinvert();
    }

    /// Restores every structural bound to the model's original bounds.
    pub fn reset_bounds(&mut self) {
        self.lower[..self.n].copy_from_slice(&self.root_lower);
        self.upper[..self.n].copy_from_slice(&self.root_upper);
    }

    /// Appends a row to the LP. The current basis is extended with the new
    /// row's logical variable, so it stays dual feasible.
    pub fn add_row(&mut self, terms: &[(VarId, f64)], sense: Sense, rhs: f64) {
        let terms = terms.iter().map(|&(v, a)| (v.0, a)).collect();
        self.append_rows(vec![(terms, sense, rhs)]);
    }

    fn append_rows(&mut self, new_rows: Vec<(Vec<(usize, f64)>, Sense, f64)>) {
        let old_m = self.m;
        let added = new_rows.len();
        if added == 0 {
            return;
        }
        let m = old_m + added;
        for (offset, (terms, sense, rhs)) in new_rows.into_iter().enumerate() {
            let i = old_m + offset;
            let scale = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
            let scale = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            let scaled: Vec<(usize, f64)> = terms.iter().map(|&(j, a)| (j, a * scale)).collect();
            let b = rhs * scale;
            let (mut rmin, mut rmax) = (0.0, 0.0);
            for &(j, a) in &scaled {
                let (lo, hi) = (self.root_lower[j] * a, self.root_upper[j] * a);
                rmin += lo.min(hi);
                rmax += lo.max(hi);
            }
            let (act_lo, act_hi) = match sense {
                Sense::Le => ((rmin - 1.0).min(b), b),
                Sense::Ge => (b, (rmax + 1.0).max(b)),
                Sense::Eq => (b, b),
            };
            let activity: f64 = scaled.iter().map(|&(j, a)| a * self.x[j]).sum();
            self.rows.push(scaled);
            self.row_scale.push(scale);
            self.lower.push(-act_hi);
            self.upper.push(-act_lo);
            self.cost.push(0.0);
            self.x.push(-activity);
            self.d.push(0.0);
            self.state.push(State::Basic);
            self.pos.push(i);
            self.basis.push(self.n + i);
            self.alpha_row.push(0.0);
            self.is_touched.push(false);
        }
        self.m = m;
        self.alpha_col = vec![0.0; m];
        self.rebuild_sparse();
        self.reinvert();
    }

    fn rebuild_sparse(&mut self) {
        let (m, n) = (self.m, self.n);
        self.row_start.clear();
        self.row_col.clear();
        self.row_val.clear();
        self.row_start.push(0);
        let mut counts = vec![0usize; n];
        for row in &self.rows {
            for &(j, a) in row {
                self.row_col.push(j);
                self.row_val.push(a);
                counts[j] += 1;
            }
            self.row_start.push(self.row_col.len());
        }
        self.col_start = vec![0; n + 1];
        for j in 0..n {
            self.col_start[j + 1] = self.col_start[j] + counts[j];
        }
        let nnz = self.col_start[n];
        self.col_row = vec![0; nnz];
        self.col_val = vec![0.0; nnz];
        let mut fill = self.col_start[..n].to_vec();
        for i in 0..m {
            for &(j, a) in &self.rows[i] {
                self.col_row[fill[j]] = i;
                self.col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }
    }

    /// Row duals of the current basis in the model's sign convention.
    pub fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self
            .basis
            .iter()
            .map(|&v| -self.obj.get(v).copied().unwrap_or(0.0))
            .collect();
        self.factor.btran(&mut y);
        y.iter()
            .zip(&self.row_scale)
            .map(|(yk, s)| -yk * s)
            .collect()
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let xj = self.x[j];
        (self.lower[j] - xj).max(xj - self.upper[j])
    }

    /// Recomputes basic values from the nonbasic ones.
    fn compute_primal(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut v = vec![0.0; m];
        for j in 0..n {
            if self.state[j] != State::Basic {
                let xj = self.x[j];
                if xj != 0.0 {
                    for p in self.col_start[j]..self.col_start[j + 1] {
                        v[self.col_row[p]] += self.col_val[p] * xj;
                    }
                }
            }
        }
        for k in 0..m {
            if self.state[n + k] != State::Basic {
                v[k] += self.x[n + k];
            }
        }
        self.factor.ftran(&mut v);
        for i in 0..m {
            self.x[self.basis[i]] = -v[i];
        }
    }

    fn compute_duals(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut y: Vec<f64> = self.basis.iter().map(|&v| self.cost[v]).collect();
        self.factor.btran(&mut y);
        for j in 0..n {
            if self.state[j] == State::Basic {
                self.d[j] = 0.0;
            } else {
                let mut dj = self.cost[j];
                for p in self.col_start[j]..self.col_start[j + 1] {
                    dj -= y[self.col_row[p]] * self.col_val[p];
                }
                self.d[j] = dj;
            }
        }
        for k in 0..m {
            self.d[n + k] = if self.state[n + k] == State::Basic {
                0.0
            } else {
                self.cost[n + k] - y[k]
            };
        }
    }

    /// Places nonbasic variables on the bound that keeps them dual feasible.
    /// Returns true if any variable moved.
    fn place_nonbasics(&mut self) -> bool {
        let tol = self.tol.dual_feasibility;
        let mut moved = false;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if st == State::Basic {
                continue;
            }
            let new_state = if self.is_fixed(j) {
                State::Lower
            } else if st == State::Lower && self.d[j] < -tol {
                State::Upper
            } else if st == State::Upper && self.d[j] > tol {
                State::Lower
            } else {
                st
            };
            let val = if new_state == State::Lower {
                self.lower[j]
            } else {
                self.upper[j]
            };
            if new_state != st || self.x[j] != val {
                moved = true;
            }
            self.state[j] = new_state;
            self.x[j] = val;
        }
        moved
    }

    fn perturb_costs(&mut self) {
        let eps = self.tol.cost_perturbation;
        if eps <= 0.0 {
            return;
        }
        for j in 0..self.n {
            if self.state[j] == State::Basic || self.is_fixed(j) {
                continue;
            }
            // Deterministic spread in [eps, 2 eps).
            let frac = ((j as f64) * 0.618_033_988_749_895).fract();
            let e = eps * (1.0 + frac) * (1.0 + self.cost[j].abs());
            match self.state[j] {
                State::Lower => self.cost[j] += e,
                State::Upper => self.cost[j] -= e,
                State::Basic => {}
            }
        }
    }

    fn restore_costs(&mut self) {
        for j in 0..self.n {
            self.cost[j] = -self.obj[j];
        }
        for j in self.n..self.n + self.m {
            self.cost[j] = 0.0;
        }
    }

    fn max_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.m {
            let mut r = self.x[self.n + i];
            for p in self.row_start[i]..self.row_start[i + 1] {
                r += self.row_val[p] * self.x[self.row_col[p]];
            }
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Refactors the basis from scratch. Linearly dependent basic columns
    /// are swapped for logicals and moved to their nearer bound.
    fn reinvert(&mut self) {
        let n = self.n;
        let (col_start, col_row, col_val) = (&self.col_start, &self.col_row, &self.col_val);
        let out = self.factor.refactor(
            self.m,
            &self.basis,
            |v| (v >= n).then(|| v - n),
            |row| n + row,
            |v, col| {
                for p in col_start[v]..col_start[v + 1] {
                    col.push((col_row[p], col_val[p]));
                }
            },
            SINGULAR_PIVOT,
        );
        for &v in &out.dropped {
            self.state[v] = if self.x[v] - self.lower[v] <= self.upper[v] - self.x[v] {
                State::Lower
            } else {
                State::Upper
            };
            self.x[v] = if self.state[v] == State::Lower {
                self.lower[v]
            } else {
                self.upper[v]
            };
            self.pos[v] = NOT_BASIC;
            self.repairs += 1;
        }
        for (i, &v) in out.basis.iter().enumerate() {
            self.state[v] = State::Basic;
            self.pos[v] = i;
        }
        self.basis = out.basis;
        self.pivots_since_invert = 0;
    }

    fn refresh(&mut self) {
        self.compute_duals();
        if self.place_nonbasics() {
            // fallthrough: basic values depend on the new nonbasic positions
        }
        self.compute_primal();
    }

    /// Runs the dual simplex from the current basis under the current bounds.
    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        for j in 0..self.n + self.m {
            if self.lower[j] > self.upper[j] {
                return Ok(LpStatus::Infeasible);
            }
        }
        let limit = 50_000 + 20 * (self.n + self.m);
        let mut local_iters = 0usize;
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut retried_infeasible = false;
        let mut verified_once = false;
        let mut retried_skips = false;
        self.skipped.clear();
        self.relaxed = false;

        self.restore_costs();
        self.compute_duals();
        self.place_nonbasics();
        let mut perturbed = false;
        if self.tol.cost_perturbation > 0.0 {
            self.perturb_costs();
            self.compute_duals();
            self.place_nonbasics();
            perturbed = true;
        }
        self.compute_primal();

        loop {
            if local_iters >= limit {
                return Err(LpError::IterationLimit {
                    iterations: local_iters,
                });
            }
            if self.pivots_since_check >= DRIFT_CHECK_INTERVAL {
                self.pivots_since_check = 0;
                if self.max_residual() > self.tol.drift {
                    self.reinvert();
                    self.refresh();
                }
            }
            let leaving = self.choose_leaving(bland);
            let Some(r) = leaving else {
                if !self.skipped.is_empty() {
                    // Every infeasible row lacked a usable pivot.
                    self.skipped.clear();
                    if !retried_skips {
                        retried_skips = true;
                        self.reinvert();
                        self.refresh();
                    } else if !self.relaxed {
                        self.relaxed = true;
                    } else {
                        return Err(LpError::Numerical(
                            "no acceptable pivot for an infeasible row".into(),
                        ));
                    }
                    continue;
                }
                if perturbed {
                    perturbed = false;
                    self.restore_costs();
                    self.compute_duals();
                    if self.place_nonbasics() {
                        self.compute_primal();
                        continue;
                    }
                }
                // Candidate optimum: verify against freshly recomputed values.
                if self.pivots_since_invert > 0
                    && (!verified_once || self.max_residual() > self.tol.drift)
                {
                    verified_once = true;
                    if self.max_residual() > self.tol.drift {
                        self.reinvert();
                    }
                    self.refresh();
                    if self.choose_leaving(false).is_some() {
                        continue;
                    }
                }
                return Ok(LpStatus::Optimal);
            };
            match self.pivot(r, bland)? {
                PivotOutcome::Done { degenerate: deg } => {
                    self.skipped.clear();
                    local_iters += 1;
                    self.iterations += 1;
                    self.pivots_since_check += 1;
                    self.pivots_since_invert += 1;
                    if self.factor.updates() >= REFACTOR_INTERVAL {
                        self.reinvert();
                        self.refresh();
                    }
                    if deg {
                        degenerate += 1;
                        if degenerate > DEGENERATE_LIMIT {
                            bland = true;
                        }
                    } else {
                        degenerate = 0;
                    }
                }
                PivotOutcome::Unstable => {
                    self.reinvert();
                    self.refresh();
                    local_iters += 1;
                }
                PivotOutcome::Skip => {
                    self.skipped.push(r);
                }
                PivotOutcome::NoEntering => {
                    if !retried_infeasible && self.pivots_since_invert > 0 {
                        retried_infeasible = true;
                        self.reinvert();
                        self.refresh();
                        continue;
                    }
                    return Ok(LpStatus::Infeasible);
                }
            }
        }
    }

    /// True when no point of the nonbasic box brings basic `p` back to the
    /// violated bound, using the pivot row left in `alpha_row`.
    fn row_cannot_recover(&self, p: usize, to_lower: bool) -> bool {
        // x_p = -Σ alpha_j x_j over nonbasic j.
        let (mut lo, mut hi) = (0.0, 0.0);
        for &j in &self.touched {
            let a = self.alpha_row[j];
            let (u, v) = (-a * self.lower[j], -a * self.upper[j]);
            lo += u.min(v);
            hi += u.max(v);
        }
        if to_lower {
            let target = self.lower[p];
            hi < target - self.tol.primal_feasibility * target.abs().max(1.0)
        } else {
            let target = self.upper[p];
            lo > target + self.tol.primal_feasibility * target.abs().max(1.0)
        }
    }

    fn choose_leaving(&self, bland: bool) -> Option<usize> {
        let tol = self.tol.primal_feasibility;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let var = self.basis[i];
            let inf = self.infeasibility(var);
            if inf <= tol || self.skipped.contains(&i) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bv)) => {
                    if bland {
                        var < self.basis[bi]
                    } else {
                        inf > bv
                    }
                }
            };
            if better {
                best = Some((i, inf));
            }
        }
        best.map(|b| b.0)
    }

    fn pivot(&mut self, r: usize, bland: bool) -> Result<PivotOutcome, LpError> {
        let (m, n) = (self.m, self.n);
        let p = self.basis[r];
        let xp = self.x[p];
        let (delta, to_lower) = if xp < self.lower[p] {
            (xp - self.lower[p], true)
        } else {
            (xp - self.upper[p], false)
        };

        // Row r of the basis inverse and the pivot row over nonbasic columns.
        self.rho.iter_mut().for_each(|v| *v = 0.0);
        self.rho.resize(m, 0.0);
        self.rho[r] = 1.0;
        self.factor.btran(&mut self.rho);
        self.rho_nz.clear();
        for k in 0..m {
            if self.rho[k] != 0.0 {
                self.rho_nz.push(k);
            }
        }
        for &j in &self.touched {
            self.alpha_row[j] = 0.0;
            self.is_touched[j] = false;
        }
        self.touched.clear();
        for &k in &self.rho_nz {
            let rk = self.rho[k];
            for q in self.row_start[k]..self.row_start[k + 1] {
                let j = self.row_col[q];
                if self.state[j] == State::Basic {
                    continue;
                }
                if !self.is_touched[j] {
                    self.is_touched[j] = true;
                    self.touched.push(j);
                }
                self.alpha_row[j] += rk * self.row_val[q];
            }
            let lj = n + k;
            if self.state[lj] != State::Basic {
                if !self.is_touched[lj] {
                    self.is_touched[lj] = true;
                    self.touched.push(lj);
                }
                self.alpha_row[lj] += rk;
            }
        }

        // Ratio test (Harris two-pass, Bland fallback).
        let s = delta.signum();
        let ptol = if self.relaxed {
            RELAXED_PIVOT
        } else {
            self.tol.pivot
        };
        let dtol = self.tol.dual_feasibility;
        let eligible = |st: State, a: f64| match st {
            State::Lower => s * a > ptol,
            State::Upper => s * a < -ptol,
            State::Basic => false,
        };
        let slack = |st: State, dj: f64| if st == State::Lower { dj } else { -dj };
        let mut entering: Option<usize> = None;
        if bland {
            let mut best_ratio = f64::INFINITY;
            for &j in &self.touched {
                let a = self.alpha_row[j];
                if self.is_fixed(j) || !eligible(self.state[j], a) {
                    continue;
                }
                let ratio = slack(self.state[j], self.d[j]).max(0.0) / a.abs();
                let better = match entering {
                    None => true,
                    Some(e) => ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && j < e),
                };
                if better {
                    best_ratio = ratio;
                    entering = Some(j);
                }
            }
        } else {
            let mut theta_max = f64::INFINITY;
            for &j in &self.touched {
                let a = self.alpha_row[j];
                if self.is_fixed(j) || !eligible(self.state[j], a) {
                    continue;
                }
                let ratio = (slack(self.state[j], self.d[j]) + dtol) / a.abs();
                if ratio < theta_max {
                    theta_max = ratio;
                }
            }
            let mut best_abs = 0.0;
            for &j in &self.touched {
                let a = self.alpha_row[j];
                if self.is_fixed(j) || !eligible(self.state[j], a) {
                    continue;
                }
                let ratio = slack(self.state[j], self.d[j]).max(0.0) / a.abs();
                if ratio <= theta_max
                    && (a.abs() > best_abs || (a.abs() == best_abs && Some(j) < entering))
                {
                    best_abs = a.abs();
                    entering = Some(j);
                }
            }
        }
        let Some(q) = entering else {
            return Ok(if self.row_cannot_recover(p, to_lower) {
                PivotOutcome::NoEntering
            } else {
                PivotOutcome::Skip
            });
        };

        // Entering column through the basis inverse.
        self.alpha_col.iter_mut().for_each(|v| *v = 0.0);
        if q < n {
            for t in self.col_start[q]..self.col_start[q + 1] {
                self.alpha_col[self.col_row[t]] = self.col_val[t];
            }
        } else {
            self.alpha_col[q - n] = 1.0;
        }
        self.factor.ftran(&mut self.alpha_col);
        let arq = self.alpha_col[r];
        if (arq - self.alpha_row[q]).abs() > 1e-7 * (1.0 + arq.abs()) || arq.abs() < ptol {
            return Ok(PivotOutcome::Unstable);
        }

        // Dual update.
        let dq = self.d[q];
        let wrong_sign = match self.state[q] {
            State::Lower => dq < 0.0,
            State::Upper => dq > 0.0,
            State::Basic => false,
        };
        let theta_d = if wrong_sign { 0.0 } else { dq / arq };
        if theta_d != 0.0 {
            for &j in &self.touched {
                self.d[j] -= theta_d * self.alpha_row[j];
            }
        }
        self.d[q] = 0.0;
        self.d[p] = -theta_d;

        // Primal update.
        let step = delta / arq;
        self.x[q] += step;
        for i in 0..m {
            let a = self.alpha_col[i];
            if a != 0.0 {
                let var = self.basis[i];
                self.x[var] -= a * step;
            }
        }
        self.x[p] = if to_lower {
            self.lower[p]
        } else {
            self.upper[p]
        };

        // Basis change.
        self.state[p] = if to_lower { State::Lower } else { State::Upper };
        self.pos[p] = NOT_BASIC;
        self.basis[r] = q;
        self.state[q] = State::Basic;
        self.pos[q] = r;

        self.factor.update(r, &self.alpha_col);
        Ok(PivotOutcome::Done {
            degenerate: theta_d.abs() < 1e-12,
        })
    }
}

enum PivotOutcome {
    Done {
        degenerate: bool,
    },
    Unstable,
    /// Only tiny pivots are available for this row.
    Skip,
    /// The row proves the LP infeasible.
    NoEntering,
}
