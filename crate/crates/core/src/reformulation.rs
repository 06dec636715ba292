//! Exact mixed-binary linear model of joint scheduling, pairing and
//! phase-only beamforming, and decoding of its solutions.
//!
//! Beam covariances `W_u = w_u w_uᴴ` are represented through their upper
//! triangle only (diagonal, real and imaginary parts above it), stored
//! divided by the symbol power `δ²` so that every covariance variable lies in
//! `[-1, 1]`. The rank-one structure is enforced through one-hot selectors
//! `x_{u,n,l}` and their pairwise products `Y_{u,n,m}`, which are kept
//! continuous because the row/column-sum coupling makes them integral
//! whenever the selectors are.

use std::ops::Range;

use milp::{
    solve_milp_with, MilpModel, MilpSettings, NoCuts, SearchMonitor, Sense, SolveReport, VarId,
};

use crate::codebook::PhaseCodebook;
use crate::error::{BuildError, DecodeError, SolveError};
use crate::linalg::{CMatrix, C64};
use crate::scenario::NormalizedScenario;

/// Constraint groups in the order they are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowFamily {
    UserCount,
    TargetCount,
    TargetPairing,
    UserPairing,
    OneHot,
    Sinr,
    DiagonalTie,
    CovarianceLink,
    SelectorCoupling,
    Dpg,
    ProductLinearization,
    CrossInterference,
}

/// Position of every model variable, plus the row ranges of each family.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableIndex {
    users: usize,
    antennas: usize,
    symbols: usize,
    targets: usize,
    rf_chains: usize,
    sched_targets: usize,
    symbol_power: f64,
    mu0: usize,
    lambda0: usize,
    rho0: usize,
    pi0: usize,
    tau: usize,
    x0: usize,
    w_diag0: usize,
    w_re0: usize,
    w_im0: usize,
    y0: usize,
    total: usize,
    rows: Vec<(RowFamily, Range<usize>)>,
}

impl VariableIndex {
    fn new(
        users: usize,
        antennas: usize,
        symbols: usize,
        targets: usize,
        rf_chains: usize,
        sched_targets: usize,
        symbol_power: f64,
    ) -> Self {
        let pairs = antennas * antennas.saturating_sub(1) / 2;
        let mu0 = 0;
        let lambda0 = mu0 + users;
        let rho0 = lambda0 + targets;
        let pi0 = rho0 + users * targets;
        let tau = pi0 + targets * targets.saturating_sub(1);
        let x0 = tau + 1;
        let w_diag0 = x0 + users * antennas * symbols;
        let w_re0 = w_diag0 + users * antennas;
        let w_im0 = w_re0 + users * pairs;
        let y0 = w_im0 + users * pairs;
        let total = y0 + users * pairs * symbols * symbols;
        Self {
            users,
            antennas,
            symbols,
            targets,
            rf_chains,
            sched_targets,
            symbol_power,
            mu0,
            lambda0,
            rho0,
            pi0,
            tau,
            x0,
            w_diag0,
            w_re0,
            w_im0,
            y0,
            total,
            rows: Vec::new(),
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }
    pub fn antennas(&self) -> usize {
        self.antennas
    }
    pub fn symbols(&self) -> usize {
        self.symbols
    }
    pub fn targets(&self) -> usize {
        self.targets
    }
    pub fn rf_chains(&self) -> usize {
        self.rf_chains
    }
    pub fn sched_targets(&self) -> usize {
        self.sched_targets
    }
    /// Factor `δ²` between covariance variables and covariance entries.
    pub fn symbol_power(&self) -> f64 {
        self.symbol_power
    }
    pub fn num_vars(&self) -> usize {
        self.total
    }

    /// Index of the antenna pair `n < m` in the upper triangle.
    pub fn pair(&self, n: usize, m: usize) -> usize {
        debug_assert!(n < m && m < self.antennas);
        n * (2 * self.antennas - n - 1) / 2 + (m - n - 1)
    }

    fn num_pairs(&self) -> usize {
        self.antennas * self.antennas.saturating_sub(1) / 2
    }

    pub fn mu(&self, u: usize) -> VarId {
        VarId(self.mu0 + u)
    }
    pub fn lambda(&self, t: usize) -> VarId {
        VarId(self.lambda0 + t)
    }
    pub fn rho(&self, u: usize, t: usize) -> VarId {
        VarId(self.rho0 + u * self.targets + t)
    }
    /// Product of the scheduling indicators of targets `t != q`.
    pub fn pi(&self, t: usize, q: usize) -> VarId {
        debug_assert!(t != q);
        let col = if q < t { q } else { q - 1 };
        VarId(self.pi0 + t * (self.targets - 1) + col)
    }
    pub fn tau(&self) -> VarId {
        VarId(self.tau)
    }
    pub fn x(&self, u: usize, n: usize, l: usize) -> VarId {
        VarId(self.x0 + (u * self.antennas + n) * self.symbols + l)
    }
    pub fn w_diag(&self, u: usize, n: usize) -> VarId {
        VarId(self.w_diag0 + u * self.antennas + n)
    }
    pub fn w_re(&self, u: usize, n: usize, m: usize) -> VarId {
        VarId(self.w_re0 + u * self.num_pairs() + self.pair(n, m))
    }
    pub fn w_im(&self, u: usize, n: usize, m: usize) -> VarId {
        VarId(self.w_im0 + u * self.num_pairs() + self.pair(n, m))
    }
    /// Product of selector `l` on antenna `n` and selector `i` on antenna `m`.
    pub fn y(&self, u: usize, n: usize, m: usize, l: usize, i: usize) -> VarId {
        let block = u * self.num_pairs() + self.pair(n, m);
        VarId(self.y0 + (block * self.symbols + l) * self.symbols + i)
    }

    /// All selector-product variables.
    pub fn y_range(&self) -> Range<usize> {
        self.y0..self.total
    }

    pub fn rows(&self, family: RowFamily) -> Range<usize> {
        self.rows
            .iter()
            .find(|(f, _)| *f == family)
            .map(|(_, r)| r.clone())
            .unwrap_or(0..0)
    }

    pub fn row_families(&self) -> &[(RowFamily, Range<usize>)] {
        &self.rows
    }
}

/// Closed-form variable count for `U` users, `N` antennas, `L` symbols and
/// `T` targets.
pub fn expected_variable_count(
    users: usize,
    antennas: usize,
    symbols: usize,
    targets: usize,
) -> usize {
    let pairs = antennas * antennas.saturating_sub(1) / 2;
    users
        + targets
        + users * targets
        + targets * targets.saturating_sub(1)
        + 1
        + users * antennas * symbols
        + users * antennas
        + 2 * users * pairs
        + users * pairs * symbols * symbols
}

/// Closed-form constraint count.
pub fn expected_constraint_count(
    users: usize,
    antennas: usize,
    symbols: usize,
    targets: usize,
) -> usize {
    let ordered = antennas * antennas.saturating_sub(1);
    let target_pairs = targets * targets.saturating_sub(1);
    2 + targets
        + users
        + users * antennas
        + users
        + users * antennas
        + users * ordered
        + users * ordered * symbols
        + users * targets
        + 3 * target_pairs
        + users * target_pairs
}

/// Bound on the SINR row when the user is not scheduled: total beam power
/// times the channel gain, plus one.
pub fn big_m_sinr(s: &NormalizedScenario, u: usize) -> f64 {
    s.tx_power * s.channel_grams[u].trace().re + 1.0
}

/// Largest gain any single beam of power `P/K` can direct at target `t`.
pub fn big_m_dpg(s: &NormalizedScenario, t: usize) -> f64 {
    s.tx_power / s.n_rf_chains as f64 * s.target_grams[t].trace().re
}

/// Slack used in the gain rows of target `t`. It must cover `τ` when the
/// row is relaxed: with `t` scheduled `τ ≤ D̄_t`, and with both indicators
/// off the slack is doubled and `τ ≤ max D̄`.
pub fn big_m_dpg_link(s: &NormalizedScenario, t: usize) -> f64 {
    let max_all = (0..s.n_targets)
        .map(|q| big_m_dpg(s, q))
        .fold(0.0, f64::max);
    big_m_dpg(s, t).max(0.5 * max_all)
}

/// Slack used in the cross-interference rows of the pair `(t, q)`; the leaked
/// power onto `q` never exceeds `D̄_q`.
pub fn big_m_cross(s: &NormalizedScenario, t: usize, q: usize) -> f64 {
    big_m_dpg(s, t).max(big_m_dpg(s, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Pin the first antenna of every beam to the first symbol. Rotating a
    /// beam by a codebook phase leaves its covariance unchanged, so this
    /// removes equivalent solutions without changing the optimum.
    pub break_phase_symmetry: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            break_phase_symmetry: true,
        }
    }
}

pub fn build_milp(
    s: &NormalizedScenario,
    cb: &PhaseCodebook,
) -> Result<(MilpModel, VariableIndex), BuildError> {
    build_milp_with(s, cb, BuildOptions::default())
}

/// Real linear form of `scale · Tr(A W_u)` over the covariance variables.
fn trace_form(
    idx: &VariableIndex,
    u: usize,
    a: &CMatrix,
    scale: f64,
) -> Result<Vec<(VarId, f64)>, BuildError> {
    let n = idx.antennas;
    let f = scale * idx.symbol_power;
    let mut terms = Vec::with_capacity(n * n);
    let mut residual: f64 = 0.0;
    let mut magnitude: f64 = 0.0;
    for k in 0..n {
        let akk = a.get(k, k);
        residual = residual.max(akk.im.abs());
        magnitude = magnitude.max(akk.norm());
        terms.push((idx.w_diag(u, k), f * akk.re));
    }
    for k in 0..n {
        for m in k + 1..n {
            let (amk, akm) = (a.get(m, k), a.get(k, m));
            // A_mk W_km + A_km conj(W_km) split over Re W_km and Im W_km.
            let on_re = amk + akm;
            let on_im = (amk - akm) * C64::new(0.0, 1.0);
            residual = residual.max(on_re.im.abs()).max(on_im.im.abs());
            magnitude = magnitude.max(amk.norm());
            terms.push((idx.w_re(u, k, m), f * on_re.re));
            terms.push((idx.w_im(u, k, m), f * on_im.re));
        }
    }
    if residual > 1e-12 * magnitude.max(f64::MIN_POSITIVE) {
        return Err(BuildError::NonHermitian(residual));
    }
    Ok(terms)
}

pub fn build_milp_with(
    s: &NormalizedScenario,
    cb: &PhaseCodebook,
    options: BuildOptions,
) -> Result<(MilpModel, VariableIndex), BuildError> {
    let (uu, nn, tt) = (s.n_users, s.n_antennas, s.n_targets);
    let (kk, jj) = (s.n_rf_chains, s.n_sched_targets);
    let ll = cb.size();
    if ll != 1usize << s.phase_bits {
        return Err(BuildError::Dimension(format!(
            "codebook has {ll} symbols, scenario asks for {} phase bits",
            s.phase_bits
        )));
    }
    let expected_delta = (s.tx_power / (kk * nn) as f64).sqrt();
    if (cb.magnitude() - expected_delta).abs() > 1e-12 * expected_delta {
        return Err(BuildError::Dimension(
            "codebook magnitude does not match P/(K N)".into(),
        ));
    }
    if jj > kk.min(tt) {
        return Err(BuildError::TooManyTargets {
            scheduled: jj,
            limit: kk.min(tt),
        });
    }
    if kk > uu || s.channels.len() != uu || s.target_grams.len() != tt {
        return Err(BuildError::Dimension(
            "user/target counts are inconsistent".into(),
        ));
    }
    if s.channels.iter().any(|h| h.len() != nn) {
        return Err(BuildError::Dimension(
            "channel length differs from antenna count".into(),
        ));
    }

    let delta_sq = cb.magnitude() * cb.magnitude();
    let mut idx = VariableIndex::new(uu, nn, ll, tt, kk, jj, delta_sq);
    let mut m = MilpModel::new();
    let tau_max = (0..tt).map(|t| big_m_dpg(s, t)).fold(0.0, f64::max);

    // Scheduling and pairing decisions are branched on before beam entries.
    for u in 0..uu {
        let v = m.add_binary(format!("mu[{u}]"));
        m.set_priority(v, 1);
    }
    for t in 0..tt {
        let v = m.add_binary(format!("lambda[{t}]"));
        m.set_priority(v, 1);
    }
    for u in 0..uu {
        for t in 0..tt {
            let v = m.add_binary(format!("rho[{u},{t}]"));
            m.set_priority(v, 1);
        }
    }
    for t in 0..tt {
        for q in (0..tt).filter(|&q| q != t) {
            m.add_continuous(format!("pi[{t},{q}]"), 0.0, 1.0);
        }
    }
    m.add_continuous("tau", 0.0, tau_max);
    for u in 0..uu {
        for n in 0..nn {
            for l in 0..ll {
                let v = m.add_binary(format!("x[{u},{n},{l}]"));
                if options.break_phase_symmetry && n == 0 && l > 0 {
                    m.set_bounds(v, 0.0, 0.0);
                }
            }
        }
    }
    for u in 0..uu {
        for n in 0..nn {
            m.add_continuous(format!("wd[{u},{n}]"), 0.0, 1.0);
        }
    }
    for part in ["wr", "wi"] {
        for u in 0..uu {
            for n in 0..nn {
                for k in n + 1..nn {
                    m.add_continuous(format!("{part}[{u},{n},{k}]"), -1.0, 1.0);
                }
            }
        }
    }
    for u in 0..uu {
        for n in 0..nn {
            for k in n + 1..nn {
                for l in 0..ll {
                    for i in 0..ll {
                        m.add_continuous(format!("y[{u},{n},{k},{l},{i}]"), 0.0, 1.0);
                    }
                }
            }
        }
    }
    debug_assert_eq!(m.num_vars(), idx.total);

    let family = |m: &MilpModel, idx: &mut VariableIndex, f: RowFamily, start: usize| {
        idx.rows.push((f, start..m.num_constraints()));
    };

    let start = m.num_constraints();
    m.add_constraint(
        "users",
        (0..uu).map(|u| (idx.mu(u), 1.0)),
        Sense::Eq,
        kk as f64,
    );
    family(&m, &mut idx, RowFamily::UserCount, start);

    let start = m.num_constraints();
    m.add_constraint(
        "targets",
        (0..tt).map(|t| (idx.lambda(t), 1.0)),
        Sense::Eq,
        jj as f64,
    );
    family(&m, &mut idx, RowFamily::TargetCount, start);

    let start = m.num_constraints();
    for t in 0..tt {
        let terms = (0..uu)
            .map(|u| (idx.rho(u, t), 1.0))
            .chain([(idx.lambda(t), -1.0)]);
        m.add_constraint(format!("paired[{t}]"), terms, Sense::Eq, 0.0);
    }
    family(&m, &mut idx, RowFamily::TargetPairing, start);

    let start = m.num_constraints();
    for u in 0..uu {
        let terms = (0..tt)
            .map(|t| (idx.rho(u, t), 1.0))
            .chain([(idx.mu(u), -1.0)]);
        m.add_constraint(format!("serves[{u}]"), terms, Sense::Le, 0.0);
    }
    family(&m, &mut idx, RowFamily::UserPairing, start);

    let start = m.num_constraints();
    for u in 0..uu {
        for n in 0..nn {
            let terms = (0..ll)
                .map(|l| (idx.x(u, n, l), 1.0))
                .chain([(idx.mu(u), -1.0)]);
            m.add_constraint(format!("onehot[{u},{n}]"), terms, Sense::Eq, 0.0);
        }
    }
    family(&m, &mut idx, RowFamily::OneHot, start);

    let start = m.num_constraints();
    for u in 0..uu {
        let b = big_m_sinr(s, u);
        let gram = &s.channel_grams[u];
        let mut terms = Vec::new();
        for i in 0..uu {
            let scale = if i == u {
                -1.0 / s.sinr_thresholds[u]
            } else {
                1.0
            };
            terms.extend(trace_form(&idx, i, gram, scale)?);
        }
        terms.push((idx.mu(u), b));
        m.add_constraint(format!("sinr[{u}]"), terms, Sense::Le, b - 1.0);
    }
    family(&m, &mut idx, RowFamily::Sinr, start);

    let start = m.num_constraints();
    for u in 0..uu {
        for n in 0..nn {
            m.add_constraint(
                format!("diag[{u},{n}]"),
                [(idx.w_diag(u, n), 1.0), (idx.mu(u), -1.0)],
                Sense::Eq,
                0.0,
            );
        }
    }
    family(&m, &mut idx, RowFamily::DiagonalTie, start);

    let start = m.num_constraints();
    for u in 0..uu {
        for n in 0..nn {
            for k in n + 1..nn {
                // W_nk = Σ_{l,i} s_l conj(s_i) Y_li, divided by δ².
                let mut re = vec![(idx.w_re(u, n, k), 1.0)];
                let mut im = vec![(idx.w_im(u, n, k), 1.0)];
                for l in 0..ll {
                    for i in 0..ll {
                        let c = cb.gram(i, l) / delta_sq;
                        let y = idx.y(u, n, k, l, i);
                        re.push((y, -snap(c.re)));
                        im.push((y, -snap(c.im)));
                    }
                }
                m.add_constraint(format!("wre[{u},{n},{k}]"), re, Sense::Eq, 0.0);
                m.add_constraint(format!("wim[{u},{n},{k}]"), im, Sense::Eq, 0.0);
            }
        }
    }
    family(&m, &mut idx, RowFamily::CovarianceLink, start);

    let start = m.num_constraints();
    for u in 0..uu {
        for n in 0..nn {
            for k in n + 1..nn {
                for i in 0..ll {
                    let terms = (0..ll)
                        .map(|l| (idx.y(u, n, k, l, i), 1.0))
                        .chain([(idx.x(u, k, i), -1.0)]);
                    m.add_constraint(format!("ycol[{u},{n},{k},{i}]"), terms, Sense::Eq, 0.0);
                }
                for l in 0..ll {
                    let terms = (0..ll)
                        .map(|i| (idx.y(u, n, k, l, i), 1.0))
                        .chain([(idx.x(u, n, l), -1.0)]);
                    m.add_constraint(format!("yrow[{u},{n},{k},{l}]"), terms, Sense::Eq, 0.0);
                }
            }
        }
    }
    family(&m, &mut idx, RowFamily::SelectorCoupling, start);

    let start = m.num_constraints();
    for u in 0..uu {
        for t in 0..tt {
            let big = big_m_dpg_link(s, t);
            let mut terms = trace_form(&idx, u, &s.target_grams[t], -1.0)?;
            terms.push((idx.tau(), 1.0));
            terms.push((idx.lambda(t), big));
            terms.push((idx.rho(u, t), big));
            m.add_constraint(format!("gain[{u},{t}]"), terms, Sense::Le, 2.0 * big);
        }
    }
    family(&m, &mut idx, RowFamily::Dpg, start);

    let start = m.num_constraints();
    for t in 0..tt {
        for q in (0..tt).filter(|&q| q != t) {
            let p = idx.pi(t, q);
            m.add_constraint(
                format!("pi_le_t[{t},{q}]"),
                [(p, 1.0), (idx.lambda(t), -1.0)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("pi_le_q[{t},{q}]"),
                [(p, 1.0), (idx.lambda(q), -1.0)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("pi_ge[{t},{q}]"),
                [(p, 1.0), (idx.lambda(t), -1.0), (idx.lambda(q), -1.0)],
                Sense::Ge,
                -1.0,
            );
        }
    }
    family(&m, &mut idx, RowFamily::ProductLinearization, start);

    let start = m.num_constraints();
    for u in 0..uu {
        for t in 0..tt {
            for q in (0..tt).filter(|&q| q != t) {
                let big = big_m_cross(s, t, q);
                let mut terms = trace_form(&idx, u, &s.target_grams[q], 1.0)?;
                terms.push((idx.pi(t, q), big));
                terms.push((idx.rho(u, t), big));
                m.add_constraint(
                    format!("cross[{u},{t},{q}]"),
                    terms,
                    Sense::Le,
                    s.cross_interference_threshold + 2.0 * big,
                );
            }
        }
    }
    family(&m, &mut idx, RowFamily::CrossInterference, start);

    m.set_objective([(idx.tau(), 1.0)]);
    Ok((m, idx))
}

/// Clears rounding noise in unit-modulus coefficients.
fn snap(v: f64) -> f64 {
    if v.abs() < 1e-14 {
        0.0
    } else {
        v
    }
}

/// Schedule, pairing and beams of a single channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub scheduled_users: Vec<usize>,
    pub scheduled_targets: Vec<usize>,
    /// `(target, user)` pairs sorted by target.
    pub pairing: Vec<(usize, usize)>,
    /// One beam per user; all-zero for unscheduled users.
    pub beams: Vec<Vec<C64>>,
    pub tau: f64,
}

impl Allocation {
    pub fn user_of_target(&self, t: usize) -> Option<usize> {
        self.pairing.iter().find(|p| p.0 == t).map(|p| p.1)
    }

    /// Beam illuminating target `t`, if the target is paired.
    pub fn target_beam(&self, t: usize) -> Option<&[C64]> {
        self.user_of_target(t).map(|u| self.beams[u].as_slice())
    }
}

/// Turns an integer-feasible primal vector into an allocation and checks
/// that the beams reproduce the solved covariances.
pub fn decode_solution(
    values: &[f64],
    idx: &VariableIndex,
    cb: &PhaseCodebook,
) -> Result<Allocation, DecodeError> {
    if values.len() != idx.total {
        return Err(DecodeError::Length {
            got: values.len(),
            expected: idx.total,
        });
    }
    let on = |v: VarId| values[v.0] >= 0.5;
    let scheduled_users: Vec<usize> = (0..idx.users).filter(|&u| on(idx.mu(u))).collect();
    if scheduled_users.len() != idx.rf_chains {
        return Err(DecodeError::UserCount(scheduled_users.len(), idx.rf_chains));
    }
    let scheduled_targets: Vec<usize> = (0..idx.targets).filter(|&t| on(idx.lambda(t))).collect();
    if scheduled_targets.len() != idx.sched_targets {
        return Err(DecodeError::TargetCount(
            scheduled_targets.len(),
            idx.sched_targets,
        ));
    }
    let mut pairing = Vec::new();
    for t in 0..idx.targets {
        let users: Vec<usize> = (0..idx.users).filter(|&u| on(idx.rho(u, t))).collect();
        let expected = usize::from(on(idx.lambda(t)));
        if users.len() != expected {
            return Err(DecodeError::Pairing {
                target: t,
                count: users.len(),
            });
        }
        if let Some(&u) = users.first() {
            pairing.push((t, u));
        }
    }
    let mut beams = vec![vec![C64::new(0.0, 0.0); idx.antennas]; idx.users];
    for u in 0..idx.users {
        for n in 0..idx.antennas {
            let selector: Vec<bool> = (0..idx.symbols).map(|l| on(idx.x(u, n, l))).collect();
            let entry = cb
                .decode_entry(&selector)
                .map_err(|e| DecodeError::Selector {
                    user: u,
                    antenna: n,
                    reason: e.to_string(),
                })?;
            let active = selector.iter().any(|&b| b);
            if active != on(idx.mu(u)) {
                return Err(DecodeError::Selector {
                    user: u,
                    antenna: n,
                    reason: "selector activity disagrees with scheduling".into(),
                });
            }
            beams[u][n] = entry;
        }
        let d2 = idx.symbol_power;
        let mut worst: f64 = 0.0;
        for n in 0..idx.antennas {
            worst = worst.max((beams[u][n].norm_sqr() / d2 - values[idx.w_diag(u, n).0]).abs());
            for k in n + 1..idx.antennas {
                let w = beams[u][n] * beams[u][k].conj() / d2;
                worst = worst.max((w.re - values[idx.w_re(u, n, k).0]).abs());
                worst = worst.max((w.im - values[idx.w_im(u, n, k).0]).abs());
            }
        }
        if worst > 1e-6 {
            return Err(DecodeError::Covariance {
                user: u,
                error: worst,
            });
        }
    }
    Ok(Allocation {
        scheduled_users,
        scheduled_targets,
        pairing,
        beams,
        tau: values[idx.tau().0],
    })
}

/// Lifts an allocation whose beams are drawn from `cb` into a primal vector
/// of the model. Each beam is first rotated so that its first entry is the
/// reference symbol, which leaves every gain unchanged.
pub fn encode_allocation(
    a: &Allocation,
    idx: &VariableIndex,
    cb: &PhaseCodebook,
) -> Result<Vec<f64>, DecodeError> {
    let mut values = vec![0.0; idx.total];
    let mut set = |v: VarId, x: f64| values[v.0] = x;
    for &u in &a.scheduled_users {
        set(idx.mu(u), 1.0);
    }
    for &t in &a.scheduled_targets {
        set(idx.lambda(t), 1.0);
    }
    for &(t, u) in &a.pairing {
        set(idx.rho(u, t), 1.0);
    }
    for t in 0..idx.targets {
        for q in (0..idx.targets).filter(|&q| q != t) {
            let both = a.scheduled_targets.contains(&t) && a.scheduled_targets.contains(&q);
            set(idx.pi(t, q), if both { 1.0 } else { 0.0 });
        }
    }
    set(idx.tau(), a.tau);
    let d2 = idx.symbol_power;
    let tol = 1e-6 * cb.magnitude();
    for &u in &a.scheduled_users {
        let beam = canonical_phase(&a.beams[u], cb);
        let mut symbol = Vec::with_capacity(idx.antennas);
        for n in 0..idx.antennas {
            let l = cb
                .index_of(beam[n], tol)
                .ok_or_else(|| DecodeError::Selector {
                    user: u,
                    antenna: n,
                    reason: "entry is not a codebook symbol".into(),
                })?;
            symbol.push(l);
            set(idx.x(u, n, l), 1.0);
            set(idx.w_diag(u, n), 1.0);
        }
        for n in 0..idx.antennas {
            for k in n + 1..idx.antennas {
                let w = beam[n] * beam[k].conj() / d2;
                set(idx.w_re(u, n, k), w.re);
                set(idx.w_im(u, n, k), w.im);
                set(idx.y(u, n, k, symbol[n], symbol[k]), 1.0);
            }
        }
    }
    Ok(values)
}

fn canonical_phase(beam: &[C64], cb: &PhaseCodebook) -> Vec<C64> {
    match beam.first() {
        Some(&b0) if b0.norm() > 0.0 => {
            let turn = cb.symbol(0) / b0;
            beam.iter().map(|&b| b * turn).collect()
        }
        _ => beam.to_vec(),
    }
}

/// Records how far the selector products are from integrality at every
/// incumbent the search accepts.
#[derive(Debug, Clone)]
pub struct ProductIntegrality {
    range: Range<usize>,
    pub incumbents: usize,
    pub worst_deviation: f64,
}

impl ProductIntegrality {
    pub fn new(idx: &VariableIndex) -> Self {
        Self {
            range: idx.y_range(),
            incumbents: 0,
            worst_deviation: 0.0,
        }
    }
}

impl SearchMonitor for ProductIntegrality {
    fn on_incumbent(&mut self, values: &[f64], _objective: f64) {
        self.incumbents += 1;
        for &y in &values[self.range.clone()] {
            self.worst_deviation = self.worst_deviation.max(y.min((1.0 - y).abs()).abs());
        }
    }
}

/// Result of solving the joint model or a restricted version of it.
#[derive(Debug, Clone)]
pub struct JointSolution {
    pub report: SolveReport,
    /// `None` when infeasible, when no incumbent was found, or when the best
    /// objective is zero (a strictly positive gain is required).
    pub allocation: Option<Allocation>,
    /// Largest distance of a selector product from {0, 1} over all incumbents.
    pub product_deviation: f64,
    pub incumbents: usize,
}

/// Relative level below which an optimal gain counts as zero.
pub const ZERO_GAIN: f64 = 1e-9;

/// Fixes the scheduled users, and optionally the scheduled targets and the
/// pairing, of a model produced by [`build_milp`].
pub fn restrict(
    model: &mut MilpModel,
    idx: &VariableIndex,
    users: &[usize],
    pairing: Option<&[(usize, usize)]>,
) {
    for u in 0..idx.users {
        let v = if users.contains(&u) { 1.0 } else { 0.0 };
        model.fix(idx.mu(u), v);
    }
    if let Some(pairs) = pairing {
        for t in 0..idx.targets {
            let paired = pairs.iter().any(|p| p.0 == t);
            model.fix(idx.lambda(t), if paired { 1.0 } else { 0.0 });
            for u in 0..idx.users {
                let on = pairs.contains(&(t, u));
                model.fix(idx.rho(u, t), if on { 1.0 } else { 0.0 });
            }
        }
    }
}

/// Solves a model built by [`build_milp`] (possibly restricted) and decodes
/// the incumbent.
pub fn solve_model(
    model: &MilpModel,
    idx: &VariableIndex,
    cb: &PhaseCodebook,
    settings: &MilpSettings,
) -> Result<JointSolution, SolveError> {
    let mut monitor = ProductIntegrality::new(idx);
    let report = solve_milp_with(model, settings, &mut NoCuts, &mut monitor)?;
    let tau_max = model.var(idx.tau()).upper;
    let allocation = match (&report.values, report.objective) {
        (Some(values), Some(obj)) if obj > ZERO_GAIN * tau_max => {
            Some(decode_solution(values, idx, cb)?)
        }
        _ => None,
    };
    Ok(JointSolution {
        report,
        allocation,
        product_deviation: monitor.worst_deviation,
        incumbents: monitor.incumbents,
    })
}

/// Builds and solves the joint scheduling, pairing and beamforming problem.
pub fn solve_joint(
    s: &NormalizedScenario,
    cb: &PhaseCodebook,
    settings: &MilpSettings,
) -> Result<JointSolution, SolveError> {
    let (model, idx) = build_milp(s, cb)?;
    solve_model(&model, &idx, cb, settings)
}
