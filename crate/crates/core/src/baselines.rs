//! Heuristic scheduling and pairing rules, each followed by an exact
//! beam design on the restricted linear model.

use std::fmt;
use std::str::FromStr;

use milp::MilpSettings;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codebook::PhaseCodebook;
use crate::error::BaselineError;
use crate::linalg::{inner, norm_sqr, C64};
use crate::oracle::combinations;
use crate::reformulation::{build_milp, restrict, solve_model, JointSolution};
use crate::scenario::{steering_vector, NormalizedScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    /// Pair first by alignment matching, then schedule around the pairs.
    Bl1,
    /// Schedule the least correlated users, then match targets to them.
    Bl2,
    /// Random users; targets, pairing and beams optimized.
    Bl3,
    /// Random users, targets and pairing; beams optimized.
    Bl4,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [Self::Bl1, Self::Bl2, Self::Bl3, Self::Bl4];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bl1 => "BL1",
            Self::Bl2 => "BL2",
            Self::Bl3 => "BL3",
            Self::Bl4 => "BL4",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Self::Bl1 => 1,
            Self::Bl2 => 2,
            Self::Bl3 => 3,
            Self::Bl4 => 4,
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown baseline `{s}`"))
    }
}

/// Independent random stream for `kind` derived from an experiment seed.
pub fn baseline_rng(seed: u64, kind: BaselineKind) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind.stream());
    rng
}

/// How pairwise channel correlations over a user subset are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationAggregate {
    /// Minimize the largest pairwise correlation, ties broken by the sum.
    #[default]
    Max,
    Sum,
}

/// Binaries a baseline fixes before the beam design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedAssignment {
    pub scheduled_users: Vec<usize>,
    /// `(target, user)` pairs; `None` leaves targets and pairing free.
    pub pairing: Option<Vec<(usize, usize)>>,
}

impl FixedAssignment {
    pub fn scheduled_targets(&self) -> Option<Vec<usize>> {
        self.pairing.as_ref().map(|p| {
            let mut t: Vec<usize> = p.iter().map(|&(t, _)| t).collect();
            t.sort_unstable();
            t
        })
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub kind: BaselineKind,
    pub fixed: FixedAssignment,
    pub solution: JointSolution,
}

fn normalized_overlap(a: &[C64], b: &[C64], who: usize) -> Result<f64, BaselineError> {
    let na = norm_sqr(a);
    if na == 0.0 {
        return Err(BaselineError::ZeroChannel(who));
    }
    let nb = norm_sqr(b);
    Ok((inner(a, b).norm() / (na * nb).sqrt()).min(1.0))
}

/// `|h_uᴴ a(θ_t)| / (‖h_u‖ ‖a(θ_t)‖)`.
pub fn alignment_weight(s: &NormalizedScenario, u: usize, t: usize) -> Result<f64, BaselineError> {
    let a = steering_vector(s.target_angles[t], s.n_antennas).expect("validated target angle");
    normalized_overlap(&s.channels[u], &a, u)
}

/// `|h_uᴴ h_i| / (‖h_u‖ ‖h_i‖)`.
pub fn channel_correlation(
    s: &NormalizedScenario,
    u: usize,
    i: usize,
) -> Result<f64, BaselineError> {
    if norm_sqr(&s.channels[i]) == 0.0 {
        return Err(BaselineError::ZeroChannel(i));
    }
    normalized_overlap(&s.channels[u], &s.channels[i], u)
}

/// Users × targets alignment weights.
pub fn alignment_matrix(s: &NormalizedScenario) -> Result<Vec<Vec<f64>>, BaselineError> {
    (0..s.n_users)
        .map(|u| {
            (0..s.n_targets)
                .map(|t| alignment_weight(s, u, t))
                .collect()
        })
        .collect()
}

pub fn correlation_matrix(s: &NormalizedScenario) -> Result<Vec<Vec<f64>>, BaselineError> {
    (0..s.n_users)
        .map(|u| {
            (0..s.n_users)
                .map(|i| channel_correlation(s, u, i))
                .collect()
        })
        .collect()
}

/// Maximum-weight matching of exactly `size` rows to distinct columns.
///
/// Returns `(row, column)` pairs sorted by row. Solved as a min-cost flow by
/// successive shortest augmenting paths, which is exact for every flow value.
pub fn max_weight_matching(
    weights: &[Vec<f64>],
    size: usize,
) -> Result<Vec<(usize, usize)>, BaselineError> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if size > rows.min(cols) {
        return Err(BaselineError::Selection {
            want: size,
            have: rows.min(cols),
        });
    }
    // Nodes: source, rows, columns, sink.
    let n = rows + cols + 2;
    let (src, sink) = (0, n - 1);
    let mut edges: Vec<(usize, usize, f64, bool)> = Vec::new(); // (from, to, cost, used)
    for r in 0..rows {
        edges.push((src, 1 + r, 0.0, false));
        for c in 0..cols {
            edges.push((1 + r, 1 + rows + c, -weights[r][c], false));
        }
    }
    for c in 0..cols {
        edges.push((1 + rows + c, sink, 0.0, false));
    }

    for _ in 0..size {
        // Bellman-Ford on the residual graph.
        let mut dist = vec![f64::INFINITY; n];
        let mut via: Vec<Option<(usize, bool)>> = vec![None; n];
        dist[src] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for (e, &(from, to, cost, used)) in edges.iter().enumerate() {
                let (a, b, w) = if used {
                    (to, from, -cost)
                } else {
                    (from, to, cost)
                };
                if dist[a] + w < dist[b] - 1e-12 {
                    dist[b] = dist[a] + w;
                    via[b] = Some((e, used));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut node = sink;
        while node != src {
            let (e, backward) = via[node].expect("augmenting path exists");
            edges[e].3 = !backward;
            node = if backward { edges[e].1 } else { edges[e].0 };
        }
    }

    let mut pairs: Vec<(usize, usize)> = edges
        .iter()
        .filter(|&&(from, to, _, used)| used && from != src && to != sink)
        .map(|&(from, to, _, _)| (from - 1, to - 1 - rows))
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}

fn subset_score(corr: &[Vec<f64>], subset: &[usize]) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut total = 0.0;
    for (a, &u) in subset.iter().enumerate() {
        for &i in &subset[a + 1..] {
            worst = worst.max(corr[u][i]);
            total += corr[u][i];
        }
    }
    (worst, total)
}

/// The `k`-subset of users with the least mutual channel correlation;
/// the lexicographically first subset wins ties.
pub fn least_correlated_users(
    s: &NormalizedScenario,
    k: usize,
    aggregate: CorrelationAggregate,
) -> Result<Vec<usize>, BaselineError> {
    if k > s.n_users {
        return Err(BaselineError::Selection {
            want: k,
            have: s.n_users,
        });
    }
    let corr = correlation_matrix(s)?;
    let key = |sub: &[usize]| {
        let (worst, total) = subset_score(&corr, sub);
        match aggregate {
            CorrelationAggregate::Max => (worst, total),
            CorrelationAggregate::Sum => (total, worst),
        }
    };
    let mut best: Option<((f64, f64), Vec<usize>)> = None;
    for sub in combinations(s.n_users, k) {
        let score = key(&sub);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, sub));
        }
    }
    Ok(best.map(|b| b.1).unwrap_or_default())
}

fn bl1_assignment(s: &NormalizedScenario) -> Result<FixedAssignment, BaselineError> {
    let weights = alignment_matrix(s)?;
    let corr = correlation_matrix(s)?;
    let full = max_weight_matching(&weights, s.n_users.min(s.n_targets))?;
    let mut ranked = full.clone();
    // Strongest pairs first; stable on the row order for ties.
    ranked.sort_by(|a, b| weights[b.0][b.1].total_cmp(&weights[a.0][a.1]));
    let chosen = &ranked[..s.n_sched_targets];
    let mut users: Vec<usize> = chosen.iter().map(|&(u, _)| u).collect();
    while users.len() < s.n_rf_chains {
        let next = (0..s.n_users)
            .filter(|u| !users.contains(u))
            .min_by(|&a, &b| {
                let score = |c: usize| {
                    let mut trial = users.clone();
                    trial.push(c);
                    subset_score(&corr, &trial)
                };
                score(a)
                    .partial_cmp(&score(b))
                    .expect("finite correlations")
            })
            .ok_or(BaselineError::Selection {
                want: s.n_rf_chains,
                have: s.n_users,
            })?;
        users.push(next);
    }
    users.sort_unstable();
    let mut pairing: Vec<(usize, usize)> = chosen.iter().map(|&(u, t)| (t, u)).collect();
    pairing.sort_unstable();
    Ok(FixedAssignment {
        scheduled_users: users,
        pairing: Some(pairing),
    })
}

fn bl2_assignment(
    s: &NormalizedScenario,
    aggregate: CorrelationAggregate,
) -> Result<FixedAssignment, BaselineError> {
    let users = least_correlated_users(s, s.n_rf_chains, aggregate)?;
    let weights: Vec<Vec<f64>> = users
        .iter()
        .map(|&u| {
            (0..s.n_targets)
                .map(|t| alignment_weight(s, u, t))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let matched = max_weight_matching(&weights, s.n_sched_targets)?;
    let mut pairing: Vec<(usize, usize)> = matched.iter().map(|&(r, t)| (t, users[r])).collect();
    pairing.sort_unstable();
    Ok(FixedAssignment {
        scheduled_users: users,
        pairing: Some(pairing),
    })
}

fn random_subset<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
) -> Result<Vec<usize>, BaselineError> {
    if k > n {
        return Err(BaselineError::Selection { want: k, have: n });
    }
    let mut v = sample(rng, n, k).into_vec();
    v.sort_unstable();
    Ok(v)
}

fn random_assignment<R: Rng + ?Sized>(
    s: &NormalizedScenario,
    rng: &mut R,
    with_pairing: bool,
) -> Result<FixedAssignment, BaselineError> {
    let users = random_subset(rng, s.n_users, s.n_rf_chains)?;
    let pairing = if with_pairing {
        let targets = random_subset(rng, s.n_targets, s.n_sched_targets)?;
        let slots = sample(rng, users.len(), targets.len()).into_vec();
        let mut p: Vec<(usize, usize)> = targets
            .iter()
            .zip(slots)
            .map(|(&t, k)| (t, users[k]))
            .collect();
        p.sort_unstable();
        Some(p)
    } else {
        None
    };
    Ok(FixedAssignment {
        scheduled_users: users,
        pairing,
    })
}

/// Scheduling/pairing chosen by `kind`, before any beam design.
pub fn baseline_assignment<R: Rng + ?Sized>(
    kind: BaselineKind,
    s: &NormalizedScenario,
    rng: &mut R,
    aggregate: CorrelationAggregate,
) -> Result<FixedAssignment, BaselineError> {
    match kind {
        BaselineKind::Bl1 => bl1_assignment(s),
        BaselineKind::Bl2 => bl2_assignment(s, aggregate),
        BaselineKind::Bl3 => random_assignment(s, rng, false),
        BaselineKind::Bl4 => random_assignment(s, rng, true),
    }
}

pub fn run_baseline<R: Rng + ?Sized>(
    kind: BaselineKind,
    s: &NormalizedScenario,
    cb: &PhaseCodebook,
    rng: &mut R,
    settings: &MilpSettings,
) -> Result<BaselineOutcome, BaselineError> {
    run_baseline_with(kind, s, cb, rng, settings, CorrelationAggregate::default())
}

pub fn run_baseline_with<R: Rng + ?Sized>(
    kind: BaselineKind,
    s: &NormalizedScenario,
    cb: &PhaseCodebook,
    rng: &mut R,
    settings: &MilpSettings,
    aggregate: CorrelationAggregate,
) -> Result<BaselineOutcome, BaselineError> {
    let fixed = baseline_assignment(kind, s, rng, aggregate)?;
    let (mut model, idx) = build_milp(s, cb).map_err(|e| BaselineError::Solve(e.into()))?;
    restrict(
        &mut model,
        &idx,
        &fixed.scheduled_users,
        fixed.pairing.as_deref(),
    );
    let solution = solve_model(&model, &idx, cb, settings)?;
    Ok(BaselineOutcome {
        kind,
        fixed,
        solution,
    })
}
