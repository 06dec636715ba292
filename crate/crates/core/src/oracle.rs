//! Brute-force global optimum of the original problem for tiny instances.

use crate::codebook::PhaseCodebook;
use crate::error::OracleError;
use crate::linalg::{inner, C64};
use crate::reformulation::{big_m_dpg, Allocation, ZERO_GAIN};
use crate::scenario::NormalizedScenario;

pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Feasibility slack on SINR and cross-interference comparisons.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Best allocation, `None` when no candidate is feasible.
    pub allocation: Option<Allocation>,
    pub tau: Option<f64>,
    pub candidates: u128,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of injective maps from `j` items into `k` slots.
pub fn falling_factorial(k: usize, j: usize) -> u128 {
    if j > k {
        return 0;
    }
    (0..j).map(|i| (k - i) as u128).product()
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Candidates enumerated: beams × user subsets × target subsets × pairings.
pub fn candidate_count(
    users: usize,
    rf_chains: usize,
    targets: usize,
    sched_targets: usize,
    symbols: usize,
    antennas: usize,
) -> u128 {
    (symbols as u128).pow((rf_chains * antennas) as u32)
        * binomial(users, rf_chains)
        * binomial(targets, sched_targets)
        * falling_factorial(rf_chains, sched_targets)
}

/// Complexity figure `2^{KQN} · C(U,K) · T!` for exhaustive search.
pub fn complexity_bound(
    users: usize,
    rf_chains: usize,
    targets: usize,
    q_bits: u32,
    antennas: usize,
) -> u128 {
    2u128.pow(rf_chains as u32 * q_bits * antennas as u32)
        * binomial(users, rf_chains)
        * factorial(targets)
}

/// Lexicographic `k`-subsets of `0..n`.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Lexicographic injective maps from `j` positions into `0..k`.
pub fn injections(k: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(
        k: usize,
        j: usize,
        cur: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for v in 0..k {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(k, j, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    if j <= k {
        rec(k, j, &mut Vec::new(), &mut vec![false; k], &mut out);
    }
    out
}

pub fn exhaustive_solve(
    s: &NormalizedScenario,
    cb: &PhaseCodebook,
) -> Result<OracleResult, OracleError> {
    exhaustive_solve_with_budget(s, cb, DEFAULT_BUDGET)
}

/// Enumerates user subsets, beam assignments (mixed-radix counter over all
/// scheduled antennas) and target pairings, keeping the first best
/// feasible candidate.
pub fn exhaustive_solve_with_budget(
    s: &NormalizedScenario,
    cb: &PhaseCodebook,
    budget: u128,
) -> Result<OracleResult, OracleError> {
    let (uu, kk, tt, jj, nn) = (
        s.n_users,
        s.n_rf_chains,
        s.n_targets,
        s.n_sched_targets,
        s.n_antennas,
    );
    let ll = cb.size();
    if kk > uu || jj > kk.min(tt) {
        return Err(OracleError::Dimension(
            "requires K <= U and J <= min(K, T)".into(),
        ));
    }
    let total = candidate_count(uu, kk, tt, jj, ll, nn);
    if total > budget {
        return Err(OracleError::BudgetExceeded {
            candidates: total,
            budget,
        });
    }
    let target_sets = combinations(tt, jj);
    let maps = injections(kk, jj);
    let per_beam = (target_sets.len() * maps.len()) as u128;
    let tau_floor = ZERO_GAIN * (0..tt).map(|t| big_m_dpg(s, t)).fold(0.0, f64::max);

    let mut candidates = 0u128;
    let mut best: Option<(f64, Allocation)> = None;
    let digits = kk * nn;
    let mut counter = vec![0usize; digits];
    let mut beams = vec![vec![C64::new(0.0, 0.0); nn]; kk];
    let mut gains = vec![vec![0.0; tt]; kk];

    for users in combinations(uu, kk) {
        counter.iter_mut().for_each(|d| *d = 0);
        loop {
            for (k, beam) in beams.iter_mut().enumerate() {
                for (n, entry) in beam.iter_mut().enumerate() {
                    *entry = cb.symbol(counter[k * nn + n]);
                }
            }
            let sinr_ok = users.iter().enumerate().all(|(k, &u)| {
                let h = &s.channels[u];
                let signal = inner(h, &beams[k]).norm_sqr();
                let interference: f64 = (0..kk)
                    .filter(|&i| i != k)
                    .map(|i| inner(h, &beams[i]).norm_sqr())
                    .sum();
                signal / (interference + 1.0) >= s.sinr_thresholds[u] - FEASIBILITY_MARGIN
            });
            if sinr_ok {
                for (k, beam) in beams.iter().enumerate() {
                    for t in 0..tt {
                        gains[k][t] = s.target_grams[t].quad_form(beam);
                    }
                }
                for targets in &target_sets {
                    for map in &maps {
                        candidates += 1;
                        let cross_ok = targets.iter().enumerate().all(|(a, _)| {
                            targets.iter().enumerate().all(|(b, &q)| {
                                a == b
                                    || gains[map[a]][q]
                                        <= s.cross_interference_threshold + FEASIBILITY_MARGIN
                            })
                        });
                        if !cross_ok {
                            continue;
                        }
                        let tau = targets
                            .iter()
                            .enumerate()
                            .map(|(a, &t)| gains[map[a]][t])
                            .fold(f64::INFINITY, f64::min);
                        if tau > tau_floor && best.as_ref().is_none_or(|(b, _)| tau > *b) {
                            let mut full = vec![vec![C64::new(0.0, 0.0); nn]; uu];
                            for (k, &u) in users.iter().enumerate() {
                                full[u] = beams[k].clone();
                            }
                            let mut pairing: Vec<(usize, usize)> = targets
                                .iter()
                                .enumerate()
                                .map(|(a, &t)| (t, users[map[a]]))
                                .collect();
                            pairing.sort_unstable();
                            best = Some((
                                tau,
                                Allocation {
                                    scheduled_users: users.clone(),
                                    scheduled_targets: targets.clone(),
                                    pairing,
                                    beams: full,
                                    tau,
                                },
                            ));
                        }
                    }
                }
            } else {
                candidates += per_beam;
            }
            // Mixed-radix increment, first digit fastest.
            let mut d = 0;
            while d < digits {
                counter[d] += 1;
                if counter[d] < ll {
                    break;
                }
                counter[d] = 0;
                d += 1;
            }
            if d == digits {
                break;
            }
        }
    }
    Ok(OracleResult {
        tau: best.as_ref().map(|b| b.0),
        allocation: best.map(|b| b.1),
        candidates,
    })
}
