//! Direct evaluation of allocations against the original nonlinear model:
//! SINR, sensing gain, cross-interference, codebook membership and the
//! scheduling/pairing rules. Nothing here goes through the linear model.

use crate::codebook::build_codebook;
use crate::error::ScenarioError;
use crate::linalg::{inner, C64};
use crate::reformulation::Allocation;
use crate::scenario::{steering_vector, NormalizedScenario};

/// A check passes when its margin is at least `-MARGIN_TOLERANCE`.
pub const MARGIN_TOLERANCE: f64 = 1e-9;

pub fn sinr(s: &NormalizedScenario, a: &Allocation, u: usize) -> f64 {
    let h = &s.channels[u];
    let signal = inner(h, &a.beams[u]).norm_sqr();
    if signal == 0.0 {
        return 0.0;
    }
    let interference: f64 = (0..s.n_users)
        .filter(|&i| i != u)
        .map(|i| inner(h, &a.beams[i]).norm_sqr())
        .sum();
    signal / (interference + 1.0)
}

/// Gain `vᴴ G_t v` of the beam paired with target `t`; zero when unpaired.
pub fn dpg(s: &NormalizedScenario, a: &Allocation, t: usize) -> f64 {
    a.target_beam(t)
        .map_or(0.0, |v| s.target_grams[t].quad_form(v))
}

/// Power the beam illuminating `t` leaks onto target `q`.
pub fn cross_power(s: &NormalizedScenario, a: &Allocation, t: usize, q: usize) -> f64 {
    a.target_beam(t)
        .map_or(0.0, |v| s.target_grams[q].quad_form(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub margin: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.margin >= -MARGIN_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub checks: Vec<Check>,
    /// Minimum gain over scheduled targets, recomputed from the beams.
    pub tau_check: f64,
    /// `|tau_check - allocation.tau|`.
    pub tau_error: f64,
}

impl FeasibilityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn worst_margin(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

fn count_margin(got: usize, want: usize) -> f64 {
    -(got.abs_diff(want) as f64)
}

/// Checks every constraint of the original problem on `a`.
pub fn verify(s: &NormalizedScenario, a: &Allocation) -> FeasibilityReport {
    let mut checks = Vec::new();
    let mut push = |name: String, margin: f64| checks.push(Check { name, margin });
    let scheduled_user = |u: usize| a.scheduled_users.contains(&u);
    let scheduled_target = |t: usize| a.scheduled_targets.contains(&t);

    let mut users = a.scheduled_users.clone();
    users.sort_unstable();
    users.dedup();
    let users_valid =
        users.len() == a.scheduled_users.len() && users.iter().all(|&u| u < s.n_users);
    push(
        "users.count".into(),
        count_margin(users.len(), s.n_rf_chains) - f64::from(u8::from(!users_valid)),
    );
    let mut targets = a.scheduled_targets.clone();
    targets.sort_unstable();
    targets.dedup();
    let targets_valid =
        targets.len() == a.scheduled_targets.len() && targets.iter().all(|&t| t < s.n_targets);
    push(
        "targets.count".into(),
        count_margin(targets.len(), s.n_sched_targets) - f64::from(u8::from(!targets_valid)),
    );

    for t in 0..s.n_targets {
        let pairs = a.pairing.iter().filter(|p| p.0 == t).count();
        let want = usize::from(scheduled_target(t));
        push(format!("pairing.target[{t}]"), count_margin(pairs, want));
    }
    let stray = a
        .pairing
        .iter()
        .filter(|p| p.0 >= s.n_targets || p.1 >= s.n_users)
        .count();
    push("pairing.range".into(), -(stray as f64));
    for u in 0..s.n_users {
        let served = a.pairing.iter().filter(|p| p.1 == u).count();
        let allowed = usize::from(scheduled_user(u));
        push(
            format!("pairing.user[{u}]"),
            (allowed as f64 - served as f64).min(0.0),
        );
    }

    let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas).ok();
    for u in 0..s.n_users {
        let beam = &a.beams[u];
        let distance = if beam.len() != s.n_antennas {
            f64::INFINITY
        } else if scheduled_user(u) {
            match &cb {
                Some(cb) => beam
                    .iter()
                    .map(|w| {
                        cb.symbols()
                            .iter()
                            .map(|sym| (w - sym).norm())
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0, f64::max),
                None => f64::INFINITY,
            }
        } else {
            beam.iter().map(|w| w.norm()).fold(0.0, f64::max)
        };
        push(format!("beam[{u}]"), -distance);
    }
    if a.beams.len() != s.n_users {
        push("beams.count".into(), -1.0);
    }

    for &u in &a.scheduled_users {
        if u < s.n_users {
            push(format!("sinr[{u}]"), sinr(s, a, u) - s.sinr_thresholds[u]);
        }
    }
    let mut tau_check = f64::INFINITY;
    for &t in &a.scheduled_targets {
        if t < s.n_targets {
            let g = dpg(s, a, t);
            tau_check = tau_check.min(g);
            push(format!("gain[{t}]"), g - a.tau);
        }
    }
    if !tau_check.is_finite() {
        tau_check = 0.0;
    }
    for &t in &a.scheduled_targets {
        for &q in &a.scheduled_targets {
            if t != q && t < s.n_targets && q < s.n_targets {
                push(
                    format!("cross[{t},{q}]"),
                    s.cross_interference_threshold - cross_power(s, a, t, q),
                );
            }
        }
    }
    push("tau.positive".into(), a.tau);

    FeasibilityReport {
        checks,
        tau_check,
        tau_error: (tau_check - a.tau).abs(),
    }
}

/// `|a(θ)ᴴ w|²` over a grid of angles in degrees.
pub fn beampattern(beam: &[C64], grid: &[f64]) -> Result<Vec<f64>, ScenarioError> {
    grid.iter()
        .map(|&theta| steering_vector(theta, beam.len()).map(|a| inner(&a, beam).norm_sqr()))
        .collect()
}

/// Default beampattern grid: every 0.25° strictly inside (0°, 180°).
pub fn default_grid() -> Vec<f64> {
    (1..720).map(|k| k as f64 * 0.25).collect()
}

/// Interval of `c` allowed by `c ≤ a`, `c ≤ b`, `c ≥ a + b - 1`, `0 ≤ c ≤ 1`.
pub fn binary_product_interval(a: f64, b: f64) -> (f64, f64) {
    ((a + b - 1.0).max(0.0), a.min(b).min(1.0))
}
