//! Acceptance run. Prints one PASS/FAIL line per check and exits non-zero
//! when the failing checks differ from `KNOWN_FAILURES`.

#[path = "../../core/tests/common/mod.rs"]
mod core_common;
#[path = "../../milp/tests/common/hand_lps.rs"]
mod hand_lps;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use core_common::{
    audit_big_m, binary_product_table, fixed_instance, trace_product_violations,
    two_antenna_instance, worst_trace_identity_error,
};
use isac_cli::check::{compare, exact_settings, EXACT_GAP};
use isac_cli::experiment::{
    check_allocation, realization_seed, run_method, sweep_point, ExperimentConfig, Method,
};
use isac_cli::tiny::{random_instance, TinyShape};
use isac_core::oracle::{binomial, exhaustive_solve, factorial};
use isac_core::{
    build_codebook, BaselineKind, JointSolution, NormalizedScenario, ScenarioTemplate,
};
use milp::{solve_lp, LpStatus, MilpSettings};

const TINY_INSTANCES: u64 = 60;
const TINY_SEED: u64 = 9_000;
const OPTIMUM_REL_TOL: f64 = 1e-6;
const MARGIN_FLOOR: f64 = -1e-9;
const PRODUCT_TOL: f64 = 1e-6;
const BIG_M_INSTANCES: u64 = 40;
const DOMINANCE_REALIZATIONS: usize = 100;
const DOMINANCE_POWER_DBM: f64 = 40.0;
const TREND_REL_TOL: f64 = 1e-8;
const IDENTITY_SAMPLES: usize = 1000;
const TRACE_IDENTITY_TOL: f64 = 1e-12;
const HAND_LP_TOL: f64 = 1e-8;
const FINAL_GAP: f64 = 1e-4;

/// Checks that fail on a faithful implementation; the README explains both.
const KNOWN_FAILURES: [&str; 2] = ["6a", "9b"];

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Report {
    failed: BTreeSet<String>,
}

impl Report {
    fn line(&mut self, id: &str, title: &str, pass: bool, detail: String) {
        println!(
            "criterion {id:<3} {:<4} {title}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            self.failed.insert(id.to_string());
        }
    }
}

/// Verification and integrality statistics over every solve in the run.
#[derive(Default)]
struct SolveAudit {
    allocations: usize,
    verify_failures: Vec<String>,
    worst_margin: f64,
    solves: usize,
    incumbents: usize,
    worst_product: f64,
    gap_failures: Vec<String>,
}

impl SolveAudit {
    fn record(
        &mut self,
        label: &str,
        s: &NormalizedScenario,
        sol: &JointSolution,
        final_gap: Option<f64>,
    ) {
        self.solves += 1;
        self.incumbents += sol.incumbents;
        self.worst_product = self.worst_product.max(sol.product_deviation);
        if let Some(a) = &sol.allocation {
            self.allocations += 1;
            match check_allocation(s, a) {
                Ok(m) => self.worst_margin = self.worst_margin.min(m),
                Err(e) => self.verify_failures.push(format!("{label}: {e}")),
            }
        }
        if let (Some(limit), Some(obj)) = (final_gap, sol.report.objective) {
            let r = &sol.report;
            let ordered = obj <= r.bound + 1e-9 * r.bound.abs().max(1.0);
            if !(r.status.is_solved() && ordered && r.gap <= limit) {
                self.gap_failures.push(format!(
                    "{label}: status {} obj {obj} bound {} gap {}",
                    r.status.as_str(),
                    r.bound,
                    r.gap
                ));
            }
        }
    }
}

fn oracle_equivalence(report: &mut Report, audit: &mut SolveAudit) -> Vec<NormalizedScenario> {
    let start = Instant::now();
    let settings = exact_settings();
    let mut instances = Vec::new();
    let (mut agree, mut feasible) = (0, 0);
    let mut mismatches = Vec::new();
    for seed in TINY_SEED..TINY_SEED + TINY_INSTANCES {
        let s = random_instance(seed, &TinyShape::default());
        match compare(&s, &settings) {
            Ok(c) => {
                audit.record(&format!("tiny {seed}"), &s, &c.milp, Some(EXACT_GAP));
                let ok = match (c.oracle.tau, c.milp_tau()) {
                    (None, None) => true,
                    (Some(a), Some(b)) => (a - b).abs() <= OPTIMUM_REL_TOL * a.abs().max(b.abs()),
                    _ => false,
                };
                feasible += usize::from(c.oracle.tau.is_some());
                if ok {
                    agree += 1;
                } else {
                    mismatches.push(format!(
                        "seed {seed}: oracle {:?} model {:?}",
                        c.oracle.tau,
                        c.milp_tau()
                    ));
                }
            }
            Err(e) => mismatches.push(format!("seed {seed}: {e}")),
        }
        instances.push(s);
    }
    report.line(
        "1",
        "model optimum equals exhaustive search",
        mismatches.is_empty() && instances.len() >= 50,
        format!(
            "{agree}/{} agree ({feasible} feasible, {} infeasible) in {:.1}s {}",
            instances.len(),
            instances.len() - feasible,
            start.elapsed().as_secs_f64(),
            mismatches.join("; ")
        ),
    );
    instances
}

fn big_m_validity(report: &mut Report) {
    let (mut allocations, mut feasible, mut bad) = (0, 0, 0);
    for seed in 0..BIG_M_INSTANCES {
        let a = audit_big_m(&two_antenna_instance(seed));
        allocations += a.allocations;
        feasible += a.feasible;
        bad += a.bound_violations + a.model_violations;
    }
    report.line(
        "4",
        "big-M constants cover every enumerated beam set",
        bad == 0,
        format!("{allocations} allocations on {BIG_M_INSTANCES} two-antenna one-bit instances, {feasible} feasible, {bad} counterexamples"),
    );
}

fn load(name: &str) -> (ExperimentConfig, ScenarioTemplate) {
    let cfg = ExperimentConfig::load(configs().join("experiments").join(name))
        .expect("shipped experiment");
    let template = ScenarioTemplate::load(&cfg.scenario).expect("shipped scenario");
    (cfg, template)
}

fn baseline_dominance(report: &mut Report, audit: &mut SolveAudit) {
    let start = Instant::now();
    let (cfg, template) = load("desk_power.toml");
    let settings = cfg.settings();
    let mut violations = Vec::new();
    let mut sums = vec![(0.0, 0usize); Method::ALL.len()];
    for r in 0..DOMINANCE_REALIZATIONS {
        let seed = realization_seed(cfg.seed, r);
        let s = sweep_point(&template, &cfg, DOMINANCE_POWER_DBM)
            .realize(seed)
            .unwrap()
            .normalize()
            .unwrap();
        let mut opt_tau = None;
        for (m, &method) in Method::ALL.iter().enumerate() {
            let sol = run_method(method, &s, &settings, seed).expect("solve");
            let gap = (method == Method::Opt).then_some(cfg.rel_gap);
            audit.record(&format!("{method} realization {r}"), &s, &sol, gap);
            let tau = sol.allocation.as_ref().map(|a| a.tau);
            if let Some(t) = tau {
                sums[m].0 += t;
                sums[m].1 += 1;
            }
            match (method, tau) {
                (Method::Opt, t) => opt_tau = t,
                (_, Some(t)) => {
                    let best = opt_tau.unwrap_or(f64::NEG_INFINITY);
                    if t > best + cfg.rel_gap * best.abs() + 1e-12 {
                        violations.push(format!("{method} realization {r}: {t} > {best}"));
                    }
                }
                _ => {}
            }
        }
    }
    let means: Vec<Option<f64>> = sums
        .iter()
        .map(|&(sum, n)| (n > 0).then(|| sum / n as f64))
        .collect();
    let bl4 = Method::ALL
        .iter()
        .position(|&m| m == Method::Baseline(BaselineKind::Bl4))
        .unwrap();
    let strict = matches!((means[0], means[bl4]), (Some(o), Some(b)) if o > b);
    let summary: Vec<String> = Method::ALL
        .iter()
        .zip(&means)
        .zip(&sums)
        .map(|((m, mean), (_, n))| {
            format!(
                "{m} {} ({n} feasible)",
                mean.map_or("-".into(), |v| format!("{v:.4e}"))
            )
        })
        .collect();
    report.line(
        "5",
        "baselines never beat OPT; mean OPT above mean BL4",
        violations.is_empty() && strict,
        format!(
            "{DOMINANCE_REALIZATIONS} realizations at {DOMINANCE_POWER_DBM} dBm, N={}: {} in {:.0}s {}",
            template.antennas,
            summary.join(", "),
            start.elapsed().as_secs_f64(),
            violations.join("; ")
        ),
    );
}

/// Per-realization OPT gains along the sweep of `name`, at the exact gap.
fn trend(name: &str, audit: &mut SolveAudit) -> (ExperimentConfig, Vec<Vec<Option<f64>>>) {
    let (cfg, template) = load(name);
    let settings = MilpSettings {
        node_limit: cfg.node_limit,
        ..exact_settings()
    };
    let mut rows = Vec::new();
    for r in 0..cfg.realizations {
        let seed = realization_seed(cfg.seed, r);
        let mut row = Vec::new();
        for &value in &cfg.values {
            let s = sweep_point(&template, &cfg, value)
                .realize(seed)
                .unwrap()
                .normalize()
                .unwrap();
            let sol = run_method(Method::Opt, &s, &settings, seed).expect("solve");
            audit.record(
                &format!("{name} realization {r} value {value}"),
                &s,
                &sol,
                Some(EXACT_GAP),
            );
            row.push(sol.allocation.map(|a| a.tau));
        }
        rows.push(row);
    }
    (cfg, rows)
}

/// Realizations where the gain moves against `direction` (+1 or -1) by more
/// than the tolerance; infeasible points count as zero gain.
fn trend_breaks(rows: &[Vec<Option<f64>>], direction: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        let g: Vec<f64> = row.iter().map(|t| t.unwrap_or(0.0)).collect();
        for w in g.windows(2) {
            let slack = TREND_REL_TOL * w[0].abs().max(w[1].abs());
            if direction * (w[1] - w[0]) < -slack {
                out.push(format!(
                    "r{r} {:?}",
                    g.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
                ));
                break;
            }
        }
    }
    out
}

fn trends(report: &mut Report, audit: &mut SolveAudit) {
    let start = Instant::now();
    let (cfg, rows) = trend("desk_power.toml", audit);
    let breaks = trend_breaks(&rows, 1.0);
    report.line(
        "6a",
        "OPT gain non-decreasing in transmit power per realization",
        breaks.is_empty(),
        format!(
            "{} of {} realizations over {:?} dBm break the trend in {:.0}s {}",
            breaks.len(),
            rows.len(),
            cfg.values,
            start.elapsed().as_secs_f64(),
            breaks.join("; ")
        ),
    );
    let start = Instant::now();
    let (cfg, rows) = trend("desk_sinr_correlated.toml", audit);
    let breaks = trend_breaks(&rows, -1.0);
    report.line(
        "6b",
        "OPT gain non-increasing in SINR threshold per realization",
        breaks.is_empty(),
        format!(
            "{} of {} realizations over thresholds {:?} break the trend in {:.0}s {}",
            breaks.len(),
            rows.len(),
            cfg.values,
            start.elapsed().as_secs_f64(),
            breaks.join("; ")
        ),
    );
}

fn algebraic_identities(report: &mut Report) {
    let l1 = trace_product_violations(IDENTITY_SAMPLES, 101);
    report.line(
        "7a",
        "trace of PSD product bounded by product of traces",
        l1 == 0,
        format!("{l1} violations over {IDENTITY_SAMPLES} pairs"),
    );
    let l2 = worst_trace_identity_error(IDENTITY_SAMPLES, 102);
    report.line(
        "7b",
        "received power equals trace form",
        l2 <= TRACE_IDENTITY_TOL,
        format!("worst relative error {l2:e}"),
    );
    let table = binary_product_table();
    let exact = table
        .iter()
        .all(|&((a, b), (lo, hi))| lo == f64::from(a * b) && hi == f64::from(a * b));
    report.line(
        "7c",
        "linear envelope pins binary products",
        exact,
        format!("{table:?}"),
    );
}

fn solver_suite(report: &mut Report, audit: &SolveAudit) {
    let cases = hand_lps::cases();
    let mut wrong = Vec::new();
    for case in &cases {
        let ok = match (solve_lp(&case.model), case.optimum) {
            (Ok(sol), None) => sol.status == LpStatus::Infeasible,
            (Ok(sol), Some(opt)) => {
                sol.status == LpStatus::Optimal
                    && (sol.objective - opt).abs() <= HAND_LP_TOL * (1.0 + opt.abs())
            }
            (Err(_), _) => false,
        };
        if !ok {
            wrong.push(case.name);
        }
    }
    report.line(
        "8a",
        "simplex matches closed-form LP optima",
        wrong.is_empty() && cases.len() >= 20,
        format!(
            "{}/{} hand LPs {:?}",
            cases.len() - wrong.len(),
            cases.len(),
            wrong
        ),
    );
    report.line(
        "8b",
        "branch-and-bound incumbent below bound with final gap within tolerance",
        audit.gap_failures.is_empty(),
        format!(
            "{} gap-checked solves, final gap limit {FINAL_GAP:e} {}",
            audit.solves,
            audit.gap_failures.join("; ")
        ),
    );
}

fn complexity(report: &mut Report, tiny: &[NormalizedScenario]) {
    let mut instances: Vec<NormalizedScenario> = ['A', 'B', 'C', 'D']
        .iter()
        .map(|&n| fixed_instance(n).normalize().unwrap())
        .collect();
    instances.extend(tiny.iter().cloned());
    let (mut count_errors, mut over_bound) = (Vec::new(), Vec::new());
    for s in &instances {
        let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas).unwrap();
        let counted = exhaustive_solve(s, &cb).unwrap().candidates;
        let (u, k, t, j) = (s.n_users, s.n_rf_chains, s.n_targets, s.n_sched_targets);
        let beams = 2u128.pow((k * s.phase_bits as usize * s.n_antennas) as u32);
        let injective = binomial(t, j) * (k - j + 1..=k).map(|x| x as u128).product::<u128>();
        let shape = format!(
            "U={u} K={k} T={t} J={j} N={} Q={}",
            s.n_antennas, s.phase_bits
        );
        if counted != beams * binomial(u, k) * injective {
            count_errors.push(format!("{shape}: {counted}"));
        }
        if counted > beams * binomial(u, k) * factorial(t) {
            over_bound.push(shape);
        }
    }
    over_bound.sort();
    over_bound.dedup();
    report.line(
        "9a",
        "candidate counter equals the closed-form count",
        count_errors.is_empty(),
        format!("{} instances {}", instances.len(), count_errors.join("; ")),
    );
    report.line(
        "9b",
        "candidate counter within the T! complexity bound",
        over_bound.is_empty(),
        format!(
            "exceeded on {} shapes: {}",
            over_bound.len(),
            over_bound.join("; ")
        ),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut report = Report {
        failed: BTreeSet::new(),
    };
    let mut audit = SolveAudit::default();
    let tiny = oracle_equivalence(&mut report, &mut audit);
    big_m_validity(&mut report);
    baseline_dominance(&mut report, &mut audit);
    trends(&mut report, &mut audit);
    report.line(
        "2",
        "decoded solutions pass direct verification",
        audit.verify_failures.is_empty() && audit.worst_margin >= MARGIN_FLOOR,
        format!(
            "{} allocations from {} solves, worst margin {:e} {}",
            audit.allocations,
            audit.solves,
            audit.worst_margin,
            audit.verify_failures.join("; ")
        ),
    );
    report.line(
        "3",
        "selector products integral at every incumbent",
        audit.worst_product <= PRODUCT_TOL && audit.incumbents > 0,
        format!(
            "{} incumbents, worst deviation {:e}",
            audit.incumbents, audit.worst_product
        ),
    );
    algebraic_identities(&mut report);
    solver_suite(&mut report, &audit);
    complexity(&mut report, &tiny);

    let known: BTreeSet<String> = KNOWN_FAILURES.iter().map(|s| s.to_string()).collect();
    println!(
        "acceptance finished in {:.0}s; failing: {:?}; known failures: {:?}",
        start.elapsed().as_secs_f64(),
        report.failed,
        known
    );
    if report.failed == known {
        ExitCode::SUCCESS
    } else {
        println!("the failing checks differ from the known failures");
        ExitCode::FAILURE
    }
}
