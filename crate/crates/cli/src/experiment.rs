//! Parameter sweeps over transmit power or SINR threshold, and the single
//! beampattern case.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use isac_core::baselines::baseline_rng;
use isac_core::evaluator::{beampattern, default_grid, verify};
use isac_core::scenario::Thresholds;
use isac_core::{
    build_codebook, run_baseline, solve_joint, Allocation, BaselineError, BaselineKind,
    CodebookError, JointSolution, NormalizedScenario, ScenarioError, ScenarioTemplate, SolveError,
};
use milp::MilpSettings;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance on the recomputed minimum gain of a verified allocation.
pub const TAU_RECHECK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot read {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("invalid experiment config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("{method} at {sweep_value} (realization {realization}) failed verification: {detail}")]
    Verification {
        method: Method,
        sweep_value: f64,
        realization: usize,
        detail: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// The joint design or one of the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Opt,
    Baseline(BaselineKind),
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Opt,
        Method::Baseline(BaselineKind::Bl1),
        Method::Baseline(BaselineKind::Bl2),
        Method::Baseline(BaselineKind::Bl3),
        Method::Baseline(BaselineKind::Bl4),
    ];

    fn rank(self) -> usize {
        Self::ALL
            .iter()
            .position(|&m| m == self)
            .unwrap_or(usize::MAX)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Opt => "OPT",
            Method::Baseline(k) => k.as_str(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("OPT") {
            Ok(Method::Opt)
        } else {
            s.parse()
                .map(Method::Baseline)
                .map_err(|_| format!("unknown method `{s}`"))
        }
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    TxPowerDbm,
    SinrThreshold,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::TxPowerDbm => "tx_power_dbm",
            SweepVariable::SinrThreshold => "sinr_threshold",
        }
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_gap() -> f64 {
    1e-4
}
fn default_node_limit() -> usize {
    1_000_000
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// One sweep, as stored on disk. `scenario` is resolved relative to the
/// experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: PathBuf,
    pub sweep: SweepVariable,
    pub values: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    /// Overrides the LoS spacing of the scenario template.
    #[serde(default)]
    pub los_separation_deg: Option<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_gap")]
    pub rel_gap: f64,
    #[serde(default = "default_node_limit")]
    pub node_limit: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        if cfg.scenario.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.scenario = dir.join(&cfg.scenario);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.realizations == 0 {
            return Err(ExperimentError::Invalid(
                "realizations must be at least 1".into(),
            ));
        }
        if self.values.is_empty() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(ExperimentError::Invalid(
                "sweep values must be a nonempty list of numbers".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(ExperimentError::Invalid("no methods selected".into()));
        }
        if !(self.rel_gap > 0.0) {
            return Err(ExperimentError::Invalid("rel_gap must be positive".into()));
        }
        Ok(())
    }

    pub fn settings(&self) -> MilpSettings {
        MilpSettings {
            rel_gap: self.rel_gap,
            node_limit: self.node_limit,
            ..MilpSettings::default()
        }
    }
}

/// Seed of realization `r`. Channels depend only on this seed, so a
/// realization keeps its channels across the sweep.
pub fn realization_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add(r as u64)
}

/// The template with the sweep variable set to `value`.
pub fn sweep_point(
    template: &ScenarioTemplate,
    cfg: &ExperimentConfig,
    value: f64,
) -> ScenarioTemplate {
    let mut t = template.clone();
    if let Some(sep) = cfg.los_separation_deg {
        t.users.los_separation_deg = sep;
    }
    match cfg.sweep {
        SweepVariable::TxPowerDbm => t.tx_power_dbm = value,
        SweepVariable::SinrThreshold => t.users.sinr_threshold = Thresholds::Common(value),
    }
    t
}

/// Outcome of one method on one realization at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub method: Method,
    pub sweep_value: f64,
    pub realization: usize,
    pub seed: u64,
    pub status: String,
    pub tau: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub worst_margin: Option<f64>,
    pub users: Vec<usize>,
    pub pairing: Vec<(usize, usize)>,
    pub wall_time_s: f64,
}

impl Record {
    pub fn feasible(&self) -> bool {
        self.tau.is_some()
    }
}

/// Mean over the feasible realizations of one (method, sweep value) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub sweep_value: f64,
    pub realizations: usize,
    pub feasible: usize,
    pub mean_tau: Option<f64>,
    pub mean_gap: Option<f64>,
    pub mean_time_s: f64,
}

impl SummaryRow {
    pub fn feasibility_rate(&self) -> f64 {
        self.feasible as f64 / self.realizations as f64
    }
}

/// Solves `method` on `s`. Baselines draw from their own stream of `seed`.
pub fn run_method(
    method: Method,
    s: &NormalizedScenario,
    settings: &MilpSettings,
    seed: u64,
) -> Result<JointSolution, ExperimentError> {
    let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas)?;
    Ok(match method {
        Method::Opt => solve_joint(s, &cb, settings)?,
        Method::Baseline(kind) => {
            let mut rng = baseline_rng(seed, kind);
            run_baseline(kind, s, &cb, &mut rng, settings)?.solution
        }
    })
}

/// Checks `a` against the original constraints and its own gain.
pub fn check_allocation(s: &NormalizedScenario, a: &Allocation) -> Result<f64, String> {
    let report = verify(s, a);
    if !report.passed() {
        let failed: Vec<String> = report
            .failures()
            .map(|c| format!("{} ({:e})", c.name, c.margin))
            .collect();
        return Err(failed.join(", "));
    }
    if report.tau_error > TAU_RECHECK_TOLERANCE * a.tau.abs().max(1.0) {
        return Err(format!("recomputed gain differs by {:e}", report.tau_error));
    }
    Ok(report.worst_margin())
}

fn run_realization(
    template: &ScenarioTemplate,
    cfg: &ExperimentConfig,
    r: usize,
) -> Result<Vec<Record>, ExperimentError> {
    let seed = realization_seed(cfg.seed, r);
    let settings = cfg.settings();
    let mut out = Vec::new();
    for &value in &cfg.values {
        let s = sweep_point(template, cfg, value)
            .realize(seed)?
            .normalize()?;
        for &method in &cfg.methods {
            let start = Instant::now();
            let sol = run_method(method, &s, &settings, seed)?;
            let wall_time_s = start.elapsed().as_secs_f64();
            let worst_margin = match &sol.allocation {
                Some(a) => Some(check_allocation(&s, a).map_err(|detail| {
                    ExperimentError::Verification {
                        method,
                        sweep_value: value,
                        realization: r,
                        detail,
                    }
                })?),
                None => None,
            };
            let status = if sol.allocation.is_none() && sol.report.status.is_solved() {
                "infeasible".to_string()
            } else {
                sol.report.status.as_str().to_string()
            };
            out.push(Record {
                method,
                sweep_value: value,
                realization: r,
                seed,
                status,
                tau: sol.allocation.as_ref().map(|a| a.tau),
                bound: sol.report.bound,
                gap: sol.report.gap,
                nodes: sol.report.nodes,
                lp_iterations: sol.report.lp_iterations,
                worst_margin,
                users: sol
                    .allocation
                    .as_ref()
                    .map(|a| a.scheduled_users.clone())
                    .unwrap_or_default(),
                pairing: sol
                    .allocation
                    .as_ref()
                    .map(|a| a.pairing.clone())
                    .unwrap_or_default(),
                wall_time_s,
            });
        }
    }
    Ok(out)
}

fn sort_records(records: &mut [Record], values: &[f64]) {
    let value_rank = |v: f64| values.iter().position(|&x| x == v).unwrap_or(usize::MAX);
    records.sort_by_key(|r| (r.method.rank(), value_rank(r.sweep_value), r.realization));
}

/// Runs every realization (in parallel over `threads` workers) and returns
/// the records in a fixed order: method, sweep value, realization.
pub fn run_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<Record>, ExperimentError> {
    cfg.validate()?;
    let template = ScenarioTemplate::load(&cfg.scenario)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let per_realization: Vec<Result<Vec<Record>, ExperimentError>> = pool.install(|| {
        (0..cfg.realizations)
            .into_par_iter()
            .map(|r| run_realization(&template, cfg, r))
            .collect()
    });
    let mut records = Vec::new();
    for batch in per_realization {
        records.extend(batch?);
    }
    sort_records(&mut records, &cfg.values);
    Ok(records)
}

pub fn summarize(records: &[Record], values: &[f64], methods: &[Method]) -> Vec<SummaryRow> {
    let mut methods = methods.to_vec();
    methods.sort_by_key(|m| m.rank());
    methods.dedup();
    let mut rows = Vec::new();
    for &method in &methods {
        for &value in values {
            let cell: Vec<&Record> = records
                .iter()
                .filter(|r| r.method == method && r.sweep_value == value)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let feasible: Vec<&&Record> = cell.iter().filter(|r| r.feasible()).collect();
            let mean = |f: &dyn Fn(&Record) -> f64| -> Option<f64> {
                (!feasible.is_empty())
                    .then(|| feasible.iter().map(|r| f(r)).sum::<f64>() / feasible.len() as f64)
            };
            rows.push(SummaryRow {
                method,
                sweep_value: value,
                realizations: cell.len(),
                feasible: feasible.len(),
                mean_tau: mean(&|r| r.tau.unwrap_or(0.0)),
                mean_gap: mean(&|r| r.gap),
                mean_time_s: cell.iter().map(|r| r.wall_time_s).sum::<f64>() / cell.len() as f64,
            });
        }
    }
    rows
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join_users(users: &[usize]) -> String {
    users
        .iter()
        .map(|u| u.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn join_pairs(pairs: &[(usize, usize)]) -> String {
    pairs
        .iter()
        .map(|(t, u)| format!("{t}:{u}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Version of the CSV layouts written by [`write_outputs`].
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const DETAIL_HEADER: [&str; 14] = [
    "method",
    "sweep_variable",
    "sweep_value",
    "realization",
    "seed",
    "status",
    "feasible",
    "tau",
    "bound",
    "gap",
    "nodes",
    "lp_iterations",
    "worst_margin",
    "schedule",
];

/// Writes `detail.csv`, `summary.csv`, `curves.csv` and `timing.csv`.
/// Everything except `timing.csv` is a deterministic function of the
/// configuration.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    records: &[Record],
) -> Result<Vec<SummaryRow>, ExperimentError> {
    fs::create_dir_all(dir)?;
    let sweep = cfg.sweep.as_str();

    let mut w = csv::Writer::from_path(dir.join("detail.csv"))?;
    w.write_record(DETAIL_HEADER)?;
    for r in records {
        let schedule = if r.feasible() {
            format!(
                "users={} pairs={}",
                join_users(&r.users),
                join_pairs(&r.pairing)
            )
        } else {
            String::new()
        };
        w.write_record([
            r.method.to_string(),
            sweep.to_string(),
            r.sweep_value.to_string(),
            r.realization.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            r.feasible().to_string(),
            opt_num(r.tau),
            r.bound.to_string(),
            r.gap.to_string(),
            r.nodes.to_string(),
            r.lp_iterations.to_string(),
            opt_num(r.worst_margin),
            schedule,
        ])?;
    }
    w.flush()?;

    let summary = summarize(records, &cfg.values, &cfg.methods);
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record([
        "method",
        "sweep_variable",
        "sweep_value",
        "realizations",
        "feasible",
        "feasibility_rate",
        "mean_tau",
        "mean_gap",
    ])?;
    for row in &summary {
        w.write_record([
            row.method.to_string(),
            sweep.to_string(),
            row.sweep_value.to_string(),
            row.realizations.to_string(),
            row.feasible.to_string(),
            row.feasibility_rate().to_string(),
            opt_num(row.mean_tau),
            opt_num(row.mean_gap),
        ])?;
    }
    w.flush()?;

    // Plot data: one column of mean gains per method.
    let mut methods: Vec<Method> = summary.iter().map(|r| r.method).collect();
    methods.dedup();
    let mut w = csv::Writer::from_path(dir.join("curves.csv"))?;
    let mut header = vec![sweep.to_string()];
    header.extend(methods.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for &value in &cfg.values {
        let mut line = vec![value.to_string()];
        for &m in &methods {
            let cell = summary
                .iter()
                .find(|r| r.method == m && r.sweep_value == value);
            line.push(opt_num(cell.and_then(|r| r.mean_tau)));
        }
        w.write_record(&line)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("timing.csv"))?;
    w.write_record(["method", "sweep_value", "realization", "wall_time_s"])?;
    for r in records {
        w.write_record([
            r.method.to_string(),
            r.sweep_value.to_string(),
            r.realization.to_string(),
            r.wall_time_s.to_string(),
        ])?;
    }
    for row in &summary {
        w.write_record([
            row.method.to_string(),
            row.sweep_value.to_string(),
            "mean".into(),
            row.mean_time_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(summary)
}

/// Solved beampattern case.
#[derive(Debug, Clone)]
pub struct BeampatternCase {
    pub scenario: NormalizedScenario,
    pub solution: JointSolution,
    pub grid: Vec<f64>,
    /// Beampattern of every scheduled user, by user index.
    pub patterns: Vec<(usize, Vec<f64>)>,
}

/// Solves the joint design on the fixed scenario in `path` (realized with
/// the file's own seed) and evaluates the beampatterns of the scheduled
/// users. Fails on a verification error.
pub fn run_beampattern_case(
    path: impl AsRef<Path>,
    settings: &MilpSettings,
) -> Result<BeampatternCase, ExperimentError> {
    let template = ScenarioTemplate::load(path)?;
    let s = template.realize(template.seed)?.normalize()?;
    let solution = run_method(Method::Opt, &s, settings, template.seed)?;
    let grid = default_grid();
    let mut patterns = Vec::new();
    if let Some(a) = &solution.allocation {
        check_allocation(&s, a).map_err(|detail| ExperimentError::Verification {
            method: Method::Opt,
            sweep_value: template.tx_power_dbm,
            realization: 0,
            detail,
        })?;
        let mut users = a.scheduled_users.clone();
        users.sort_unstable();
        for u in users {
            patterns.push((u, beampattern(&a.beams[u], &grid)?));
        }
    }
    Ok(BeampatternCase {
        scenario: s,
        solution,
        grid,
        patterns,
    })
}

/// Columns: `theta_deg`, then `user_<u>` for every scheduled user.
pub fn write_beampattern_csv(case: &BeampatternCase, path: &Path) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["theta_deg".to_string()];
    header.extend(case.patterns.iter().map(|(u, _)| format!("user_{u}")));
    w.write_record(&header)?;
    for (i, theta) in case.grid.iter().enumerate() {
        let mut line = vec![theta.to_string()];
        line.extend(case.patterns.iter().map(|(_, p)| p[i].to_string()));
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}
