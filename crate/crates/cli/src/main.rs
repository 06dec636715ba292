use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use isac_cli::check::{compare, exact_settings};
use isac_cli::experiment::{
    run_beampattern_case, run_sweep, write_beampattern_csv, write_outputs, ExperimentConfig, Method,
};
use isac_cli::tiny::{random_instance, TinyShape};
use isac_core::{build_codebook, build_milp, ScenarioTemplate};
use milp::MilpSettings;

#[derive(Parser)]
#[command(
    name = "isac",
    version,
    about = "Joint ISAC scheduling, pairing and phase-only beamforming experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (experiment file for `sweep`, scenario file otherwise).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed stored in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative optimality gap of the branch-and-bound.
    #[arg(long)]
    gap: Option<f64>,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a transmit-power or SINR-threshold sweep over all realizations.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of OPT,BL1,BL2,BL3,BL4.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        /// Worker threads over realizations.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Overrides the number of realizations.
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Solves a fixed scenario and writes the beampatterns of the scheduled users.
    Beampattern {
        #[command(flatten)]
        common: Common,
    },
    /// Compares the mixed-binary optimum with exhaustive search.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Number of random tiny instances used when no config is given.
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// Writes the mixed-binary model of a scenario in LP format.
    ExportLp {
        #[command(flatten)]
        common: Common,
    },
}

fn settings(gap: Option<f64>, default: MilpSettings) -> MilpSettings {
    match gap {
        Some(g) => MilpSettings {
            rel_gap: g,
            ..default
        },
        None => default,
    }
}

fn sweep(
    common: Common,
    methods: Option<Vec<Method>>,
    threads: usize,
    realizations: Option<usize>,
) -> Result<()> {
    let path = common.config.context("--config is required")?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(gap) = common.gap {
        cfg.rel_gap = gap;
    }
    if let Some(m) = methods {
        cfg.methods = m;
    }
    if let Some(r) = realizations {
        cfg.realizations = r;
    }
    if let Some(out) = common.out {
        cfg.out_dir = out;
    }
    cfg.validate()?;
    let records = run_sweep(&cfg, threads)?;
    let summary = write_outputs(&cfg.out_dir, &cfg, &records)?;
    println!("method,{},feasible,mean_tau", cfg.sweep.as_str());
    for row in summary {
        let tau = row
            .mean_tau
            .map_or_else(|| "-".to_string(), |t| format!("{t:.6}"));
        println!(
            "{},{},{}/{},{}",
            row.method, row.sweep_value, row.feasible, row.realizations, tau
        );
    }
    println!("results written to {}", cfg.out_dir.display());
    Ok(())
}

fn beampattern(common: Common) -> Result<()> {
    let path = common.config.context("--config is required")?;
    let case = run_beampattern_case(&path, &settings(common.gap, MilpSettings::default()))?;
    let report = &case.solution.report;
    println!(
        "status: {}  nodes: {}  gap: {:.3e}",
        report.status.as_str(),
        report.nodes,
        report.gap
    );
    let Some(a) = &case.solution.allocation else {
        bail!("the scenario is infeasible ({})", report.status.as_str());
    };
    println!("tau: {:.6}", a.tau);
    println!("scheduled users: {:?}", a.scheduled_users);
    println!("scheduled targets: {:?}", a.scheduled_targets);
    for &(t, u) in &a.pairing {
        println!("target {t} <- user {u}");
    }
    let out = common
        .out
        .unwrap_or_else(|| PathBuf::from("results/beampattern.csv"));
    write_beampattern_csv(&case, &out)?;
    println!("beampatterns written to {}", out.display());
    Ok(())
}

fn oracle_check(common: Common, instances: usize) -> Result<bool> {
    let settings = settings(common.gap, exact_settings());
    let scenarios = match &common.config {
        Some(path) => {
            let t = ScenarioTemplate::load(path)?;
            vec![t.realize(common.seed.unwrap_or(t.seed))?.normalize()?]
        }
        None => {
            let base = common.seed.unwrap_or(0);
            (0..instances as u64)
                .map(|i| random_instance(base + i, &TinyShape::default()))
                .collect()
        }
    };
    let mut all_agree = true;
    for (i, s) in scenarios.iter().enumerate() {
        let c = compare(s, &settings)?;
        let show =
            |v: Option<f64>| v.map_or_else(|| "infeasible".to_string(), |t| format!("{t:.9}"));
        println!(
            "instance {i}: N={} U={} K={} T={} J={} Q={}  oracle {}  milp {}  {}",
            s.n_antennas,
            s.n_users,
            s.n_rf_chains,
            s.n_targets,
            s.n_sched_targets,
            s.phase_bits,
            show(c.oracle.tau),
            show(c.milp_tau()),
            if c.agrees() { "ok" } else { "MISMATCH" }
        );
        all_agree &= c.agrees();
    }
    Ok(all_agree)
}

fn export_lp(common: Common) -> Result<()> {
    let path = common.config.context("--config is required")?;
    let t = ScenarioTemplate::load(&path)?;
    let s = t.realize(common.seed.unwrap_or(t.seed))?.normalize()?;
    let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas)?;
    let (model, _) = build_milp(&s, &cb)?;
    let out = common.out.unwrap_or_else(|| PathBuf::from("model.lp"));
    let mut w =
        BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
    milp::lp_format::write_lp(&model, &mut w)?;
    println!(
        "{} variables ({} binary), {} constraints written to {}",
        model.num_vars(),
        model.num_binaries(),
        model.num_constraints(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep {
            common,
            methods,
            threads,
            realizations,
        } => sweep(common, methods, threads, realizations).map(|_| true),
        Command::Beampattern { common } => beampattern(common).map(|_| true),
        Command::OracleCheck { common, instances } => oracle_check(common, instances),
        Command::ExportLp { common } => export_lp(common).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: the model and exhaustive search disagree");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
