//! absorbtk: config-driven experiment runner for the absorption toolkit.
//!
//! Every command writes `<out>/<command>.csv` and `<command>.json` and exits
//! 0 when all metrics pass, 1 on a metric or numeric failure, 2 on a
//! configuration error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;
mod instance_file;
mod report;

use commands::CommandName;
use config::ExperimentConfig;
use report::RunReport;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("module error: {0}")]
    Module(#[from] absorbtk_core::Error),
}

impl CliError {
    /// Exit code class: config/parse problems are 2, numeric failures 1.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Parse(_) | CliError::Invariant(_) => 2,
            CliError::Io(_) | CliError::Module(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "absorbtk", version, about = "absorption-toolkit experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (line-oriented sections).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for randomized property sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for independent cells (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Tolerance override NAME=VALUE; repeatable.
    #[arg(long = "tolerance", global = true, value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the configured instances and report their Gram data.
    Instances,
    /// Telescoping, isometry-defect law, commutation and tail experiments.
    Absorb,
    /// Derivative-decay profile with both engines and the log-log slope.
    Decay,
    /// Leibniz/Hermitian residuals of the Grassmann connection.
    Connection,
    /// Symmetric-lift identities, composition formulas, GNS localization.
    Lift,
    /// Half-line deficiency probes and the regularisation contrast.
    Halfline,
    /// Run every experiment and summarise all metrics.
    VerifyAll,
}

impl Command {
    fn name(&self) -> CommandName {
        match self {
            Command::Instances => CommandName::Instances,
            Command::Absorb => CommandName::Absorb,
            Command::Decay => CommandName::Decay,
            Command::Connection => CommandName::Connection,
            Command::Lift => CommandName::Lift,
            Command::Halfline => CommandName::Halfline,
            Command::VerifyAll => CommandName::VerifyAll,
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for spec in &cli.tolerances {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--tolerance needs NAME=VALUE, got `{spec}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Config(format!("bad tolerance value in `{spec}`")))?;
        cfg.tolerances.set(name.trim(), value)?;
    }
    Ok(cfg)
}

fn output_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    if let Some(out) = &cfg.output_dir {
        return out.clone();
    }
    if let Ok(out) = std::env::var("ABSORBTK_OUT") {
        if !out.is_empty() {
            return PathBuf::from(out);
        }
    }
    PathBuf::from("absorbtk-out")
}

fn parameters_echo(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    vec![
        (
            "instances".into(),
            cfg.instances
                .iter()
                .map(|i| i.label())
                .collect::<Vec<_>>()
                .join(" "),
        ),
        (
            "levels".into(),
            cfg.levels
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        ),
        ("decay_range".into(), format!("{} {}", cfg.decay_range.0, cfg.decay_range.1)),
        ("grid_length".into(), cfg.grid_length.to_string()),
        (
            "grid_ladder".into(),
            cfg.grid_ladder
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        ),
        ("lift_length".into(), cfg.lift_length.to_string()),
        ("lift_levels".into(), cfg.lift_levels.to_string()),
        ("seed".into(), cfg.seed.to_string()),
    ]
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("absorbtk: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let out_dir = output_dir(&cli, &cfg);
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("absorbtk: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(2);
    }

    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            builder = builder.num_threads(t.max(1));
        }
        match builder.build() {
            Ok(p) => p,
            Err(e) => {
                eprintln!("absorbtk: thread pool: {e}");
                return ExitCode::from(2);
            }
        }
    };

    let name = cli.command.name();
    let started = Instant::now();
    let result = pool.install(|| commands::run(name, &cfg));
    let elapsed = started.elapsed().as_secs_f64();

    let csv_path = out_dir.join(format!("{}.csv", name.label()));
    let json_path = out_dir.join(format!("{}.json", name.label()));

    match result {
        Ok(output) => {
            let mut report = RunReport::new(name.label(), parameters_echo(&cfg), output.metrics);
            report.wall_time_seconds = elapsed;
            if let Err(e) = output.table.write(&csv_path) {
                eprintln!("absorbtk: {e}");
                return ExitCode::from(1);
            }
            if let Err(e) = report.write_json(&json_path) {
                eprintln!("absorbtk: {e}");
                return ExitCode::from(1);
            }
            for m in &report.metrics {
                println!(
                    "[{}] {} value {:.6e} bound {:.6e}",
                    if m.pass { "PASS" } else { "FAIL" },
                    m.name,
                    m.value,
                    m.bound
                );
            }
            println!(
                "{}: {} metrics, overall {} ({elapsed:.2}s) -> {}",
                name.label(),
                report.metrics.len(),
                if report.overall_pass { "PASS" } else { "FAIL" },
                out_dir.display()
            );
            if report.overall_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let code = e.exit_code();
            // embed the module error in the report, as the contract requires
            let mut report = RunReport::new(name.label(), parameters_echo(&cfg), vec![]);
            report.overall_pass = false;
            report.wall_time_seconds = elapsed;
            report.error = Some(e.to_string());
            let _ = report.write_json(&json_path);
            eprintln!("absorbtk: {e}");
            ExitCode::from(code)
        }
    }
}
