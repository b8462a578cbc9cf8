use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcomp_cli::config::{ConfigError, ExperimentConfig, Format};
use qcomp_cli::experiments::{self, param_tag, series};
use qcomp_cli::report::{write_report, write_series, ReportRow, Status};

#[derive(Parser, Debug)]
#[command(name = "qcomp", version, about = "Typical-subspace compression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Largest block dimension for dense matrices.
    #[arg(long, global = true)]
    dense_cap: Option<usize>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// beta/n and typical-subspace statistics per (n, epsilon).
    Aep,
    /// Entanglement fidelity of epsilon-mode compression schemes.
    Compress,
    /// Decay of 6 eta_d for rates below the entropy rate.
    Subrate,
    /// Run every property suite and print a summary.
    Validate,
}

enum Failure {
    Config(String),
    Invariant,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("io error: {e}"))
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(cap) = cli.dense_cap {
        cfg.dense_cap = cap;
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    cfg.check()?;
    Ok(cfg)
}

fn finish(cfg: &ExperimentConfig, name: &str, rows: &[ReportRow]) -> Result<(), Failure> {
    let path = write_report(&cfg.out, name, rows, cfg.format)?;
    let count = |s: Status| rows.iter().filter(|r| r.status == s).count();
    println!(
        "{name}: {} rows ({} ok, {} warning, {} skipped, {} failed) -> {}",
        rows.len(),
        count(Status::Ok),
        count(Status::Warning),
        count(Status::Skipped),
        count(Status::Fail),
        path.display()
    );
    for row in rows.iter().filter(|r| r.status == Status::Fail) {
        eprintln!(
            "FAIL {name} n={} {}={} reason={}",
            row.n,
            row.param_kind,
            row.param,
            row.reason.as_deref().unwrap_or("")
        );
    }
    if count(Status::Fail) > 0 {
        return Err(Failure::Invariant);
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    match cli.command {
        Command::Aep => {
            let src = cfg.build_source()?;
            let rows = experiments::aep(&cfg, &src);
            for eps in &cfg.epsilon_list {
                let points = series(&rows, *eps, |r| r.beta_rate);
                write_series(
                    &cfg.out,
                    &format!("aep_beta_rate_eps{}", param_tag(*eps)),
                    "n",
                    "beta/n",
                    &points,
                )?;
            }
            finish(&cfg, "aep", &rows)
        }
        Command::Compress => {
            let src = cfg.build_source()?;
            let rows = experiments::compress(&cfg, &src);
            let scheduled: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.param_kind == "epsilon_schedule")
                .filter_map(|r| r.fe.map(|fe| (r.n as f64, fe)))
                .collect();
            write_series(&cfg.out, "compress_fe_schedule", "n", "F_e", &scheduled)?;
            finish(&cfg, "compress", &rows)
        }
        Command::Subrate => {
            let src = cfg.build_source()?;
            let rows = experiments::subrate(&cfg, &src);
            for r in &cfg.target_rates {
                let points = series(&rows, *r, |row| row.six_eta);
                write_series(
                    &cfg.out,
                    &format!("subrate_six_eta_R{}", param_tag(*r)),
                    "n",
                    "6eta",
                    &points,
                )?;
            }
            finish(&cfg, "subrate", &rows)
        }
        Command::Validate => {
            let outcome = experiments::validate(&cfg);
            for line in outcome.summary_lines() {
                println!("{line}");
            }
            std::fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("validate.csv");
            std::fs::write(&path, outcome.csv()?)?;
            if outcome.passed() {
                Ok(())
            } else {
                Err(Failure::Invariant)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
