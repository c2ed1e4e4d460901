//! `tppi` command-line pipeline: `ingest` → `analyze` → `allocate`.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tppi_core::analysis::WindowMode;
use tppi_core::ModelConfig;

use config::{parse_lags, parse_policies, OutputFormat, Overrides, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tppi", version, about = "Teen birth-rate AR/ARX analysis and grant allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse input CSVs and write dataset.json and ingest_report.jsonl.
    Ingest,
    /// Fit AR and ARX sweeps, write R² and ranking tables and models.json.
    Analyze,
    /// Build allocation plans, simulate next-year rates, write the scenario report.
    Allocate,
}

#[derive(Debug, Args)]
pub struct Flags {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Birth-rate statistics CSV (repeatable; merged in order).
    #[arg(long = "birth-rates", global = true)]
    pub birth_rates: Vec<PathBuf>,
    /// School enrollment CSV.
    #[arg(long, global = true)]
    pub schools: Option<PathBuf>,
    /// Annual budget in dollars.
    #[arg(long, global = true)]
    pub budget: Option<f64>,
    /// AR lag set, e.g. `1..5` or `1,2,3`.
    #[arg(long, global = true)]
    pub lags: Option<String>,
    /// Comma-separated policies.
    #[arg(long, global = true)]
    pub policies: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output directory (also where dataset.json and models.json live).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit SVG plots of overall R².
    #[arg(long, global = true)]
    pub plots: bool,
    /// AR sweep windowing: `max-data` or `aligned`.
    #[arg(long, global = true, value_parser = parse_window)]
    pub window: Option<WindowMode>,
}

fn parse_window(s: &str) -> Result<WindowMode, String> {
    match s {
        "max-data" | "max_data" => Ok(WindowMode::MaxData),
        "aligned" => Ok(WindowMode::Aligned),
        _ => Err(format!("unknown window mode `{s}` (max-data|aligned)")),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let f = cli.flags;
    let cfg = RunConfig::load(
        f.config.as_deref(),
        Overrides {
            birth_rates: f.birth_rates,
            schools: f.schools,
            budget: f.budget,
            lags: f.lags.as_deref().map(parse_lags).transpose().map_err(CliError::Config)?,
            policies: f
                .policies
                .as_deref()
                .map(parse_policies)
                .transpose()
                .map_err(CliError::Config)?,
            format: f.format,
            out: f.out,
            plots: f.plots,
            window_mode: f.window,
        },
    )?;
    match cli.command {
        Command::Ingest => {
            let b = commands::ingest(&cfg)?;
            println!(
                "ingested {} area series, {} schools ({} report entries); ${:.2} per student in {}",
                b.rate_series.len(),
                b.schools.len(),
                b.notes.len(),
                b.cost_per_student.dollars,
                b.cost_per_student.enrollment_year
            );
        }
        Command::Analyze => {
            let a = commands::analyze(&cfg)?;
            for s in a.ar.iter().chain(&a.arx) {
                let label = match s.config {
                    ModelConfig::Ar(c) => format!("AR l={}", c.lags),
                    ModelConfig::Arx(c) => format!("ARX {c}"),
                };
                println!("{label}: overall R² {} over {} areas", s.overall, s.n_areas);
            }
        }
        Command::Allocate => {
            let a = commands::allocate_cmd(&cfg)?;
            println!("baseline citywide rate {:.3}", a.report.baseline_citywide);
            for (p, m) in a.report.policies.iter().zip(&a.report.citywide) {
                println!("{p}: citywide rate {m:.3}");
            }
        }
    }
    Ok(())
}
