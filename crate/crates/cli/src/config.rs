//! Run configuration: a JSON file plus command-line overrides (flags win).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tppi_core::allocation::PolicyKind;
use tppi_core::analysis::{default_arx_configs, WindowMode, DEFAULT_LAGS};
use tppi_core::ArxConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Birth-rate statistics files, merged in order.
    pub birth_rates: Vec<PathBuf>,
    pub schools: Option<PathBuf>,
    /// Dollars per program year.
    pub annual_budget: f64,
    pub lags: Vec<usize>,
    pub arx_configs: Vec<ArxConfig>,
    pub policies: Vec<PolicyKind>,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub plots: bool,
    pub window_mode: WindowMode,
    pub top_n: usize,
    /// AR order used for the prediction-based policy's next-year forecasts.
    pub prediction_lag: usize,
    /// ARX model used for effectiveness weights and scenario simulation.
    pub simulation_model: ArxConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            birth_rates: vec![],
            schools: None,
            annual_budget: tppi_core::DEFAULT_ANNUAL_BUDGET,
            lags: DEFAULT_LAGS.to_vec(),
            arx_configs: default_arx_configs(),
            policies: PolicyKind::ALL.to_vec(),
            out: PathBuf::from("out"),
            format: OutputFormat::Csv,
            plots: false,
            window_mode: WindowMode::MaxData,
            top_n: 10,
            prediction_lag: 3,
            simulation_model: ArxConfig::new(1, 1, 1),
        }
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub birth_rates: Vec<PathBuf>,
    pub schools: Option<PathBuf>,
    pub budget: Option<f64>,
    pub lags: Option<Vec<usize>>,
    pub policies: Option<Vec<PolicyKind>>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub plots: bool,
    pub window_mode: Option<WindowMode>,
}

impl RunConfig {
    /// Load `path` (relative input paths resolve against its directory) or
    /// start from defaults, then apply `overrides`.
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<RunConfig, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => CliError::MissingFile(p.to_path_buf()),
                    _ => CliError::io(p, e),
                })?;
                let mut cfg: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let base = p.parent().unwrap_or(Path::new(""));
                for f in &mut cfg.birth_rates {
                    *f = base.join(&*f);
                }
                if let Some(s) = &mut cfg.schools {
                    *s = base.join(&*s);
                }
                cfg.out = base.join(&cfg.out);
                cfg
            }
            None => RunConfig::default(),
        };

        if !overrides.birth_rates.is_empty() {
            cfg.birth_rates = overrides.birth_rates;
        }
        if let Some(s) = overrides.schools {
            cfg.schools = Some(s);
        }
        if let Some(b) = overrides.budget {
            cfg.annual_budget = b;
        }
        if let Some(l) = overrides.lags {
            cfg.lags = l;
        }
        if let Some(p) = overrides.policies {
            cfg.policies = p;
        }
        if let Some(f) = overrides.format {
            cfg.format = f;
        }
        if let Some(o) = overrides.out {
            cfg.out = o;
        }
        if let Some(w) = overrides.window_mode {
            cfg.window_mode = w;
        }
        cfg.plots |= overrides.plots;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.annual_budget.is_finite() && self.annual_budget > 0.0) {
            return Err(CliError::Config(format!(
                "budget must be positive, got {}",
                self.annual_budget
            )));
        }
        if self.lags.is_empty() || self.lags.contains(&0) {
            return Err(CliError::Config("lags must be a nonempty set of positive integers".into()));
        }
        if self.arx_configs.is_empty() {
            return Err(CliError::Config("arx_configs is empty".into()));
        }
        if self.policies.is_empty() {
            return Err(CliError::Config("no policies selected".into()));
        }
        if self.top_n == 0 || self.prediction_lag == 0 {
            return Err(CliError::Config("top_n and prediction_lag must be >= 1".into()));
        }
        let m = self.simulation_model;
        if m.endo_lags == 0 || m.exo_delay == 0 || m.exo_lags == 0 {
            return Err(CliError::Config("simulation_model lags must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parse `1..5`, `1..=5` or `1,2,3`.
pub fn parse_lags(s: &str) -> Result<Vec<usize>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid lag `{t}`"))
    };
    let lags: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (lo, hi) = (num(a)?, num(b.trim_start_matches('='))?);
        if lo > hi {
            return Err(format!("empty lag range `{s}`"));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if lags.is_empty() || lags.contains(&0) {
        return Err("lags must be positive".into());
    }
    Ok(lags)
}

pub fn parse_policies(s: &str) -> Result<Vec<PolicyKind>, String> {
    s.split(',').map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_syntax() {
        assert_eq!(parse_lags("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_lags("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_lags("1,3").unwrap(), vec![1, 3]);
        assert!(parse_lags("0..2").is_err());
        assert!(parse_lags("5..1").is_err());
        assert!(parse_lags("a").is_err());
    }

    #[test]
    fn policy_list() {
        assert_eq!(
            parse_policies("equal_per_school,effectiveness_based").unwrap(),
            vec![PolicyKind::EqualPerSchool, PolicyKind::EffectivenessBased]
        );
        assert!(parse_policies("equal_per_school,nope").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = std::env::temp_dir().join(format!("tppi-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(
            &path,
            r#"{"schools":"s.csv","annual_budget":100.0,"lags":[1,2]}"#,
        )
        .unwrap();
        let cfg = RunConfig::load(
            Some(&path),
            Overrides {
                budget: Some(250.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.annual_budget, 250.0);
        assert_eq!(cfg.lags, vec![1, 2]);
        assert_eq!(cfg.schools, Some(dir.join("s.csv")));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_bad_budget() {
        let err = RunConfig::load(
            None,
            Overrides {
                budget: Some(-1.0),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_INPUT);
    }
}
