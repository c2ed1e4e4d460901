//! On-disk artifacts passed between subcommands.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tppi_core::ingest::{GrantSeries, IngestNote, SchoolRecord};
use tppi_core::{AreaCode, ArxConfig, RegressionFit, Series};

use crate::error::CliError;

pub const DATASET_FILE: &str = "dataset.json";
pub const MODELS_FILE: &str = "models.json";
pub const INGEST_REPORT_FILE: &str = "ingest_report.jsonl";

pub const GRANT_ASSUMPTION: &str =
    "historical grants assumed spent in proportion to school enrollment each year";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostPerStudent {
    pub enrollment_year: i32,
    pub total_students: u64,
    pub dollars: f64,
}

/// Everything `analyze` and `allocate` need from the raw inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub annual_budget: f64,
    pub grant_assumption: String,
    pub area_names: BTreeMap<AreaCode, String>,
    /// Birth rate per 1,000 females aged 15–19.
    pub rate_series: BTreeMap<AreaCode, Series>,
    /// Grant per area in thousands of dollars.
    pub grant_series: BTreeMap<AreaCode, GrantSeries>,
    pub schools: Vec<SchoolRecord>,
    pub notes: Vec<IngestNote>,
    pub cost_per_student: CostPerStudent,
}

impl DatasetBundle {
    pub fn area_name(&self, code: AreaCode) -> &str {
        self.area_names.get(&code).map_or("", String::as_str)
    }

    pub fn grant_as_series(&self) -> BTreeMap<AreaCode, Series> {
        self.grant_series
            .iter()
            .map(|(&a, g)| (a, g.to_series()))
            .collect()
    }

    /// Latest year with school enrollment data.
    pub fn latest_enrollment_year(&self) -> Option<i32> {
        self.schools
            .iter()
            .filter_map(|s| s.enrollment_by_year.keys().next_back().copied())
            .max()
    }
}

/// Fitted models handed from `analyze` to `allocate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub prediction_lag: usize,
    pub ar_models: BTreeMap<AreaCode, RegressionFit>,
    pub simulation_model: ArxConfig,
    pub arx_models: BTreeMap<AreaCode, RegressionFit>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingFile(path.to_path_buf()),
        _ => CliError::io(path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, format!("invalid JSON: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
