//! Report tables. Each table is written as `<stem>.csv` or `<stem>.json`
//! with the same rows and field names.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bundle::write_json;
use crate::config::OutputFormat;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2ByLagRow {
    pub lag: usize,
    pub overall_r2: Option<f64>,
    pub n_areas: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2ByArxRow {
    pub l: usize,
    pub u: usize,
    pub v: usize,
    pub overall_r2: Option<f64>,
    pub n_areas: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopArRow {
    pub rank: usize,
    pub lag: usize,
    pub area_code: u16,
    pub area_name: String,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopEffectivenessRow {
    pub rank: usize,
    pub l: usize,
    pub v: usize,
    pub area_code: u16,
    pub area_name: String,
    pub coeff_per_thousand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableAreaRow {
    pub area_code: u16,
    pub area_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub school_id: String,
    pub school_name: String,
    pub area_code: u16,
    /// Dollars, rounded to cents.
    pub amount: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummaryRow {
    pub rank: usize,
    pub policy: String,
    pub weighting: String,
    pub citywide_mean_rate: f64,
    pub baseline_citywide_rate: f64,
    pub fell_back: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaWinnerRow {
    pub area_code: u16,
    pub area_name: String,
    pub policy: String,
    pub rate: f64,
}

pub fn cents(dollars: f64) -> String {
    let s = format!("{dollars:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub fn table_path(dir: &Path, stem: &str, format: OutputFormat) -> PathBuf {
    dir.join(match format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    })
}

pub fn write_table<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: OutputFormat,
    rows: &[T],
) -> Result<PathBuf, CliError> {
    let path = table_path(dir, stem, format);
    match format {
        OutputFormat::Json => write_json(&path, &rows)?,
        OutputFormat::Csv => write_csv(&path, rows)?,
    }
    Ok(path)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// CSV with caller-supplied header, for tables whose columns depend on input.
pub fn write_raw_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cents_rounding() {
        assert_eq!(cents(30_307.692_307), "30307.69");
        assert_eq!(cents(-0.001), "0.00");
        assert_eq!(cents(0.0), "0.00");
    }

    #[test]
    fn undefined_r2_is_empty_in_csv() {
        let dir = std::env::temp_dir().join(format!("tppi-out-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rows = vec![R2ByLagRow {
            lag: 1,
            overall_r2: None,
            n_areas: 0,
            n_samples: 0,
        }];
        let path = write_table(&dir, "t", OutputFormat::Csv, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "lag,overall_r2,n_areas,n_samples\n1,,0,0\n");
        let back: Vec<R2ByLagRow> = csv::Reader::from_path(&path)
            .unwrap()
            .deserialize()
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(back, rows);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
