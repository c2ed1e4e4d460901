//! Lag-depth sweeps over all community areas and the rankings built from them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regression::{
    build_ar_design, fit_ar, fit_arx, r_squared, ArConfig, ArxConfig, ModelConfig, RSquared,
    RegressionFit,
};
use crate::series::Series;
use crate::AreaCode;

pub const DEFAULT_LAGS: [usize; 5] = [1, 2, 3, 4, 5];

pub fn default_arx_configs() -> Vec<ArxConfig> {
    vec![
        ArxConfig::new(1, 1, 1),
        ArxConfig::new(2, 1, 1),
        ArxConfig::new(1, 1, 2),
        ArxConfig::new(2, 1, 2),
    ]
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
}

/// Which target years each lag depth in an AR sweep is fit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Every lag uses all of its usable rows.
    #[default]
    MaxData,
    /// Every lag uses the target years of the largest lag, so fits are nested.
    Aligned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaFitResult {
    pub area_code: AreaCode,
    pub fit: RegressionFit,
    pub r2: RSquared,
}

impl AreaFitResult {
    fn new(area_code: AreaCode, fit: RegressionFit) -> Self {
        let r2 = fit.r_squared();
        AreaFitResult {
            area_code,
            fit,
            r2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedArea {
    pub area_code: AreaCode,
    pub reason: String,
}

/// Everything one model configuration produced across all areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config: ModelConfig,
    /// R² over the pooled (actual, fitted) pairs of every area with a defined R².
    pub overall: RSquared,
    /// Areas contributing to the pool.
    pub n_areas: usize,
    /// Samples in the pool.
    pub n_samples: usize,
    pub results: Vec<AreaFitResult>,
    pub skipped: Vec<SkippedArea>,
}

impl SweepSummary {
    fn from_results(
        config: ModelConfig,
        results: Vec<AreaFitResult>,
        skipped: Vec<SkippedArea>,
    ) -> Self {
        let mut actual = Vec::new();
        let mut fitted = Vec::new();
        let mut n_areas = 0;
        for r in results.iter().filter(|r| r.r2.is_defined()) {
            actual.extend_from_slice(&r.fit.actual);
            fitted.extend_from_slice(&r.fit.fitted);
            n_areas += 1;
        }
        let overall = r_squared(&actual, &fitted).expect("pooled vectors align");
        SweepSummary {
            config,
            overall,
            n_areas,
            n_samples: actual.len(),
            results,
            skipped,
        }
    }

    pub fn result(&self, area: AreaCode) -> Option<&AreaFitResult> {
        self.results.iter().find(|r| r.area_code == area)
    }
}

fn check_lags(lags: &[usize]) -> Result<(), AnalysisError> {
    if lags.is_empty() {
        return Err(AnalysisError::InvalidConfig("lag set is empty".into()));
    }
    if lags.contains(&0) {
        return Err(AnalysisError::InvalidConfig("lags must be >= 1".into()));
    }
    Ok(())
}

/// Fit AR(l) for every area and every `l` in `lags`. Summaries come back in
/// `lags` order.
pub fn run_ar_sweep(
    x: &BTreeMap<AreaCode, Series>,
    lags: &[usize],
    mode: WindowMode,
) -> Result<Vec<SweepSummary>, AnalysisError> {
    check_lags(lags)?;
    if x.is_empty() {
        return Err(AnalysisError::EmptyDataset("no birth-rate series"));
    }
    let max_lag = *lags.iter().max().expect("nonempty");

    let summaries = match mode {
        WindowMode::MaxData => lags
            .iter()
            .map(|&l| {
                let mut results = Vec::new();
                let mut skipped = Vec::new();
                for (&area, series) in x {
                    match fit_ar(series, ArConfig::new(l)) {
                        Ok(fit) => results.push(AreaFitResult::new(area, fit)),
                        Err(e) => skipped.push(SkippedArea {
                            area_code: area,
                            reason: e.to_string(),
                        }),
                    }
                }
                SweepSummary::from_results(ArConfig::new(l).into(), results, skipped)
            })
            .collect(),
        WindowMode::Aligned => {
            let mut designs = Vec::new();
            let mut skipped = Vec::new();
            for (&area, series) in x {
                match build_ar_design(series, ArConfig::new(max_lag)) {
                    Ok(d) => designs.push((area, d)),
                    Err(e) => skipped.push(SkippedArea {
                        area_code: area,
                        reason: e.to_string(),
                    }),
                }
            }
            lags.iter()
                .map(|&l| {
                    let config: ModelConfig = ArConfig::new(l).into();
                    let results = designs
                        .iter()
                        .map(|(area, d)| {
                            let fit = RegressionFit::from_design(config, &d.leading_columns(l));
                            AreaFitResult::new(*area, fit)
                        })
                        .collect();
                    SweepSummary::from_results(config, results, skipped.clone())
                })
                .collect()
        }
    };
    Ok(summaries)
}

/// Fit every ARX configuration for every area present in both `x` and `y`,
/// restricted to the years the two series share.
pub fn run_arx_sweep(
    x: &BTreeMap<AreaCode, Series>,
    y: &BTreeMap<AreaCode, Series>,
    configs: &[ArxConfig],
) -> Result<Vec<SweepSummary>, AnalysisError> {
    if configs.is_empty() {
        return Err(AnalysisError::InvalidConfig("ARX config set is empty".into()));
    }
    if x.is_empty() {
        return Err(AnalysisError::EmptyDataset("no birth-rate series"));
    }
    if y.is_empty() {
        return Err(AnalysisError::EmptyDataset("no grant series"));
    }
    let mut out = Vec::with_capacity(configs.len());
    for &cfg in configs {
        let mut results = Vec::new();
        let mut skipped = Vec::new();
        for (&area, endo) in x {
            let Some(exo) = y.get(&area) else {
                skipped.push(SkippedArea {
                    area_code: area,
                    reason: "no grant series".into(),
                });
                continue;
            };
            match fit_arx(endo, exo, cfg) {
                Ok(fit) => results.push(AreaFitResult::new(area, fit)),
                Err(e) => skipped.push(SkippedArea {
                    area_code: area,
                    reason: e.to_string(),
                }),
            }
        }
        out.push(SweepSummary::from_results(cfg.into(), results, skipped));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedArea {
    pub area_code: AreaCode,
    pub r2: f64,
}

/// Highest R² first; undefined R² dropped; ties by ascending area code.
pub fn rank_by_r2(results: &[AreaFitResult], top_n: usize) -> Vec<RankedArea> {
    let mut ranked: Vec<RankedArea> = results
        .iter()
        .filter_map(|r| {
            r.r2.value().map(|r2| RankedArea {
                area_code: r.area_code,
                r2,
            })
        })
        .collect();
    ranked.sort_by(|a, b| b.r2.total_cmp(&a.r2).then(a.area_code.cmp(&b.area_code)));
    ranked.truncate(top_n);
    ranked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessEntry {
    pub area_code: AreaCode,
    /// `b_1`: birth-rate points per thousand dollars of last year's grant.
    pub coefficient: f64,
    /// `b_2..b_v`, reported but not ranked on.
    pub later_lags: Vec<f64>,
    pub config: ArxConfig,
}

/// Most negative `b_1` first (largest estimated reduction per dollar); ties
/// by ascending area code.
pub fn rank_effectiveness(results: &[AreaFitResult], top_n: usize) -> Vec<EffectivenessEntry> {
    let mut entries: Vec<EffectivenessEntry> = results
        .iter()
        .filter_map(|r| {
            let ModelConfig::Arx(config) = r.fit.config else {
                return None;
            };
            let (&first, rest) = r.fit.exo_coeffs.split_first()?;
            Some(EffectivenessEntry {
                area_code: r.area_code,
                coefficient: first,
                later_lags: rest.to_vec(),
                config,
            })
        })
        .collect();
    entries.sort_by(|a, b| {
        a.coefficient
            .total_cmp(&b.coefficient)
            .then(a.area_code.cmp(&b.area_code))
    });
    entries.truncate(top_n);
    entries
}

/// Areas present in every one of the given rankings.
pub fn stable_areas(rankings: &[Vec<EffectivenessEntry>]) -> Vec<AreaCode> {
    let Some((first, rest)) = rankings.split_first() else {
        return vec![];
    };
    let mut common: BTreeSet<AreaCode> = first.iter().map(|e| e.area_code).collect();
    for r in rest {
        let these: BTreeSet<AreaCode> = r.iter().map(|e| e.area_code).collect();
        common = common.intersection(&these).copied().collect();
    }
    common.into_iter().collect()
}
