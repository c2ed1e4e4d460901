//! Lag designs, AR/ARX fitting, one-step forecasts and R².
//!
//! The AR(l) model is
//!
//! ```text
//! x_t = w_1 x_{t-1} + ... + w_l x_{t-l} + e_t
//! ```
//!
//! and the ARX(l, u, v) model adds `v` consecutive lags of an exogenous input
//! starting at delay `u`:
//!
//! ```text
//! x_t = w_1 x_{t-1} + ... + w_l x_{t-l} + b_1 y_{t-u} + ... + b_v y_{t-u-v+1} + e_t
//! ```
//!
//! Neither model has an intercept. Coefficients are always reported in this
//! right-hand-side form so AR and ARX endogenous weights compare directly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::linalg::solve_least_squares;
use crate::series::Series;

/// Values of SS_tot below this are treated as a zero-variance target.
pub const ZERO_VARIANCE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("series too short: need at least {needed} values, have {available}")]
    SeriesTooShort { needed: usize, available: usize },
    #[error("endogenous and exogenous series do not overlap")]
    YearMisalignment,
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: {actual} actual values vs {predicted} predicted")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("ARX model needs an exogenous history")]
    MissingExogenous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArConfig {
    pub lags: usize,
}

impl ArConfig {
    pub fn new(lags: usize) -> Self {
        ArConfig { lags }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArxConfig {
    /// `l`: number of autoregressive lags.
    pub endo_lags: usize,
    /// `u`: delay of the first exogenous lag.
    pub exo_delay: usize,
    /// `v`: number of consecutive exogenous lags.
    pub exo_lags: usize,
}

impl ArxConfig {
    pub fn new(endo_lags: usize, exo_delay: usize, exo_lags: usize) -> Self {
        ArxConfig {
            endo_lags,
            exo_delay,
            exo_lags,
        }
    }

    pub fn n_params(&self) -> usize {
        self.endo_lags + self.exo_lags
    }

    /// Oldest exogenous lag referenced, relative to the target year.
    fn exo_span(&self) -> usize {
        self.exo_delay + self.exo_lags - 1
    }

    pub fn span(&self) -> usize {
        self.endo_lags.max(self.exo_span())
    }

    fn validate(&self) -> Result<(), RegressionError> {
        if self.endo_lags == 0 || self.exo_delay == 0 || self.exo_lags == 0 {
            return Err(RegressionError::InvalidConfig(format!(
                "l, u and v must all be >= 1 (got {self})"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ArxConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<l={}, u={}, v={}>",
            self.endo_lags, self.exo_delay, self.exo_lags
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelConfig {
    Ar(ArConfig),
    Arx(ArxConfig),
}

impl ModelConfig {
    pub fn endo_lags(&self) -> usize {
        match self {
            ModelConfig::Ar(c) => c.lags,
            ModelConfig::Arx(c) => c.endo_lags,
        }
    }

    pub fn exo_lags(&self) -> usize {
        match self {
            ModelConfig::Ar(_) => 0,
            ModelConfig::Arx(c) => c.exo_lags,
        }
    }

    pub fn n_params(&self) -> usize {
        self.endo_lags() + self.exo_lags()
    }
}

impl From<ArConfig> for ModelConfig {
    fn from(c: ArConfig) -> Self {
        ModelConfig::Ar(c)
    }
}

impl From<ArxConfig> for ModelConfig {
    fn from(c: ArxConfig) -> Self {
        ModelConfig::Arx(c)
    }
}

/// A lag-embedded regression problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub matrix: DMatrix<f64>,
    pub target: Vec<f64>,
    pub target_years: Vec<i32>,
}

impl Design {
    pub fn n_samples(&self) -> usize {
        self.target.len()
    }

    /// Keep only the first `n` columns.
    pub fn leading_columns(&self, n: usize) -> Design {
        Design {
            matrix: self.matrix.columns(0, n).into_owned(),
            target: self.target.clone(),
            target_years: self.target_years.clone(),
        }
    }
}

/// Row for target year `t` is `[x_{t-1}, ..., x_{t-l}]`.
pub fn build_ar_design(series: &Series, cfg: ArConfig) -> Result<Design, RegressionError> {
    if cfg.lags == 0 {
        return Err(RegressionError::InvalidConfig("lags must be >= 1".into()));
    }
    let l = cfg.lags;
    let x = series.values();
    if x.len() <= l {
        return Err(RegressionError::SeriesTooShort {
            needed: l + 1,
            available: x.len(),
        });
    }
    let rows = x.len() - l;
    let matrix = DMatrix::from_fn(rows, l, |r, c| x[r + l - 1 - c]);
    let target = x[l..].to_vec();
    let target_years = (l..x.len())
        .map(|i| series.start_year() + i as i32)
        .collect();
    Ok(Design {
        matrix,
        target,
        target_years,
    })
}

/// Row for target year `t` is `[x_{t-1}, ..., x_{t-l}, y_{t-u}, ..., y_{t-u-v+1}]`.
///
/// Only the overlap of the two series is used: every year referenced by a row
/// (target and all lags) lies inside both series.
pub fn build_arx_design(
    endo: &Series,
    exo: &Series,
    cfg: ArxConfig,
) -> Result<Design, RegressionError> {
    cfg.validate()?;
    let lo = endo.start_year().max(exo.start_year());
    let hi = endo.end_year().min(exo.end_year());
    if lo > hi {
        return Err(RegressionError::YearMisalignment);
    }
    let overlap = (hi - lo + 1) as usize;
    let span = cfg.span();
    if overlap <= span {
        return Err(RegressionError::SeriesTooShort {
            needed: span + 1,
            available: overlap,
        });
    }

    let first_target = lo + span as i32;
    let target_years: Vec<i32> = (first_target..=hi).collect();
    let l = cfg.endo_lags;
    let at = |s: &Series, year: i32| s.get(year).expect("year inside overlap");
    let matrix = DMatrix::from_fn(target_years.len(), cfg.n_params(), |r, c| {
        let t = target_years[r];
        if c < l {
            at(endo, t - 1 - c as i32)
        } else {
            at(exo, t - (cfg.exo_delay + (c - l)) as i32)
        }
    });
    let target = target_years.iter().map(|&t| at(endo, t)).collect();
    Ok(Design {
        matrix,
        target,
        target_years,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub config: ModelConfig,
    /// `w_1..w_l` in right-hand-side form.
    pub endo_coeffs: Vec<f64>,
    /// `b_1..b_v`; empty for AR.
    pub exo_coeffs: Vec<f64>,
    pub target_years: Vec<i32>,
    pub actual: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n_samples: usize,
    pub n_params: usize,
}

impl RegressionFit {
    /// Fit `design` by minimum-norm least squares. The design's columns must
    /// be laid out as `config` describes.
    pub fn from_design(config: ModelConfig, design: &Design) -> RegressionFit {
        assert_eq!(design.matrix.ncols(), config.n_params());
        let coeffs = solve_least_squares(&design.matrix, &design.target);
        let fitted: Vec<f64> = (&design.matrix * nalgebra::DVector::from_column_slice(&coeffs))
            .iter()
            .copied()
            .collect();
        let residuals = design
            .target
            .iter()
            .zip(&fitted)
            .map(|(a, f)| a - f)
            .collect();
        let l = config.endo_lags();
        RegressionFit {
            config,
            endo_coeffs: coeffs[..l].to_vec(),
            exo_coeffs: coeffs[l..].to_vec(),
            target_years: design.target_years.clone(),
            actual: design.target.clone(),
            fitted,
            residuals,
            n_samples: design.n_samples(),
            n_params: config.n_params(),
        }
    }

    /// A model with given coefficients and no training samples, for forecasting.
    pub fn from_coefficients(
        config: ModelConfig,
        endo_coeffs: Vec<f64>,
        exo_coeffs: Vec<f64>,
    ) -> Result<RegressionFit, RegressionError> {
        if endo_coeffs.len() != config.endo_lags() || exo_coeffs.len() != config.exo_lags() {
            return Err(RegressionError::InvalidConfig(format!(
                "expected {} endogenous and {} exogenous coefficients",
                config.endo_lags(),
                config.exo_lags()
            )));
        }
        Ok(RegressionFit {
            config,
            endo_coeffs,
            exo_coeffs,
            target_years: vec![],
            actual: vec![],
            fitted: vec![],
            residuals: vec![],
            n_samples: 0,
            n_params: config.n_params(),
        })
    }

    pub fn r_squared(&self) -> RSquared {
        r_squared(&self.actual, &self.fitted).expect("fit vectors have equal length")
    }

    pub fn ss_res(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }

    /// Coefficient on the most recent exogenous lag.
    pub fn grant_effect(&self) -> Option<f64> {
        self.exo_coeffs.first().copied()
    }
}

pub fn fit_ar(series: &Series, cfg: ArConfig) -> Result<RegressionFit, RegressionError> {
    let design = build_ar_design(series, cfg)?;
    Ok(RegressionFit::from_design(cfg.into(), &design))
}

pub fn fit_arx(
    endo: &Series,
    exo: &Series,
    cfg: ArxConfig,
) -> Result<RegressionFit, RegressionError> {
    let design = build_arx_design(endo, exo, cfg)?;
    Ok(RegressionFit::from_design(cfg.into(), &design))
}

/// One-step-ahead forecast for the year after the last endogenous value.
///
/// Lags are looked up by year, so `exo_history` may end anywhere as long as
/// it covers `t-u .. t-u-v+1`.
pub fn predict_next(
    fit: &RegressionFit,
    endo_history: &Series,
    exo_history: Option<&Series>,
) -> Result<f64, RegressionError> {
    let t = endo_history.end_year() + 1;
    let l = fit.config.endo_lags();
    if endo_history.len() < l {
        return Err(RegressionError::SeriesTooShort {
            needed: l,
            available: endo_history.len(),
        });
    }
    let mut value: f64 = fit
        .endo_coeffs
        .iter()
        .enumerate()
        .map(|(i, w)| w * endo_history.get(t - 1 - i as i32).expect("checked length"))
        .sum();

    if let ModelConfig::Arx(cfg) = fit.config {
        let exo = exo_history.ok_or(RegressionError::MissingExogenous)?;
        for (j, b) in fit.exo_coeffs.iter().enumerate() {
            let year = t - (cfg.exo_delay + j) as i32;
            let y = exo.get(year).ok_or(RegressionError::SeriesTooShort {
                needed: cfg.exo_span(),
                available: exo.len(),
            })?;
            value += b * y;
        }
    }
    Ok(value)
}

/// Coefficient of determination, or `Undefined` for a zero-variance target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum RSquared {
    Value(f64),
    Undefined,
}

impl RSquared {
    pub fn value(&self) -> Option<f64> {
        match *self {
            RSquared::Value(v) => Some(v),
            RSquared::Undefined => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, RSquared::Value(_))
    }
}

impl From<Option<f64>> for RSquared {
    fn from(v: Option<f64>) -> Self {
        v.map_or(RSquared::Undefined, RSquared::Value)
    }
}

impl From<RSquared> for Option<f64> {
    fn from(r: RSquared) -> Self {
        r.value()
    }
}

impl fmt::Display for RSquared {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RSquared::Value(v) => write!(f, "{v}"),
            RSquared::Undefined => f.write_str("undefined"),
        }
    }
}

/// `1 - SS_res / SS_tot`, unclamped. Exactly 1 when SS_res is negligible
/// against SS_tot.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<RSquared, RegressionError> {
    if actual.len() != predicted.len() {
        return Err(RegressionError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Ok(RSquared::Undefined);
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot < ZERO_VARIANCE_TOL {
        return Ok(RSquared::Undefined);
    }
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    if ss_res <= ZERO_VARIANCE_TOL * ss_tot {
        return Ok(RSquared::Value(1.0));
    }
    Ok(RSquared::Value(1.0 - ss_res / ss_tot))
}
