//! Per-community AR/ARX modelling of teen birth rates against grant spending,
//! plus allocation policies and their simulated outcomes.
//!
//! The pipeline is:
//!
//! 1. [`ingest`] parses birth-rate and school-enrollment CSVs and builds the
//!    per-area birth-rate series `x` and grant series `y`.
//! 2. [`regression`] builds lag designs and fits AR / ARX models by
//!    minimum-norm least squares ([`linalg`]).
//! 3. [`analysis`] sweeps lag depths across all areas and ranks areas by R²
//!    and by grant effectiveness.
//! 4. [`allocation`] turns a budget into per-school plans under four policies
//!    and predicts next-year rates for each plan.

pub mod allocation;
pub mod analysis;
pub mod ingest;
pub mod linalg;
pub mod regression;
pub mod series;
pub mod synthetic;

pub use regression::{
    build_ar_design, build_arx_design, fit_ar, fit_arx, predict_next, r_squared, ArConfig,
    ArxConfig, Design, ModelConfig, RSquared, RegressionError, RegressionFit,
};
pub use series::{Series, SeriesError};

/// Community area code, 1..=76.
pub type AreaCode = u16;

pub const MIN_AREA_CODE: AreaCode = 1;
pub const MAX_AREA_CODE: AreaCode = 76;

/// Annual program budget in dollars: the five-year grant split evenly per year.
pub const DEFAULT_ANNUAL_BUDGET: f64 = 3_940_000.0;
