//! Budget allocation policies and next-year outcome simulation.
//!
//! Four policies are modelled. Two are neutral with respect to outcomes:
//!
//! * `EqualPerSchool`: the budget is split evenly across schools.
//! * `EqualPerStudent`: proportional to enrollment in the allocation year.
//!
//! Two are outcome-driven. Both assign an area weight, split the budget across
//! areas by weight, then split each area's share across its schools by
//! enrollment:
//!
//! * `PredictionBased`: weight = max(0, predicted next-year rate) × area enrollment.
//! * `EffectivenessBased`: weight = max(0, -b₁), so only areas where grants are
//!   estimated to lower the rate receive funds.
//!
//! The two outcome-driven weightings are this crate's formalization of
//! "fund by predicted need" and "fund by estimated effect".

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SchoolRecord;
use crate::regression::{predict_next, ModelConfig, RegressionError, RegressionFit};
use crate::series::Series;
use crate::AreaCode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("no schools to allocate to")]
    NoSchools,
    #[error("total enrollment is zero in {0}")]
    ZeroEnrollment(i32),
    #[error("no area has a positive weight under {0}")]
    NoEligibleAreas(PolicyKind),
    #[error("missing model: {0}")]
    MissingModel(String),
    #[error("forecast failed for area {area}: {source}")]
    Forecast {
        area: AreaCode,
        source: RegressionError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    EqualPerSchool,
    EqualPerStudent,
    PredictionBased,
    EffectivenessBased,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::EqualPerSchool,
        PolicyKind::EqualPerStudent,
        PolicyKind::PredictionBased,
        PolicyKind::EffectivenessBased,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::EqualPerSchool => "equal_per_school",
            PolicyKind::EqualPerStudent => "equal_per_student",
            PolicyKind::PredictionBased => "prediction_based",
            PolicyKind::EffectivenessBased => "effectiveness_based",
        }
    }

    pub fn is_policy_neutral(&self) -> bool {
        matches!(self, PolicyKind::EqualPerSchool | PolicyKind::EqualPerStudent)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm || k.name().replace('_', "") == norm)
            .ok_or_else(|| {
                format!(
                    "unknown policy `{s}` (expected one of {})",
                    PolicyKind::ALL.map(|k| k.name()).join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Dollars per program year.
    pub budget: f64,
    /// When every area weight is zero, fall back to `EqualPerStudent` instead
    /// of failing.
    pub fallback_to_equal: bool,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, budget: f64) -> Self {
        PolicySpec {
            kind,
            budget,
            fallback_to_equal: true,
        }
    }
}

/// Model outputs the outcome-driven policies weight on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AllocationInputs {
    /// Predicted next-year birth rate per area.
    pub predicted_rates: BTreeMap<AreaCode, f64>,
    /// `b₁` per area, rate points per thousand dollars.
    pub effectiveness: BTreeMap<AreaCode, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub policy: PolicySpec,
    /// Enrollment year used for proportional splits.
    pub year: i32,
    pub school_amounts: BTreeMap<String, f64>,
    pub area_amounts: BTreeMap<AreaCode, f64>,
    /// Set when an outcome-driven policy had no positive weight and fell back.
    pub fell_back: bool,
    /// Areas with schools but no model output; they received zero weight.
    pub unmodeled_areas: Vec<AreaCode>,
}

impl AllocationPlan {
    pub fn total(&self) -> f64 {
        self.school_amounts.values().sum()
    }

    pub fn name(&self) -> &'static str {
        self.policy.kind.name()
    }
}

struct AreaGroup<'a> {
    schools: Vec<&'a SchoolRecord>,
    enrollment: f64,
}

fn group_by_area(schools: &[SchoolRecord], year: i32) -> BTreeMap<AreaCode, AreaGroup<'_>> {
    let mut groups: BTreeMap<AreaCode, AreaGroup<'_>> = BTreeMap::new();
    for s in schools {
        let g = groups.entry(s.area_code).or_insert(AreaGroup {
            schools: vec![],
            enrollment: 0.0,
        });
        g.schools.push(s);
        g.enrollment += f64::from(s.enrollment(year));
    }
    groups
}

/// Allocate `policy.budget` across `schools`, using enrollment from `year`.
pub fn allocate(
    policy: &PolicySpec,
    schools: &[SchoolRecord],
    inputs: &AllocationInputs,
    year: i32,
) -> Result<AllocationPlan, AllocationError> {
    if !(policy.budget.is_finite() && policy.budget > 0.0) {
        return Err(AllocationError::InvalidBudget(policy.budget));
    }
    if schools.is_empty() {
        return Err(AllocationError::NoSchools);
    }
    let budget = policy.budget;
    let mut plan = AllocationPlan {
        policy: policy.clone(),
        year,
        school_amounts: BTreeMap::new(),
        area_amounts: BTreeMap::new(),
        fell_back: false,
        unmodeled_areas: vec![],
    };

    let school_amounts = match policy.kind {
        PolicyKind::EqualPerSchool => {
            let each = budget / schools.len() as f64;
            schools.iter().map(|s| (s, each)).collect()
        }
        PolicyKind::EqualPerStudent => per_student(schools, budget, year)?,
        PolicyKind::PredictionBased | PolicyKind::EffectivenessBased => {
            let groups = group_by_area(schools, year);
            let (source, label) = match policy.kind {
                PolicyKind::PredictionBased => (&inputs.predicted_rates, "predicted rates"),
                _ => (&inputs.effectiveness, "effectiveness coefficients"),
            };
            if source.is_empty() {
                return Err(AllocationError::MissingModel(format!(
                    "{} needs {label}",
                    policy.kind
                )));
            }
            let mut weights = BTreeMap::new();
            for (&area, g) in &groups {
                let Some(&value) = source.get(&area) else {
                    plan.unmodeled_areas.push(area);
                    weights.insert(area, 0.0);
                    continue;
                };
                let w = match policy.kind {
                    PolicyKind::PredictionBased => value.max(0.0) * g.enrollment,
                    _ => (-value).max(0.0),
                };
                weights.insert(area, w);
            }
            let total: f64 = weights.values().sum();
            if total > 0.0 {
                weighted_by_area(&groups, &weights, total, budget, year)
            } else if policy.fallback_to_equal {
                plan.fell_back = true;
                per_student(schools, budget, year)?
            } else {
                return Err(AllocationError::NoEligibleAreas(policy.kind));
            }
        }
    };

    for (s, amount) in school_amounts {
        plan.school_amounts.insert(s.school_id.clone(), amount);
        *plan.area_amounts.entry(s.area_code).or_insert(0.0) += amount;
    }
    Ok(plan)
}

fn per_student(
    schools: &[SchoolRecord],
    budget: f64,
    year: i32,
) -> Result<Vec<(&SchoolRecord, f64)>, AllocationError> {
    let total: f64 = schools.iter().map(|s| f64::from(s.enrollment(year))).sum();
    if total <= 0.0 {
        return Err(AllocationError::ZeroEnrollment(year));
    }
    Ok(schools
        .iter()
        .map(|s| (s, budget * f64::from(s.enrollment(year)) / total))
        .collect())
}

fn weighted_by_area<'a>(
    groups: &BTreeMap<AreaCode, AreaGroup<'a>>,
    weights: &BTreeMap<AreaCode, f64>,
    total_weight: f64,
    budget: f64,
    year: i32,
) -> Vec<(&'a SchoolRecord, f64)> {
    let mut out = Vec::new();
    for (area, g) in groups {
        let area_amount = budget * weights[area] / total_weight;
        for s in &g.schools {
            let share = if g.enrollment > 0.0 {
                f64::from(s.enrollment(year)) / g.enrollment
            } else {
                1.0 / g.schools.len() as f64
            };
            out.push((*s, area_amount * share));
        }
    }
    out
}

/// A fitted ARX model with the histories it forecasts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaModel {
    pub fit: RegressionFit,
    pub rates: Series,
    /// Historical grants in thousands of dollars.
    pub grants: Series,
}

impl AreaModel {
    /// Year whose grant is replaced by a plan's amount: `t - u` for the
    /// forecast year `t`.
    pub fn substituted_year(&self) -> i32 {
        let delay = match self.fit.config {
            ModelConfig::Arx(c) => c.exo_delay as i32,
            ModelConfig::Ar(_) => 1,
        };
        self.rates.end_year() + 1 - delay
    }

    /// Next-year rate with the grant at [`Self::substituted_year`] set to
    /// `grant_thousands`; `None` keeps the historical grant.
    pub fn forecast(&self, grant_thousands: Option<f64>) -> Result<f64, RegressionError> {
        let grants = match grant_thousands {
            None => self.grants.clone(),
            Some(g) => self
                .grants
                .with_value(self.substituted_year(), g)
                .ok_or(RegressionError::SeriesTooShort {
                    needed: (self.substituted_year() - self.grants.start_year() + 1).max(1)
                        as usize,
                    available: self.grants.len(),
                })?,
        };
        predict_next(&self.fit, &self.rates, Some(&grants))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub area_code: AreaCode,
    pub baseline: f64,
    pub baseline_floored: bool,
    /// One entry per plan, in plan order.
    pub rates: Vec<f64>,
    pub floored: Vec<bool>,
}

impl ScenarioRow {
    pub fn deltas(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r - self.baseline).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub policies: Vec<String>,
    pub rows: Vec<ScenarioRow>,
    /// Enrollment-weighted mean of the baseline forecasts.
    pub baseline_citywide: f64,
    /// Enrollment-weighted mean forecast per plan.
    pub citywide: Vec<f64>,
}

fn floor_rate(v: f64) -> (f64, bool) {
    if v < 0.0 {
        (0.0, true)
    } else {
        (v, false)
    }
}

/// Forecast next-year rates for every modelled area under each plan.
///
/// The baseline keeps each area's historical grant; each scenario swaps in
/// the plan's area amount (converted to thousands). `weights` gives the
/// enrollment used for citywide means; areas without a weight count as zero.
pub fn simulate(
    plans: &[AllocationPlan],
    models: &BTreeMap<AreaCode, AreaModel>,
    weights: &BTreeMap<AreaCode, f64>,
) -> Result<ScenarioReport, AllocationError> {
    if models.is_empty() {
        return Err(AllocationError::MissingModel("no ARX models to simulate".into()));
    }
    for plan in plans {
        if let Some(area) = plan
            .area_amounts
            .iter()
            .find(|(a, &amt)| amt > 0.0 && !models.contains_key(a))
            .map(|(a, _)| a)
        {
            return Err(AllocationError::MissingModel(format!(
                "{} funds area {area}, which has no ARX model",
                plan.name()
            )));
        }
    }

    let mut rows = Vec::with_capacity(models.len());
    for (&area, model) in models {
        let forecast = |g: Option<f64>| {
            model
                .forecast(g)
                .map_err(|source| AllocationError::Forecast { area, source })
        };
        let (baseline, baseline_floored) = floor_rate(forecast(None)?);
        let mut rates = Vec::with_capacity(plans.len());
        let mut floored = Vec::with_capacity(plans.len());
        for plan in plans {
            let dollars = plan.area_amounts.get(&area).copied().unwrap_or(0.0);
            let (r, f) = floor_rate(forecast(Some(dollars / 1000.0))?);
            rates.push(r);
            floored.push(f);
        }
        rows.push(ScenarioRow {
            area_code: area,
            baseline,
            baseline_floored,
            rates,
            floored,
        });
    }

    let citywide_mean = |pick: &dyn Fn(&ScenarioRow) -> f64| {
        let total_w: f64 = rows
            .iter()
            .map(|r| weights.get(&r.area_code).copied().unwrap_or(0.0))
            .sum();
        if total_w > 0.0 {
            rows.iter()
                .map(|r| weights.get(&r.area_code).copied().unwrap_or(0.0) * pick(r))
                .sum::<f64>()
                / total_w
        } else {
            rows.iter().map(pick).sum::<f64>() / rows.len() as f64
        }
    };
    let baseline_citywide = citywide_mean(&|r| r.baseline);
    let citywide = (0..plans.len())
        .map(|i| citywide_mean(&|r| r.rates[i]))
        .collect();

    Ok(ScenarioReport {
        policies: plans.iter().map(|p| p.name().to_string()).collect(),
        rows,
        baseline_citywide,
        citywide,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPolicy {
    pub policy: String,
    pub citywide_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaWinner {
    pub area_code: AreaCode,
    pub policy: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyComparison {
    /// Lowest citywide mean first; ties keep plan order.
    pub ranking: Vec<RankedPolicy>,
    pub area_winners: Vec<AreaWinner>,
}

pub fn compare(report: &ScenarioReport) -> PolicyComparison {
    let mut ranking: Vec<RankedPolicy> = report
        .policies
        .iter()
        .zip(&report.citywide)
        .map(|(p, &m)| RankedPolicy {
            policy: p.clone(),
            citywide_mean: m,
        })
        .collect();
    ranking.sort_by(|a, b| a.citywide_mean.total_cmp(&b.citywide_mean));

    let area_winners = report
        .rows
        .iter()
        .filter_map(|row| {
            let (i, &rate) = row
                .rates
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))?;
            Some(AreaWinner {
                area_code: row.area_code,
                policy: report.policies[i].clone(),
                rate,
            })
        })
        .collect();
    PolicyComparison {
        ranking,
        area_winners,
    }
}
