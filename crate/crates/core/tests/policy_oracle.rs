//! Scenario simulation checked against hand-computed allocations and
//! forecasts for a small fixture with heterogeneous grant effects.

use std::collections::BTreeMap;

use tppi_core::allocation::{
    allocate, simulate, AllocationInputs, AreaModel, PolicyKind, PolicySpec,
};
use tppi_core::ingest::SchoolRecord;
use tppi_core::{ArxConfig, RegressionFit, Series};

const YEAR: i32 = 2014;
const BUDGET: f64 = 400_000.0;
const W: f64 = 0.8;
const LAST_RATE: f64 = 50.0;

// (area, enrollment, b1)
const AREAS: [(u16, u32, f64); 4] = [(1, 400, -2.0), (2, 300, -0.5), (3, 200, 0.0), (4, 100, 0.3)];

fn schools() -> Vec<SchoolRecord> {
    AREAS
        .iter()
        .map(|&(a, n, _)| SchoolRecord {
            school_id: format!("s{a}"),
            name: format!("School {a}"),
            area_code: a,
            enrollment_by_year: [(YEAR, n)].into_iter().collect(),
        })
        .collect()
}

fn models() -> BTreeMap<u16, AreaModel> {
    AREAS
        .iter()
        .map(|&(a, _, b1)| {
            let fit =
                RegressionFit::from_coefficients(ArxConfig::new(1, 1, 1).into(), vec![W], vec![b1])
                    .unwrap();
            let model = AreaModel {
                fit,
                rates: Series::new(2010, vec![60.0, 58.0, 55.0, 52.0, LAST_RATE]).unwrap(),
                grants: Series::new(2010, vec![100.0; 5]).unwrap(),
            };
            (a, model)
        })
        .collect()
}

/// Hand computation: grant dollars per area for each policy, then the
/// enrollment-weighted mean of `W * last + b1 * thousands`.
fn brute_force_citywide(kind: PolicyKind) -> f64 {
    let total_n: f64 = AREAS.iter().map(|a| f64::from(a.1)).sum();
    let weights: Vec<f64> = AREAS
        .iter()
        .map(|&(_, n, b1)| match kind {
            PolicyKind::EqualPerStudent => f64::from(n),
            PolicyKind::EffectivenessBased => (-b1).max(0.0),
            _ => unreachable!(),
        })
        .collect();
    let total_w: f64 = weights.iter().sum();
    AREAS
        .iter()
        .zip(&weights)
        .map(|(&(_, n, b1), w)| {
            let dollars = BUDGET * w / total_w;
            let rate = (W * LAST_RATE + b1 * dollars / 1000.0).max(0.0);
            f64::from(n) * rate
        })
        .sum::<f64>()
        / total_n
}

#[test]
fn effectiveness_policy_beats_equal_per_student_on_heterogeneous_effects() {
    let inputs = AllocationInputs {
        predicted_rates: BTreeMap::new(),
        effectiveness: AREAS.iter().map(|&(a, _, b)| (a, b)).collect(),
    };
    let plans: Vec<_> = [PolicyKind::EqualPerStudent, PolicyKind::EffectivenessBased]
        .into_iter()
        .map(|k| allocate(&PolicySpec::new(k, BUDGET), &schools(), &inputs, YEAR).unwrap())
        .collect();
    let weights = AREAS.iter().map(|&(a, n, _)| (a, f64::from(n))).collect();
    let report = simulate(&plans, &models(), &weights).unwrap();

    let eps = brute_force_citywide(PolicyKind::EqualPerStudent);
    let eff = brute_force_citywide(PolicyKind::EffectivenessBased);
    assert!((report.citywide[0] - eps).abs() < 1e-9, "{} vs {eps}", report.citywide[0]);
    assert!((report.citywide[1] - eff).abs() < 1e-9, "{} vs {eff}", report.citywide[1]);
    assert!(report.citywide[1] <= report.citywide[0]);
    // Areas whose grants do not lower rates get nothing.
    assert_eq!(plans[1].area_amounts.get(&3).copied().unwrap_or(0.0), 0.0);
    assert_eq!(plans[1].area_amounts.get(&4).copied().unwrap_or(0.0), 0.0);
}
