mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use common::{desk_config, fixtures, ok, read_csv, run_desk, stderr, tppi};
use tppi_cli::output::{
    AreaWinnerRow, PlanRow, PolicySummaryRow, R2ByArxRow, R2ByLagRow, StableAreaRow, TopArRow,
    TopEffectivenessRow,
};

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn missing_schools_file_exits_2_and_names_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("no_such_schools.csv");
    let rates = fixtures().join("ar2/birth_rates.csv");
    let o = tppi(&[
        "ingest",
        "--birth-rates",
        s(&rates),
        "--schools",
        s(&missing),
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_schools.csv"), "{}", stderr(&o));
}

#[test]
fn malformed_row_exits_2_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(fixtures().join("ar2/birth_rates.csv")).unwrap();
    let bad: Vec<String> = src
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 6 {
                l.replacen(",1999,", ",19x9,", 1).replacen(",2004,", ",20o4,", 1)
            } else {
                l.to_string()
            }
        })
        .collect();
    let rates = tmp.path().join("rates.csv");
    fs::write(&rates, bad.join("\n") + "\n").unwrap();
    let schools = fixtures().join("ar2/schools.csv");
    let o = tppi(&[
        "ingest",
        "--birth-rates",
        s(&rates),
        "--schools",
        s(&schools),
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 7"), "{err}");
    assert!(err.contains("rates.csv"), "{err}");
}

#[test]
fn ingest_bundle_holds_130_schools_and_at_most_76_areas() {
    let tmp = tempfile::tempdir().unwrap();
    ok("ingest", &["--config", s(&desk_config()), "--out", s(tmp.path())]);
    let bundle: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("dataset.json")).unwrap()).unwrap();
    assert_eq!(bundle["schools"].as_array().unwrap().len(), 130);
    let n_areas = bundle["rate_series"].as_object().unwrap().len();
    assert!((1..=76).contains(&n_areas), "{n_areas}");
    let report = fs::read_to_string(tmp.path().join("ingest_report.jsonl")).unwrap();
    assert!(report.lines().any(|l| l.contains("\"excluded\"") && l.contains("\"area_code\":76")));
    assert!(report.lines().any(|l| l.contains("\"interpolated\"") && l.contains("\"area_code\":12")));
}

#[test]
fn ar2_fixture_fits_exactly_from_lag_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixtures().join("ar2");
    let (rates, schools) = (dir.join("birth_rates.csv"), dir.join("schools.csv"));
    let args = [
        "--birth-rates",
        s(&rates),
        "--schools",
        s(&schools),
        "--out",
        s(tmp.path()),
    ];
    ok("ingest", &args);
    ok("analyze", &args);
    let rows: Vec<R2ByLagRow> = read_csv(&tmp.path().join("r2_by_lag.csv"));
    assert_eq!(rows.iter().map(|r| r.lag).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
    for r in &rows[1..] {
        assert_eq!(r.overall_r2, Some(1.0), "lag {}", r.lag);
    }
    assert!(rows[0].overall_r2.unwrap() < 1.0);
}

#[test]
fn json_output_carries_same_content_as_csv() {
    let csv_dir = tempfile::tempdir().unwrap();
    let json_dir = tempfile::tempdir().unwrap();
    run_desk(csv_dir.path(), &["--format", "csv"]);
    run_desk(json_dir.path(), &["--format", "json"]);

    fn json<T: serde::de::DeserializeOwned>(p: &Path) -> T {
        serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
    }
    let (c, j) = (csv_dir.path(), json_dir.path());
    let a: Vec<R2ByLagRow> = read_csv(&c.join("r2_by_lag.csv"));
    assert_eq!(a, json::<Vec<R2ByLagRow>>(&j.join("r2_by_lag.json")));
    let a: Vec<R2ByArxRow> = read_csv(&c.join("r2_by_arx.csv"));
    assert_eq!(a, json::<Vec<R2ByArxRow>>(&j.join("r2_by_arx.json")));
    let a: Vec<TopArRow> = read_csv(&c.join("top10_ar.csv"));
    assert_eq!(a, json::<Vec<TopArRow>>(&j.join("top10_ar.json")));
    let a: Vec<TopEffectivenessRow> = read_csv(&c.join("top10_effectiveness.csv"));
    assert_eq!(a, json::<Vec<TopEffectivenessRow>>(&j.join("top10_effectiveness.json")));
    let a: Vec<PolicySummaryRow> = read_csv(&c.join("policy_summary.csv"));
    assert_eq!(a, json::<Vec<PolicySummaryRow>>(&j.join("policy_summary.json")));

    // Plans: CSV rounds to cents, JSON keeps full precision.
    let csv_plan: Vec<PlanRow> = read_csv(&c.join("plan_effectiveness_based.csv"));
    let json_plan: serde_json::Value = json(&j.join("plan_effectiveness_based.json"));
    assert!(json_plan["weighting"].as_str().unwrap().contains("formalized"));
    for row in csv_plan {
        let full = json_plan["school_amounts"][&row.school_id].as_f64().unwrap();
        assert_eq!(row.amount, format!("{full:.2}"));
    }
}

#[test]
fn equal_per_school_pays_every_school_the_same() {
    let tmp = tempfile::tempdir().unwrap();
    run_desk(tmp.path(), &["--policies", "equal_per_school"]);
    let plan: Vec<PlanRow> = read_csv(&tmp.path().join("plan_equal_per_school.csv"));
    assert_eq!(plan.len(), 130);
    assert!(plan.iter().all(|r| r.amount == "30307.69"));
}

#[test]
fn two_policy_scenario_has_both_columns_and_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    run_desk(tmp.path(), &["--policies", "equal_per_student,effectiveness_based"]);
    let mut rdr = csv::Reader::from_path(tmp.path().join("scenario_report.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "area_code",
            "area_name",
            "baseline_rate",
            "equal_per_student_rate",
            "effectiveness_based_rate",
            "equal_per_student_delta",
            "effectiveness_based_delta"
        ]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>().unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        assert!((f(3) - f(2) - f(5)).abs() < 1e-9);
        assert!((f(4) - f(2) - f(6)).abs() < 1e-9);
    }
    assert!(tmp.path().join("plan_equal_per_student.csv").exists());
    assert!(!tmp.path().join("plan_equal_per_school.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_desk(a.path(), &["--plots"]);
    run_desk(b.path(), &["--plots"]);
    let (x, y) = (dir_contents(a.path()), dir_contents(b.path()));
    assert!(x.contains_key("r2_by_lag.svg"));
    assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>());
    for (name, bytes) in &x {
        assert!(bytes == &y[name], "{name} differs between runs");
    }
}

#[test]
fn every_emitted_csv_reparses_under_its_schema() {
    let tmp = tempfile::tempdir().unwrap();
    run_desk(tmp.path(), &[]);
    let d = tmp.path();
    assert_eq!(read_csv::<R2ByLagRow>(&d.join("r2_by_lag.csv")).len(), 5);
    assert_eq!(read_csv::<R2ByArxRow>(&d.join("r2_by_arx.csv")).len(), 4);
    assert_eq!(read_csv::<TopArRow>(&d.join("top10_ar.csv")).len(), 50);
    assert_eq!(read_csv::<TopEffectivenessRow>(&d.join("top10_effectiveness.csv")).len(), 40);
    read_csv::<StableAreaRow>(&d.join("stable_areas.csv"));
    assert_eq!(read_csv::<PolicySummaryRow>(&d.join("policy_summary.csv")).len(), 4);
    assert!(!read_csv::<AreaWinnerRow>(&d.join("area_winners.csv")).is_empty());
    for p in ["equal_per_school", "equal_per_student", "prediction_based", "effectiveness_based"] {
        let plan: Vec<PlanRow> = read_csv(&d.join(format!("plan_{p}.csv")));
        let total: f64 = plan.iter().map(|r| r.amount.parse::<f64>().unwrap()).sum();
        assert!((total - 3_940_000.0).abs() < 0.01 * plan.len() as f64, "{p}: {total}");
    }
}

#[test]
fn allocate_without_models_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    ok("ingest", &["--config", s(&desk_config()), "--out", s(tmp.path())]);
    let o = tppi(&["allocate", "--config", s(&desk_config()), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("models.json"));
}

#[test]
fn analyze_on_empty_dataset_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let rates = tmp.path().join("rates.csv");
    fs::write(
        &rates,
        "area_code,area_name,year,teen_births,birth_rate,rate_ci_lower,rate_ci_upper\n\
         1,Rogers Park,2010,,50.0,,\n1,Rogers Park,2011,,48.0,,\n",
    )
    .unwrap();
    let schools = fixtures().join("desk/schools.csv");
    let args = ["--birth-rates", s(&rates), "--schools", s(&schools), "--out", s(tmp.path())];
    ok("ingest", &args);
    let mut a = vec!["analyze"];
    a.extend_from_slice(&args);
    let o = tppi(&a);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn invalid_budget_flag_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tppi(&[
        "ingest",
        "--config",
        s(&desk_config()),
        "--budget",
        "-5",
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    run_desk(tmp.path(), &["--budget", "1300", "--policies", "equal_per_school"]);
    let plan: Vec<PlanRow> = read_csv(&tmp.path().join("plan_equal_per_school.csv"));
    assert!(plan.iter().all(|r| r.amount == "10.00"));
}
