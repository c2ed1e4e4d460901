use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::Serialize;
use tppi_core::allocation::{
    allocate, compare, simulate, AllocationInputs, AllocationPlan, AreaModel, PolicyKind,
    PolicySpec, ScenarioReport,
};
use tppi_core::analysis::{
    rank_by_r2, rank_effectiveness, run_ar_sweep, run_arx_sweep, stable_areas, AnalysisError,
    SweepSummary,
};
use tppi_core::ingest::{
    area_enrollment, area_names, build_grant_series, build_rate_series, implied_cost_per_student,
    merge_birth_rates, parse_birth_rates, parse_schools, total_enrollment, IngestError,
    PROGRAM_YEARS, RATE_YEARS,
};
use tppi_core::{fit_ar, fit_arx, predict_next, ArConfig, ModelConfig};

use crate::bundle::{
    read_json, write_json, CostPerStudent, DatasetBundle, ModelBundle, DATASET_FILE,
    GRANT_ASSUMPTION, INGEST_REPORT_FILE, MODELS_FILE,
};
use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;
use crate::output::{
    cents, table_path, write_raw_csv, write_table, AreaWinnerRow, PlanRow, PolicySummaryRow,
    R2ByArxRow, R2ByLagRow, StableAreaRow, TopArRow, TopEffectivenessRow,
};
use crate::plot::r2_line_chart;

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingFile(path.to_path_buf()),
        _ => CliError::io(path, e),
    })
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn input_error(path: &Path) -> impl Fn(IngestError) -> CliError + '_ {
    move |source| CliError::Input {
        path: path.to_path_buf(),
        source,
    }
}

/// Parse and validate the raw CSVs and write `dataset.json` plus the
/// interpolation/exclusion report.
pub fn ingest(cfg: &RunConfig) -> Result<DatasetBundle, CliError> {
    if cfg.birth_rates.is_empty() {
        return Err(CliError::Config("no birth-rate files given".into()));
    }
    let schools_path = cfg
        .schools
        .as_deref()
        .ok_or_else(|| CliError::Config("no schools file given".into()))?;
    for p in cfg.birth_rates.iter().map(|p| p.as_path()).chain([schools_path]) {
        if !p.is_file() {
            return Err(CliError::MissingFile(p.to_path_buf()));
        }
    }

    let mut records = Vec::new();
    for path in &cfg.birth_rates {
        let parsed = parse_birth_rates(open(path)?).map_err(input_error(path))?;
        records = merge_birth_rates([records, parsed]).map_err(input_error(path))?;
    }
    let schools = parse_schools(open(schools_path)?).map_err(input_error(schools_path))?;

    let names = area_names(&records);
    let rates = build_rate_series(&records, RATE_YEARS);
    let grants = build_grant_series(
        &schools,
        cfg.annual_budget,
        PROGRAM_YEARS,
        rates.series.keys().copied(),
    )
    .map_err(input_error(schools_path))?;

    let first_year = *PROGRAM_YEARS.start();
    let students = total_enrollment(&schools, first_year);
    let dollars =
        implied_cost_per_student(cfg.annual_budget, students).map_err(input_error(schools_path))?;

    let bundle = DatasetBundle {
        annual_budget: cfg.annual_budget,
        grant_assumption: GRANT_ASSUMPTION.to_string(),
        area_names: names,
        rate_series: rates.series,
        grant_series: grants,
        schools,
        notes: rates.notes,
        cost_per_student: CostPerStudent {
            enrollment_year: first_year,
            total_students: students,
            dollars,
        },
    };

    ensure_out_dir(&cfg.out)?;
    write_json(&cfg.out.join(DATASET_FILE), &bundle)?;
    let report_path = cfg.out.join(INGEST_REPORT_FILE);
    let mut report = String::new();
    for note in &bundle.notes {
        report.push_str(&serde_json::to_string(note).map_err(|e| CliError::io(&report_path, e))?);
        report.push('\n');
    }
    std::fs::write(&report_path, report).map_err(|e| CliError::io(&report_path, e))?;
    Ok(bundle)
}

pub struct AnalysisOutput {
    pub ar: Vec<SweepSummary>,
    pub arx: Vec<SweepSummary>,
    pub models: ModelBundle,
}

fn arx_of(s: &SweepSummary) -> tppi_core::ArxConfig {
    match s.config {
        ModelConfig::Arx(c) => c,
        ModelConfig::Ar(_) => unreachable!("ARX sweep holds ARX configs"),
    }
}

/// Run both sweeps, write the ranking tables and `models.json`.
pub fn analyze(cfg: &RunConfig) -> Result<AnalysisOutput, CliError> {
    let bundle: DatasetBundle = read_json(&cfg.out.join(DATASET_FILE))?;
    let x = &bundle.rate_series;
    let y = bundle.grant_as_series();

    let ar = run_ar_sweep(x, &cfg.lags, cfg.window_mode)?;
    let arx = run_arx_sweep(x, &y, &cfg.arx_configs)?;

    let lag_rows: Vec<R2ByLagRow> = ar
        .iter()
        .map(|s| R2ByLagRow {
            lag: s.config.endo_lags(),
            overall_r2: s.overall.value(),
            n_areas: s.n_areas,
            n_samples: s.n_samples,
        })
        .collect();
    let arx_rows: Vec<R2ByArxRow> = arx
        .iter()
        .map(|s| {
            let c = arx_of(s);
            R2ByArxRow {
                l: c.endo_lags,
                u: c.exo_delay,
                v: c.exo_lags,
                overall_r2: s.overall.value(),
                n_areas: s.n_areas,
                n_samples: s.n_samples,
            }
        })
        .collect();
    let top_ar: Vec<TopArRow> = ar
        .iter()
        .flat_map(|s| {
            let lag = s.config.endo_lags();
            rank_by_r2(&s.results, cfg.top_n)
                .into_iter()
                .enumerate()
                .map(move |(i, r)| (lag, i, r))
        })
        .map(|(lag, i, r)| TopArRow {
            rank: i + 1,
            lag,
            area_code: r.area_code,
            area_name: bundle.area_name(r.area_code).to_string(),
            r2: r.r2,
        })
        .collect();
    let rankings: Vec<_> = arx
        .iter()
        .map(|s| rank_effectiveness(&s.results, cfg.top_n))
        .collect();
    let top_eff: Vec<TopEffectivenessRow> = rankings
        .iter()
        .flat_map(|r| r.iter().enumerate())
        .map(|(i, e)| TopEffectivenessRow {
            rank: i + 1,
            l: e.config.endo_lags,
            v: e.config.exo_lags,
            area_code: e.area_code,
            area_name: bundle.area_name(e.area_code).to_string(),
            coeff_per_thousand: e.coefficient,
        })
        .collect();
    let stable: Vec<StableAreaRow> = stable_areas(&rankings)
        .into_iter()
        .map(|a| StableAreaRow {
            area_code: a,
            area_name: bundle.area_name(a).to_string(),
        })
        .collect();

    let ar_models = x
        .iter()
        .filter_map(|(&a, s)| {
            fit_ar(s, ArConfig::new(cfg.prediction_lag))
                .ok()
                .map(|f| (a, f))
        })
        .collect();
    let arx_models = x
        .iter()
        .filter_map(|(&a, s)| {
            let g = y.get(&a)?;
            fit_arx(s, g, cfg.simulation_model).ok().map(|f| (a, f))
        })
        .collect();
    let models = ModelBundle {
        prediction_lag: cfg.prediction_lag,
        ar_models,
        simulation_model: cfg.simulation_model,
        arx_models,
    };

    let out = &cfg.out;
    ensure_out_dir(out)?;
    write_table(out, "r2_by_lag", cfg.format, &lag_rows)?;
    write_table(out, "r2_by_arx", cfg.format, &arx_rows)?;
    write_table(out, "top10_ar", cfg.format, &top_ar)?;
    write_table(out, "top10_effectiveness", cfg.format, &top_eff)?;
    write_table(out, "stable_areas", cfg.format, &stable)?;
    write_json(&out.join(MODELS_FILE), &models)?;

    if cfg.plots {
        let lag_points: Vec<_> = lag_rows
            .iter()
            .map(|r| (format!("l={}", r.lag), r.overall_r2))
            .collect();
        write_text(
            &out.join("r2_by_lag.svg"),
            &r2_line_chart("Overall R² by AR lag depth", "historical years (l)", &lag_points),
        )?;
        let arx_points: Vec<_> = arx_rows
            .iter()
            .map(|r| (format!("l={}, v={}", r.l, r.v), r.overall_r2))
            .collect();
        write_text(
            &out.join("r2_by_arx.svg"),
            &r2_line_chart("Overall R² by ARX configuration (u=1)", "configuration", &arx_points),
        )?;
    }

    Ok(AnalysisOutput { ar, arx, models })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn weighting_label(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::EqualPerSchool => "policy-neutral: budget / number of schools",
        PolicyKind::EqualPerStudent => "policy-neutral: proportional to enrollment",
        PolicyKind::PredictionBased => {
            "formalized weighting: area weight = max(0, predicted next-year rate) x area enrollment; split within area by enrollment"
        }
        PolicyKind::EffectivenessBased => {
            "formalized weighting: area weight = max(0, -b1); split within area by enrollment"
        }
    }
}

#[derive(Serialize)]
struct PlanDocument<'a> {
    weighting: &'static str,
    #[serde(flatten)]
    plan: &'a AllocationPlan,
}

#[derive(Serialize)]
struct ScenarioJsonRow {
    area_code: u16,
    area_name: String,
    baseline_rate: f64,
    baseline_floored: bool,
    rates: Vec<f64>,
    deltas: Vec<f64>,
    floored: Vec<bool>,
}

#[derive(Serialize)]
struct ScenarioJson<'a> {
    grant_assumption: &'a str,
    policies: &'a [String],
    baseline_citywide_rate: f64,
    citywide_mean_rates: &'a [f64],
    rows: Vec<ScenarioJsonRow>,
}

pub struct AllocationOutput {
    pub plans: Vec<AllocationPlan>,
    pub report: ScenarioReport,
}

/// Build one plan per configured policy, simulate next-year rates under
/// each, and write plans plus the scenario comparison.
pub fn allocate_cmd(cfg: &RunConfig) -> Result<AllocationOutput, CliError> {
    let bundle: DatasetBundle = read_json(&cfg.out.join(DATASET_FILE))?;
    let models_path = cfg.out.join(MODELS_FILE);
    if !models_path.is_file() {
        return Err(CliError::MissingModel(format!(
            "{} not found; run `analyze` first",
            models_path.display()
        )));
    }
    let models: ModelBundle = read_json(&models_path)?;
    let year = bundle
        .latest_enrollment_year()
        .ok_or(tppi_core::allocation::AllocationError::NoSchools)?;
    let grants = bundle.grant_as_series();

    let mut inputs = AllocationInputs::default();
    for (&area, fit) in &models.ar_models {
        if let Some(x) = bundle.rate_series.get(&area) {
            if let Ok(p) = predict_next(fit, x, None) {
                inputs.predicted_rates.insert(area, p);
            }
        }
    }
    let mut area_models = BTreeMap::new();
    for (&area, fit) in &models.arx_models {
        if let Some(b1) = fit.grant_effect() {
            inputs.effectiveness.insert(area, b1);
        }
        if let (Some(x), Some(y)) = (bundle.rate_series.get(&area), grants.get(&area)) {
            area_models.insert(
                area,
                AreaModel {
                    fit: fit.clone(),
                    rates: x.clone(),
                    grants: y.clone(),
                },
            );
        }
    }
    if area_models.is_empty() {
        return Err(CliError::Analysis(AnalysisError::EmptyDataset(
            "no area has a fitted ARX model",
        )));
    }

    let plans = cfg
        .policies
        .iter()
        .map(|&kind| {
            allocate(
                &PolicySpec::new(kind, cfg.annual_budget),
                &bundle.schools,
                &inputs,
                year,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let weights: BTreeMap<u16, f64> = area_enrollment(&bundle.schools, year)
        .into_iter()
        .map(|(a, n)| (a, n as f64))
        .collect();
    let report = simulate(&plans, &area_models, &weights)?;
    let comparison = compare(&report);

    let out = &cfg.out;
    ensure_out_dir(out)?;
    for plan in &plans {
        let stem = format!("plan_{}", plan.name());
        match cfg.format {
            OutputFormat::Json => write_json(
                &table_path(out, &stem, OutputFormat::Json),
                &PlanDocument {
                    weighting: weighting_label(plan.policy.kind),
                    plan,
                },
            )?,
            OutputFormat::Csv => {
                let rows: Vec<PlanRow> = bundle
                    .schools
                    .iter()
                    .map(|s| PlanRow {
                        school_id: s.school_id.clone(),
                        school_name: s.name.clone(),
                        area_code: s.area_code,
                        amount: cents(plan.school_amounts[&s.school_id]),
                    })
                    .collect();
                write_table(out, &stem, OutputFormat::Csv, &rows)?;
            }
        }
    }

    match cfg.format {
        OutputFormat::Csv => {
            let mut header = vec![
                "area_code".to_string(),
                "area_name".to_string(),
                "baseline_rate".to_string(),
            ];
            header.extend(report.policies.iter().map(|p| format!("{p}_rate")));
            header.extend(report.policies.iter().map(|p| format!("{p}_delta")));
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    let mut row = vec![
                        r.area_code.to_string(),
                        bundle.area_name(r.area_code).to_string(),
                        r.baseline.to_string(),
                    ];
                    row.extend(r.rates.iter().map(f64::to_string));
                    row.extend(r.deltas().iter().map(f64::to_string));
                    row
                })
                .collect();
            write_raw_csv(&out.join("scenario_report.csv"), &header, &rows)?;
        }
        OutputFormat::Json => {
            let doc = ScenarioJson {
                grant_assumption: &bundle.grant_assumption,
                policies: &report.policies,
                baseline_citywide_rate: report.baseline_citywide,
                citywide_mean_rates: &report.citywide,
                rows: report
                    .rows
                    .iter()
                    .map(|r| ScenarioJsonRow {
                        area_code: r.area_code,
                        area_name: bundle.area_name(r.area_code).to_string(),
                        baseline_rate: r.baseline,
                        baseline_floored: r.baseline_floored,
                        rates: r.rates.clone(),
                        deltas: r.deltas(),
                        floored: r.floored.clone(),
                    })
                    .collect(),
            };
            write_json(&out.join("scenario_report.json"), &doc)?;
        }
    }

    let summary: Vec<PolicySummaryRow> = comparison
        .ranking
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let plan = plans
                .iter()
                .find(|p| p.name() == r.policy)
                .expect("ranked policy has a plan");
            PolicySummaryRow {
                rank: i + 1,
                policy: r.policy.clone(),
                weighting: weighting_label(plan.policy.kind).to_string(),
                citywide_mean_rate: r.citywide_mean,
                baseline_citywide_rate: report.baseline_citywide,
                fell_back: plan.fell_back,
            }
        })
        .collect();
    write_table(out, "policy_summary", cfg.format, &summary)?;
    let winners: Vec<AreaWinnerRow> = comparison
        .area_winners
        .iter()
        .map(|w| AreaWinnerRow {
            area_code: w.area_code,
            area_name: bundle.area_name(w.area_code).to_string(),
            policy: w.policy.clone(),
            rate: w.rate,
        })
        .collect();
    write_table(out, "area_winners", cfg.format, &winners)?;

    Ok(AllocationOutput { plans, report })
}
