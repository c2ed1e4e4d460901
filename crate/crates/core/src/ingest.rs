//! CSV ingestion for birth-rate statistics and school enrollment, and the
//! construction of per-area birth-rate (`x`) and grant (`y`) series.
//!
//! Input schemas:
//!
//! ```text
//! birth_rates.csv: area_code,area_name,year,teen_births,birth_rate,rate_ci_lower,rate_ci_upper
//! schools.csv:     school_id,school_name,area_code,year,enrollment
//! ```
//!
//! Empty fields in the birth-rate file mean "missing". Extra columns are
//! ignored; column order is free.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::Series;
use crate::{AreaCode, MAX_AREA_CODE, MIN_AREA_CODE};

pub const BIRTH_RATE_COLUMNS: [&str; 7] = [
    "area_code",
    "area_name",
    "year",
    "teen_births",
    "birth_rate",
    "rate_ci_lower",
    "rate_ci_upper",
];
pub const SCHOOL_COLUMNS: [&str; 5] = ["school_id", "school_name", "area_code", "year", "enrollment"];

pub const RATE_YEARS: RangeInclusive<i32> = 1999..=2014;
pub const PROGRAM_YEARS: RangeInclusive<i32> = 2010..=2014;

/// Areas with fewer observed years than this are dropped from the rate series.
pub const MIN_USABLE_YEARS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}, column `{column}`: {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },
    #[error("conflicting birth rates for area {area_code}, year {year}: {first} vs {second}")]
    Conflict {
        area_code: AreaCode,
        year: i32,
        first: String,
        second: String,
    },
    #[error("total enrollment is zero in {year}")]
    ZeroEnrollment { year: i32 },
    #[error("io error: {0}")]
    Io(String),
}

impl IngestError {
    fn parse(line: u64, column: &str, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            column: column.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthRateRecord {
    pub area_code: AreaCode,
    pub area_name: String,
    pub year: i32,
    pub teen_births: Option<u32>,
    /// Births per 1,000 females aged 15–19.
    pub birth_rate: Option<f64>,
    pub rate_ci_lower: Option<f64>,
    pub rate_ci_upper: Option<f64>,
}

impl BirthRateRecord {
    pub fn is_missing(&self) -> bool {
        self.birth_rate.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoolRecord {
    pub school_id: String,
    pub name: String,
    pub area_code: AreaCode,
    pub enrollment_by_year: BTreeMap<i32, u32>,
}

impl SchoolRecord {
    pub fn enrollment(&self, year: i32) -> u32 {
        self.enrollment_by_year.get(&year).copied().unwrap_or(0)
    }
}

/// Column lookup for one CSV file.
struct Columns {
    index: Vec<usize>,
    names: &'static [&'static str],
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, names: &'static [&'static str]) -> Result<Self, IngestError> {
        let mut index = Vec::with_capacity(names.len());
        for name in names {
            let pos = headers
                .iter()
                .position(|h| h.trim().trim_start_matches('\u{feff}') == *name)
                .ok_or_else(|| IngestError::Schema(format!("missing column `{name}`")))?;
            index.push(pos);
        }
        Ok(Columns { index, names })
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, col: usize) -> &'r str {
        rec.get(self.index[col]).unwrap_or("").trim()
    }

    fn name(&self, col: usize) -> &'static str {
        self.names[col]
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

fn csv_error(err: csv::Error) -> IngestError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.kind() {
        csv::ErrorKind::Io(e) => IngestError::Io(e.to_string()),
        csv::ErrorKind::Utf8 { err, .. } => IngestError::parse(
            line,
            "",
            format!("invalid UTF-8 in field {}", err.field() + 1),
        ),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => IngestError::parse(
            line,
            "",
            format!("expected {expected_len} fields, found {len}"),
        ),
        _ => IngestError::parse(line, "", err.to_string()),
    }
}

fn read_headers<R: Read>(reader: &mut csv::Reader<R>) -> Result<csv::StringRecord, IngestError> {
    reader.headers().cloned().map_err(csv_error)
}

fn parse_area_code(raw: &str, line: u64, column: &str) -> Result<AreaCode, IngestError> {
    let code: i64 = raw
        .parse()
        .map_err(|_| IngestError::parse(line, column, format!("not an integer: {raw:?}")))?;
    if !(i64::from(MIN_AREA_CODE)..=i64::from(MAX_AREA_CODE)).contains(&code) {
        return Err(IngestError::parse(
            line,
            column,
            format!("area code {code} outside {MIN_AREA_CODE}..={MAX_AREA_CODE}"),
        ));
    }
    Ok(code as AreaCode)
}

fn parse_year(
    raw: &str,
    range: &RangeInclusive<i32>,
    line: u64,
    column: &str,
) -> Result<i32, IngestError> {
    let year: i32 = raw
        .parse()
        .map_err(|_| IngestError::parse(line, column, format!("not a year: {raw:?}")))?;
    if !range.contains(&year) {
        return Err(IngestError::parse(
            line,
            column,
            format!("year {year} outside {}..={}", range.start(), range.end()),
        ));
    }
    Ok(year)
}

fn parse_count(raw: &str, line: u64, column: &str) -> Result<u32, IngestError> {
    let n: i64 = raw
        .parse()
        .map_err(|_| IngestError::parse(line, column, format!("not an integer: {raw:?}")))?;
    if n < 0 {
        return Err(IngestError::parse(line, column, format!("negative value {n}")));
    }
    u32::try_from(n).map_err(|_| IngestError::parse(line, column, format!("value {n} too large")))
}

fn parse_opt_rate(raw: &str, line: u64, column: &str) -> Result<Option<f64>, IngestError> {
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| IngestError::parse(line, column, format!("not a number: {raw:?}")))?;
    if !v.is_finite() {
        return Err(IngestError::parse(line, column, format!("non-finite value {raw:?}")));
    }
    if v < 0.0 {
        return Err(IngestError::parse(line, column, format!("negative value {v}")));
    }
    Ok(Some(v))
}

/// Parse one birth-rate statistics file.
pub fn parse_birth_rates<R: Read>(input: R) -> Result<Vec<BirthRateRecord>, IngestError> {
    let mut reader = csv_reader(input);
    let headers = read_headers(&mut reader)?;
    let cols = Columns::resolve(&headers, &BIRTH_RATE_COLUMNS)?;

    let mut seen: BTreeMap<(AreaCode, i32), u64> = BTreeMap::new();
    let mut out = Vec::new();
    for result in reader.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let area_code = parse_area_code(cols.field(&rec, 0), line, cols.name(0))?;
        let area_name = cols.field(&rec, 1).to_string();
        if area_name.is_empty() {
            return Err(IngestError::parse(line, cols.name(1), "empty area name"));
        }
        let year = parse_year(cols.field(&rec, 2), &RATE_YEARS, line, cols.name(2))?;
        let births_raw = cols.field(&rec, 3);
        let teen_births = if births_raw.is_empty() {
            None
        } else {
            Some(parse_count(births_raw, line, cols.name(3))?)
        };
        let birth_rate = parse_opt_rate(cols.field(&rec, 4), line, cols.name(4))?;
        let rate_ci_lower = parse_opt_rate(cols.field(&rec, 5), line, cols.name(5))?;
        let rate_ci_upper = parse_opt_rate(cols.field(&rec, 6), line, cols.name(6))?;

        if let (Some(lo), Some(r), Some(hi)) = (rate_ci_lower, birth_rate, rate_ci_upper) {
            if !(lo <= r && r <= hi) {
                return Err(IngestError::parse(
                    line,
                    cols.name(4),
                    format!("rate {r} outside confidence interval [{lo}, {hi}]"),
                ));
            }
        }
        if let Some(first) = seen.insert((area_code, year), line) {
            return Err(IngestError::Schema(format!(
                "line {line}: duplicate row for area {area_code}, year {year} (first on line {first})"
            )));
        }
        out.push(BirthRateRecord {
            area_code,
            area_name,
            year,
            teen_births,
            birth_rate,
            rate_ci_lower,
            rate_ci_upper,
        });
    }
    Ok(out)
}

/// Merge statistics files. Identical duplicates collapse; a duplicated
/// (area, year) with a different rate is a conflict.
pub fn merge_birth_rates(
    files: impl IntoIterator<Item = Vec<BirthRateRecord>>,
) -> Result<Vec<BirthRateRecord>, IngestError> {
    let mut merged: BTreeMap<(AreaCode, i32), BirthRateRecord> = BTreeMap::new();
    for rec in files.into_iter().flatten() {
        match merged.get(&(rec.area_code, rec.year)) {
            Some(prev) if prev.birth_rate != rec.birth_rate => {
                return Err(IngestError::Conflict {
                    area_code: rec.area_code,
                    year: rec.year,
                    first: fmt_opt(prev.birth_rate),
                    second: fmt_opt(rec.birth_rate),
                });
            }
            Some(_) => {}
            None => {
                merged.insert((rec.area_code, rec.year), rec);
            }
        }
    }
    Ok(merged.into_values().collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "missing".to_string(), |v| v.to_string())
}

/// Parse the long-format school enrollment file, one row per school-year.
/// Records come back ordered by `school_id`.
pub fn parse_schools<R: Read>(input: R) -> Result<Vec<SchoolRecord>, IngestError> {
    let mut reader = csv_reader(input);
    let headers = read_headers(&mut reader)?;
    let cols = Columns::resolve(&headers, &SCHOOL_COLUMNS)?;

    let mut schools: BTreeMap<String, SchoolRecord> = BTreeMap::new();
    let mut first_line: BTreeMap<String, u64> = BTreeMap::new();
    let mut year_line: BTreeMap<(String, i32), u64> = BTreeMap::new();
    for result in reader.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let school_id = cols.field(&rec, 0).to_string();
        if school_id.is_empty() {
            return Err(IngestError::parse(line, cols.name(0), "empty school id"));
        }
        let name = cols.field(&rec, 1).to_string();
        if name.is_empty() {
            return Err(IngestError::parse(line, cols.name(1), "empty school name"));
        }
        let area_code = parse_area_code(cols.field(&rec, 2), line, cols.name(2))?;
        let year = parse_year(cols.field(&rec, 3), &PROGRAM_YEARS, line, cols.name(3))?;
        let enrollment = parse_count(cols.field(&rec, 4), line, cols.name(4))?;

        let entry = schools
            .entry(school_id.clone())
            .or_insert_with(|| SchoolRecord {
                school_id: school_id.clone(),
                name: name.clone(),
                area_code,
                enrollment_by_year: BTreeMap::new(),
            });
        let first = *first_line.entry(school_id.clone()).or_insert(line);
        if entry.name != name || entry.area_code != area_code {
            return Err(IngestError::Schema(format!(
                "line {line}: school_id `{school_id}` reused with a different name or area than on line {first}"
            )));
        }
        if let Some(prev) = year_line.insert((school_id.clone(), year), line) {
            return Err(IngestError::Schema(format!(
                "line {line}: duplicate school_id `{school_id}` for year {year} (first on line {prev})"
            )));
        }
        entry.enrollment_by_year.insert(year, enrollment);
    }
    Ok(schools.into_values().collect())
}

fn fmt_opt_num<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_birth_rates<W: Write>(records: &[BirthRateRecord], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| IngestError::Io(e.to_string());
    w.write_record(BIRTH_RATE_COLUMNS).map_err(io)?;
    for r in records {
        w.write_record([
            r.area_code.to_string(),
            r.area_name.clone(),
            r.year.to_string(),
            fmt_opt_num(r.teen_births),
            fmt_opt_num(r.birth_rate),
            fmt_opt_num(r.rate_ci_lower),
            fmt_opt_num(r.rate_ci_upper),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| IngestError::Io(e.to_string()))
}

pub fn write_schools<W: Write>(schools: &[SchoolRecord], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| IngestError::Io(e.to_string());
    w.write_record(SCHOOL_COLUMNS).map_err(io)?;
    for s in schools {
        for (year, n) in &s.enrollment_by_year {
            w.write_record([
                s.school_id.clone(),
                s.name.clone(),
                s.area_code.to_string(),
                year.to_string(),
                n.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| IngestError::Io(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoteKind {
    Interpolated,
    Trimmed,
    Excluded,
}

/// One line of the exclusion/interpolation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestNote {
    pub area_code: AreaCode,
    pub year: Option<i32>,
    pub kind: NoteKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSeriesBuild {
    pub series: BTreeMap<AreaCode, Series>,
    pub notes: Vec<IngestNote>,
}

impl RateSeriesBuild {
    pub fn excluded(&self) -> Vec<AreaCode> {
        self.notes
            .iter()
            .filter(|n| n.kind == NoteKind::Excluded)
            .map(|n| n.area_code)
            .collect()
    }
}

/// First name seen for each area code.
pub fn area_names(records: &[BirthRateRecord]) -> BTreeMap<AreaCode, String> {
    let mut names = BTreeMap::new();
    for r in records {
        names
            .entry(r.area_code)
            .or_insert_with(|| r.area_name.clone());
    }
    names
}

/// Build the per-area birth-rate series `x` over `years`.
///
/// Each area's series runs from its first to its last observed year inside
/// `years`. Interior gaps are linearly interpolated; years outside that span
/// are trimmed. Areas with fewer than [`MIN_USABLE_YEARS`] observations are
/// excluded. Every adjustment is recorded as an [`IngestNote`].
pub fn build_rate_series(records: &[BirthRateRecord], years: RangeInclusive<i32>) -> RateSeriesBuild {
    let mut observed: BTreeMap<AreaCode, BTreeMap<i32, f64>> = BTreeMap::new();
    for r in records {
        let per_area = observed.entry(r.area_code).or_default();
        if let (Some(rate), true) = (r.birth_rate, years.contains(&r.year)) {
            per_area.insert(r.year, rate);
        }
    }

    let mut build = RateSeriesBuild::default();
    for (area, points) in observed {
        if points.len() < MIN_USABLE_YEARS {
            build.notes.push(IngestNote {
                area_code: area,
                year: None,
                kind: NoteKind::Excluded,
                detail: format!(
                    "{} usable years, need at least {MIN_USABLE_YEARS}",
                    points.len()
                ),
            });
            continue;
        }
        let (&first, _) = points.first_key_value().expect("nonempty");
        let (&last, _) = points.last_key_value().expect("nonempty");
        for year in (*years.start()..first).chain(last + 1..=*years.end()) {
            build.notes.push(IngestNote {
                area_code: area,
                year: Some(year),
                kind: NoteKind::Trimmed,
                detail: "no observation at series edge".into(),
            });
        }

        let mut values = Vec::with_capacity((last - first + 1) as usize);
        for year in first..=last {
            if let Some(&v) = points.get(&year) {
                values.push(v);
                continue;
            }
            let (&y0, &v0) = points.range(..year).next_back().expect("interior gap");
            let (&y1, &v1) = points.range(year..).next().expect("interior gap");
            let v = v0 + (v1 - v0) * f64::from(year - y0) / f64::from(y1 - y0);
            values.push(v);
            build.notes.push(IngestNote {
                area_code: area,
                year: Some(year),
                kind: NoteKind::Interpolated,
                detail: format!("linear between {y0} and {y1}"),
            });
        }
        let series = Series::new(first, values).expect("finite observed rates");
        build.series.insert(area, series);
    }
    build
}

/// Per-area grant series `y`, stored in thousands of dollars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrantSeries {
    pub area_code: AreaCode,
    pub start_year: i32,
    pub thousands: Vec<f64>,
}

impl GrantSeries {
    pub fn to_series(&self) -> Series {
        Series::new(self.start_year, self.thousands.clone()).expect("grant values are finite")
    }
}

pub fn total_enrollment(schools: &[SchoolRecord], year: i32) -> u64 {
    schools.iter().map(|s| u64::from(s.enrollment(year))).sum()
}

/// Enrollment per area in `year`, for areas that have at least one school.
pub fn area_enrollment(schools: &[SchoolRecord], year: i32) -> BTreeMap<AreaCode, u64> {
    let mut out = BTreeMap::new();
    for s in schools {
        *out.entry(s.area_code).or_insert(0) += u64::from(s.enrollment(year));
    }
    out
}

/// Historical grant series assuming each year's budget was spent in
/// proportion to school enrollment. `extra_areas` get a series even if they
/// have no schools (all zeros).
pub fn build_grant_series(
    schools: &[SchoolRecord],
    annual_budget: f64,
    years: RangeInclusive<i32>,
    extra_areas: impl IntoIterator<Item = AreaCode>,
) -> Result<BTreeMap<AreaCode, GrantSeries>, IngestError> {
    let start = *years.start();
    let n_years = years.clone().count();
    let mut out: BTreeMap<AreaCode, GrantSeries> = schools
        .iter()
        .map(|s| s.area_code)
        .chain(extra_areas)
        .map(|area| {
            (
                area,
                GrantSeries {
                    area_code: area,
                    start_year: start,
                    thousands: vec![0.0; n_years],
                },
            )
        })
        .collect();

    for (i, year) in years.enumerate() {
        let total = total_enrollment(schools, year);
        if total == 0 {
            return Err(IngestError::ZeroEnrollment { year });
        }
        for s in schools {
            let share = annual_budget * f64::from(s.enrollment(year)) / total as f64;
            out.get_mut(&s.area_code).expect("area present").thousands[i] += share / 1000.0;
        }
    }
    Ok(out)
}

/// Dollars per student when the budget is spread evenly over all students.
pub fn implied_cost_per_student(annual_budget: f64, total_students: u64) -> Result<f64, IngestError> {
    if total_students == 0 {
        return Err(IngestError::ZeroEnrollment { year: 0 });
    }
    Ok(annual_budget / total_students as f64)
}
