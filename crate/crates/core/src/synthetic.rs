//! Seeded synthetic datasets shaped like the real inputs: per-area AR(≤3)
//! birth-rate processes with an optional grant effect, and a school roster
//! with year-to-year enrollment swings.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{build_grant_series, BirthRateRecord, SchoolRecord, PROGRAM_YEARS};
use crate::AreaCode;

/// Community area names indexed by `code - 1`.
pub const AREA_NAMES: [&str; 76] = [
    "Rogers Park", "West Ridge", "Uptown", "Lincoln Square", "North Center",
    "Lake View", "Lincoln Park", "Near North Side", "Edison Park", "Norwood Park",
    "Jefferson Park", "Forest Glen", "North Park", "Albany Park", "Portage Park",
    "Irving Park", "Dunning", "Montclare", "Belmont Cragin", "Hermosa",
    "Avondale", "Logan Square", "Humboldt Park", "West Town", "Austin",
    "West Garfield Park", "East Garfield Park", "Near West Side", "North Lawndale",
    "South Lawndale", "Lower West Side", "Loop", "Near South Side", "Armour Square",
    "Douglas", "Oakland", "Fuller Park", "Grand Boulevard", "Kenwood",
    "Washington Park", "Hyde Park", "Woodlawn", "South Shore", "Chatham",
    "Avalon Park", "South Chicago", "Burnside", "Calumet Heights", "Roseland",
    "Pullman", "South Deering", "East Side", "West Pullman", "Riverdale",
    "Hegewisch", "Garfield Ridge", "Archer Heights", "Brighton Park", "McKinley Park",
    "Bridgeport", "New City", "West Elsdon", "Gage Park", "Clearing",
    "West Lawn", "Chicago Lawn", "West Englewood", "Englewood",
    "Greater Grand Crossing", "Ashburn", "Auburn Gresham", "Beverly",
    "Washington Heights", "Mount Greenwood", "Morgan Park", "O'Hare",
];

pub fn area_name(code: AreaCode) -> &'static str {
    AREA_NAMES[usize::from(code) - 1]
}

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_areas: u16,
    pub rate_years: RangeInclusive<i32>,
    pub n_schools: usize,
    /// AR orders are drawn from `1..=max_ar_order`.
    pub max_ar_order: usize,
    /// Uniform noise half-width, relative to the previous value.
    pub noise: f64,
    /// Range of the per-area grant coefficient `b₁` (rate points per
    /// thousand dollars). `None` disables the grant effect.
    pub grant_effect: Option<(f64, f64)>,
    pub annual_budget: f64,
    /// Round published rates to one decimal and emit CI columns.
    pub published_precision: bool,
    /// Areas (by code) with no schools and only two observed years.
    pub sparse_areas: Vec<AreaCode>,
    /// Areas with one interior missing year.
    pub gap_areas: Vec<(AreaCode, i32)>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 2010,
            n_areas: 76,
            rate_years: 1999..=2014,
            n_schools: 130,
            max_ar_order: 3,
            noise: 0.01,
            grant_effect: Some((-0.12, 0.02)),
            annual_budget: crate::DEFAULT_ANNUAL_BUDGET,
            published_precision: true,
            sparse_areas: vec![],
            gap_areas: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaTruth {
    pub ar_coeffs: Vec<f64>,
    pub grant_effect: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub birth_rates: Vec<BirthRateRecord>,
    pub schools: Vec<SchoolRecord>,
    pub truth: BTreeMap<AreaCode, AreaTruth>,
}

/// Coefficients summing to `s`, mostly positive, with stable dynamics for
/// the short horizons generated here.
fn draw_ar_coeffs(rng: &mut impl Rng, order: usize) -> Vec<f64> {
    let s = rng.gen_range(0.93..0.99);
    match order {
        1 => vec![s],
        2 => {
            let w1 = s * rng.gen_range(0.6..1.4);
            vec![w1, s - w1]
        }
        _ => {
            let w1 = s * rng.gen_range(0.5..1.2);
            let w2 = s * rng.gen_range(-0.2..0.4);
            vec![w1, w2, s - w1 - w2]
        }
    }
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let schools = generate_schools(&mut rng, spec);
    let grants = build_grant_series(
        &schools,
        spec.annual_budget,
        PROGRAM_YEARS,
        1..=spec.n_areas,
    )
    .expect("generated schools have enrollment every year");

    let first_year = *spec.rate_years.start();
    let n_years = spec.rate_years.clone().count();
    let mut birth_rates = Vec::new();
    let mut truth = BTreeMap::new();

    for area in 1..=spec.n_areas {
        let order = rng.gen_range(1..=spec.max_ar_order);
        let grant_effect = spec
            .grant_effect
            .map_or(0.0, |(lo, hi)| rng.gen_range(lo..hi));
        let y = &grants[&area];

        let (coeffs, values) = loop {
            let coeffs = draw_ar_coeffs(&mut rng, order);
            let mut x: Vec<f64> = (0..order)
                .map(|_| rng.gen_range(30.0..130.0))
                .collect();
            while x.len() < n_years {
                let t = x.len();
                let year = first_year + t as i32;
                let mut next: f64 = coeffs.iter().enumerate().map(|(i, w)| w * x[t - 1 - i]).sum();
                if spec.grant_effect.is_some() && year > *PROGRAM_YEARS.start() {
                    let prev = (year - 1 - y.start_year) as usize;
                    if let Some(g) = y.thousands.get(prev) {
                        next += grant_effect * g;
                    }
                }
                if spec.noise > 0.0 {
                    next += x[t - 1] * rng.gen_range(-spec.noise..spec.noise);
                }
                x.push(next);
            }
            if x.iter().all(|&v| (5.0..200.0).contains(&v)) {
                break (coeffs, x);
            }
        };
        truth.insert(
            area,
            AreaTruth {
                ar_coeffs: coeffs,
                grant_effect,
            },
        );

        let population = rng.gen_range(400.0..4000.0);
        for (i, &raw) in values.iter().enumerate() {
            let year = first_year + i as i32;
            let sparse = spec.sparse_areas.contains(&area) && i >= 2;
            let gap = spec.gap_areas.contains(&(area, year));
            let mut rec = BirthRateRecord {
                area_code: area,
                area_name: area_name(area).to_string(),
                year,
                teen_births: None,
                birth_rate: None,
                rate_ci_lower: None,
                rate_ci_upper: None,
            };
            if !(sparse || gap) {
                let rate = if spec.published_precision {
                    (raw * 10.0).round() / 10.0
                } else {
                    raw
                };
                rec.birth_rate = Some(rate);
                if spec.published_precision {
                    let births = (rate * population / 1000.0).round();
                    let half = 1.96 * births.max(1.0).sqrt() / population * 1000.0;
                    rec.teen_births = Some(births as u32);
                    rec.rate_ci_lower = Some(((rate - half).max(0.0) * 10.0).floor() / 10.0);
                    rec.rate_ci_upper = Some(((rate + half) * 10.0).ceil() / 10.0);
                }
            }
            birth_rates.push(rec);
        }
    }

    SyntheticDataset {
        birth_rates,
        schools,
        truth,
    }
}

fn generate_schools(rng: &mut impl Rng, spec: &SyntheticSpec) -> Vec<SchoolRecord> {
    let served: Vec<AreaCode> = (1..=spec.n_areas)
        .filter(|a| !spec.sparse_areas.contains(a))
        .collect();
    let mut per_area: BTreeMap<AreaCode, usize> = BTreeMap::new();
    (0..spec.n_schools)
        .map(|i| {
            let area = if i < served.len() {
                served[i]
            } else {
                served[rng.gen_range(0..served.len())]
            };
            let n = per_area.entry(area).or_insert(0);
            *n += 1;
            let base = rng.gen_range(300.0..1250.0);
            let enrollment_by_year = PROGRAM_YEARS
                .map(|y| (y, (base * rng.gen_range(0.8..1.2_f64)).round() as u32))
                .collect();
            SchoolRecord {
                school_id: format!("CPS-{:04}", 1000 + i),
                name: format!("{} High School {}", area_name(area), n),
                area_code: area,
                enrollment_by_year,
            }
        })
        .collect()
}
