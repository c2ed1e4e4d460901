//! Regenerate the committed CSV fixtures under `fixtures/`.
//!
//! ```text
//! cargo run -p tppi-core --example make_fixtures -- fixtures
//! ```

use std::fs::{self, File};
use std::path::Path;

use tppi_core::ingest::{write_birth_rates, write_schools, BirthRateRecord};
use tppi_core::synthetic::{generate, SyntheticSpec};

const DESK_CONFIG: &str = r#"{
  "birth_rates": ["birth_rates_1999_2009.csv", "birth_rates_2010_2014.csv"],
  "schools": "schools.csv",
  "annual_budget": 3940000.0,
  "lags": [1, 2, 3, 4, 5],
  "arx_configs": [
    { "endo_lags": 1, "exo_delay": 1, "exo_lags": 1 },
    { "endo_lags": 2, "exo_delay": 1, "exo_lags": 1 },
    { "endo_lags": 1, "exo_delay": 1, "exo_lags": 2 },
    { "endo_lags": 2, "exo_delay": 1, "exo_lags": 2 }
  ],
  "policies": ["equal_per_school", "equal_per_student", "prediction_based", "effectiveness_based"],
  "out": "out",
  "format": "csv",
  "plots": true,
  "window_mode": "max_data"
}
"#;

fn write_rates(path: &Path, records: &[BirthRateRecord]) {
    write_birth_rates(records, File::create(path).expect("create")).expect("write rates");
}

fn write_set(dir: &Path, spec: &SyntheticSpec, split_at: Option<i32>) {
    fs::create_dir_all(dir).expect("create fixture dir");
    let data = generate(spec);
    match split_at {
        Some(year) => {
            let (early, late): (Vec<_>, Vec<_>) =
                data.birth_rates.into_iter().partition(|r| r.year < year);
            write_rates(&dir.join(format!("birth_rates_1999_{}.csv", year - 1)), &early);
            write_rates(&dir.join(format!("birth_rates_{year}_2014.csv")), &late);
        }
        None => write_rates(&dir.join("birth_rates.csv"), &data.birth_rates),
    }
    write_schools(&data.schools, File::create(dir.join("schools.csv")).expect("create"))
        .expect("write schools");
}

fn main() {
    let root = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let root = Path::new(&root);

    // Desk-scale stand-in for the real data: 76 areas, one sparse area with
    // no schools, one interior gap, heterogeneous grant effects.
    let desk = SyntheticSpec {
        sparse_areas: vec![76],
        gap_areas: vec![(12, 2005)],
        ..SyntheticSpec::default()
    };
    write_set(&root.join("desk"), &desk, Some(2010));
    fs::write(root.join("desk/config.json"), DESK_CONFIG).expect("write config");

    // Ten years per area so the lag-5 aligned design has five rows.
    let short = SyntheticSpec {
        seed: 7,
        rate_years: 1999..=2008,
        grant_effect: None,
        noise: 0.005,
        ..SyntheticSpec::default()
    };
    write_set(&root.join("ar_short"), &short, None);

    // Noise-free AR(<=2) at full precision.
    let ar2 = SyntheticSpec {
        seed: 2,
        max_ar_order: 2,
        noise: 0.0,
        grant_effect: None,
        published_precision: false,
        ..SyntheticSpec::default()
    };
    write_set(&root.join("ar2"), &ar2, None);
}
