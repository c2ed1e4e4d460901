use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("series must contain at least one value")]
    Empty,
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
}

/// A year-indexed series of finite values. The value at index `i` belongs to
/// year `start_year + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries", into = "RawSeries")]
pub struct Series {
    values: Vec<f64>,
    start_year: i32,
}

#[derive(Serialize, Deserialize)]
struct RawSeries {
    start_year: i32,
    values: Vec<f64>,
}

impl TryFrom<RawSeries> for Series {
    type Error = SeriesError;

    fn try_from(raw: RawSeries) -> Result<Self, Self::Error> {
        Series::new(raw.start_year, raw.values)
    }
}

impl From<Series> for RawSeries {
    fn from(s: Series) -> Self {
        RawSeries {
            start_year: s.start_year,
            values: s.values,
        }
    }
}

impl Series {
    pub fn new(start_year: i32, values: Vec<f64>) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SeriesError::NonFinite { index, value });
        }
        Ok(Series { values, start_year })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    /// Year label of the last value.
    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        if year < self.start_year {
            return None;
        }
        self.values.get((year - self.start_year) as usize).copied()
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len()).map(move |i| self.start_year + i as i32)
    }

    /// Restrict to `[from, to]`; `None` when the window misses the series.
    pub fn window(&self, from: i32, to: i32) -> Option<Series> {
        let lo = from.max(self.start_year);
        let hi = to.min(self.end_year());
        if lo > hi {
            return None;
        }
        let a = (lo - self.start_year) as usize;
        let b = (hi - self.start_year) as usize;
        Some(Series {
            values: self.values[a..=b].to_vec(),
            start_year: lo,
        })
    }

    /// Copy with the value at `year` replaced; `None` if the year is outside the series.
    pub fn with_value(&self, year: i32, value: f64) -> Option<Series> {
        if !value.is_finite() || year < self.start_year || year > self.end_year() {
            return None;
        }
        let mut values = self.values.clone();
        values[(year - self.start_year) as usize] = value;
        Some(Series {
            values,
            start_year: self.start_year,
        })
    }
}
