use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// Days since 1970-01-01 for `date`.
pub fn days_since_epoch(date: NaiveDate) -> i64 {
    (date - epoch()).num_days()
}

pub fn date_from_days(days: i64) -> Option<NaiveDate> {
    epoch().checked_add_signed(chrono::Duration::try_days(days)?)
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch")
}

/// Climatology slot for a calendar date: 0..=364 for the non-leap day of
/// year (Feb 29 excluded), 365 for Feb 29.
pub fn doy_slot(date: NaiveDate) -> usize {
    if date.month() == 2 && date.day() == 29 {
        return 365;
    }
    let ord = date.ordinal0() as usize;
    if date.leap_year() && date.month() > 2 {
        ord - 1
    } else {
        ord
    }
}

/// Time-ordered stack of `lat × lon` fields for one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSeries {
    variable: String,
    times: Vec<NaiveDate>,
    lat: usize,
    lon: usize,
    values: Vec<f64>,
}

impl GridSeries {
    pub fn new(variable: impl Into<String>, times: Vec<NaiveDate>, lat: usize, lon: usize, values: Vec<f64>) -> Result<Self> {
        if lat == 0 || lon == 0 {
            return Err(Error::contract("grid dimensions must be positive"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("series times must be strictly increasing"));
        }
        if times.len() * lat * lon != values.len() {
            return Err(Error::contract(format!(
                "{} times × {lat} × {lon} does not match {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::contract(format!("NaN at flat index {i}")));
        }
        Ok(Self {
            variable: variable.into(),
            times,
            lat,
            lon,
            values,
        })
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn times(&self) -> &[NaiveDate] {
        &self.times
    }

    pub fn lat(&self) -> usize {
        self.lat
    }

    pub fn lon(&self) -> usize {
        self.lon
    }

    pub fn grid_len(&self) -> usize {
        self.lat * self.lon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn field(&self, t: usize) -> &[f64] {
        let n = self.grid_len();
        &self.values[t * n..(t + 1) * n]
    }

    /// Index of `date` in the series, if present.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.times.binary_search(&date).ok()
    }

    pub fn field_at(&self, date: NaiveDate) -> Option<&[f64]> {
        self.index_of(date).map(|t| self.field(t))
    }

    /// Distinct calendar years present, ascending.
    pub fn years(&self) -> Vec<i32> {
        let mut ys: Vec<i32> = self.times.iter().map(|d| d.year()).collect();
        ys.dedup();
        ys
    }

    /// Sub-series restricted to dates whose year satisfies `keep`.
    pub fn filter_years(&self, keep: impl Fn(i32) -> bool) -> GridSeries {
        let n = self.grid_len();
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (t, d) in self.times.iter().enumerate() {
            if keep(d.year()) {
                times.push(*d);
                values.extend_from_slice(&self.values[t * n..(t + 1) * n]);
            }
        }
        GridSeries {
            variable: self.variable.clone(),
            times,
            lat: self.lat,
            lon: self.lon,
            values,
        }
    }

    pub fn same_layout(&self, other: &GridSeries) -> bool {
        self.variable == other.variable && self.times == other.times && self.lat == other.lat && self.lon == other.lon
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<GridSeries> {
        GridSeries::new(self.variable.clone(), self.times.clone(), self.lat, self.lon, values)
    }
}

/// One forecast initialization with `leads` daily leads and the verifying
/// analysis for each.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastCase {
    pub variable: String,
    pub init: NaiveDate,
    pub lat: usize,
    pub lon: usize,
    /// `[leads, lat, lon]`; lead index `t` is valid at `init + t + 1` days.
    pub forecast: Vec<f64>,
    /// `[leads, lat, lon]` verifying analysis.
    pub truth: Vec<f64>,
}

impl ForecastCase {
    pub fn new(variable: impl Into<String>, init: NaiveDate, lat: usize, lon: usize, forecast: Vec<f64>, truth: Vec<f64>) -> Result<Self> {
        if forecast.len() != truth.len() || forecast.is_empty() || !forecast.len().is_multiple_of(lat * lon) {
            return Err(Error::contract("forecast and truth must be equally shaped [L, I, J]"));
        }
        Ok(Self {
            variable: variable.into(),
            init,
            lat,
            lon,
            forecast,
            truth,
        })
    }

    pub fn leads(&self) -> usize {
        self.forecast.len() / (self.lat * self.lon)
    }

    pub fn grid_len(&self) -> usize {
        self.lat * self.lon
    }

    /// Valid date of lead index `t` (0-based; lead `t + 1` days).
    pub fn valid_date(&self, t: usize) -> NaiveDate {
        self.init + chrono::Duration::days(t as i64 + 1)
    }

    pub fn forecast_lead(&self, t: usize) -> &[f64] {
        let n = self.grid_len();
        &self.forecast[t * n..(t + 1) * n]
    }

    pub fn truth_lead(&self, t: usize) -> &[f64] {
        let n = self.grid_len();
        &self.truth[t * n..(t + 1) * n]
    }

    /// Keeps only the first `leads` leads.
    pub fn truncated(&self, leads: usize) -> ForecastCase {
        let n = leads.min(self.leads()) * self.grid_len();
        ForecastCase {
            variable: self.variable.clone(),
            init: self.init,
            lat: self.lat,
            lon: self.lon,
            forecast: self.forecast[..n].to_vec(),
            truth: self.truth[..n].to_vec(),
        }
    }

    /// Same case with the forecast replaced, e.g. by a corrector's output.
    pub fn with_forecast(&self, forecast: Vec<f64>) -> Result<ForecastCase> {
        ForecastCase::new(self.variable.clone(), self.init, self.lat, self.lon, forecast, self.truth.clone())
    }
}
