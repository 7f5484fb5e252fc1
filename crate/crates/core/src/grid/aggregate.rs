use chrono::{NaiveDate, NaiveDateTime};

use super::series::GridSeries;
use crate::error::{Error, Result};

/// Pointwise mean of ensemble members sharing variable, times and grid.
pub fn ensemble_mean(members: &[GridSeries]) -> Result<GridSeries> {
    let first = members
        .first()
        .ok_or_else(|| Error::contract("ensemble mean of zero members"))?;
    if let Some(bad) = members.iter().position(|m| !m.same_layout(first)) {
        return Err(Error::contract(format!("member {bad} differs in variable, times or grid")));
    }
    let n = members.len() as f64;
    let mut acc = vec![0.0; first.values().len()];
    for m in members {
        for (a, v) in acc.iter_mut().zip(m.values()) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= n);
    first.with_values(acc)
}

/// Sub-daily fields, `steps_per_day` evenly spaced steps per calendar day.
#[derive(Clone, Debug, PartialEq)]
pub struct SubdailySeries {
    pub variable: String,
    pub times: Vec<NaiveDateTime>,
    pub lat: usize,
    pub lon: usize,
    /// `[T, lat, lon]`
    pub values: Vec<f64>,
}

/// Averages consecutive blocks of `steps_per_day` fields into one daily
/// field dated by the block's calendar day.
pub fn daily_average(sub: &SubdailySeries, steps_per_day: usize) -> Result<GridSeries> {
    let n = sub.lat * sub.lon;
    let t = sub.times.len();
    if steps_per_day == 0 || !t.is_multiple_of(steps_per_day) {
        return Err(Error::contract(format!("{t} steps are not divisible into days of {steps_per_day}")));
    }
    if sub.values.len() != t * n {
        return Err(Error::contract("sub-daily payload does not match times × grid"));
    }
    let cadence = chrono::Duration::seconds(86_400 / steps_per_day as i64);
    let mut dates: Vec<NaiveDate> = Vec::with_capacity(t / steps_per_day);
    let mut values = Vec::with_capacity(t / steps_per_day * n);
    for (b, block) in sub.times.chunks(steps_per_day).enumerate() {
        let day = block[0].date();
        for (s, ts) in block.iter().enumerate() {
            if ts.date() != day || (s > 0 && *ts - block[s - 1] != cadence) {
                return Err(Error::contract(format!("step {} breaks the {steps_per_day}-per-day cadence", b * steps_per_day + s)));
            }
        }
        let mut mean = vec![0.0; n];
        for s in 0..steps_per_day {
            let off = (b * steps_per_day + s) * n;
            for (m, v) in mean.iter_mut().zip(&sub.values[off..off + n]) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= steps_per_day as f64);
        dates.push(day);
        values.extend(mean);
    }
    GridSeries::new(sub.variable.clone(), dates, sub.lat, sub.lon, values)
}
