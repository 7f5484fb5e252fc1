//! Verification in physical units: RMSE, anomaly correlation, bias maps
//! and per-lead skill tables.

use std::collections::BTreeMap;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::climnorm::Climatology;
use crate::error::{Error, Result};
use crate::grid::synth::lat_center;
use crate::grid::ForecastCase;

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::dim(format!("fields of {} and {} points", a.len(), b.len())));
    }
    Ok(())
}

/// `cos(latitude)` per gridpoint, row-major.
pub fn area_weights(lat: usize, lon: usize) -> Vec<f64> {
    (0..lat * lon).map(|p| lat_center(p / lon, lat).to_radians().cos()).collect()
}

/// Root mean squared difference over all points, unweighted.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_len(pred, truth)?;
    let s: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((s / pred.len() as f64).sqrt())
}

pub fn rmse_weighted(pred: &[f64], truth: &[f64], weights: &[f64]) -> Result<f64> {
    check_len(pred, truth)?;
    check_len(pred, weights)?;
    let (mut s, mut w) = (0.0, 0.0);
    for ((a, b), k) in pred.iter().zip(truth).zip(weights) {
        s += k * (a - b) * (a - b);
        w += k;
    }
    Ok((s / w).sqrt())
}

/// Anomaly correlation and whether either anomaly field had zero norm, in
/// which case the value is reported as 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Acc {
    pub value: f64,
    pub degenerate: bool,
}

/// Uncentered spatial correlation of `pred − clim` with `truth − clim`.
pub fn acc(pred: &[f64], truth: &[f64], clim: &[f64]) -> Result<Acc> {
    check_len(pred, truth)?;
    check_len(pred, clim)?;
    acc_inner(pred, truth, clim, None)
}

pub fn acc_weighted(pred: &[f64], truth: &[f64], clim: &[f64], weights: &[f64]) -> Result<Acc> {
    check_len(pred, truth)?;
    check_len(pred, clim)?;
    check_len(pred, weights)?;
    acc_inner(pred, truth, clim, Some(weights))
}

fn acc_inner(pred: &[f64], truth: &[f64], clim: &[f64], weights: Option<&[f64]>) -> Result<Acc> {
    let (mut num, mut sp, mut st) = (0.0, 0.0, 0.0);
    for k in 0..pred.len() {
        let w = weights.map_or(1.0, |w| w[k]);
        let (a, b) = (pred[k] - clim[k], truth[k] - clim[k]);
        num += w * a * b;
        sp += w * a * a;
        st += w * b * b;
    }
    if sp == 0.0 || st == 0.0 {
        return Ok(Acc {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Acc {
        value: (num / (sp.sqrt() * st.sqrt())).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Mean signed error per gridpoint over every case and lead.
pub fn bias_map(cases: &[ForecastCase]) -> Result<Vec<f64>> {
    let first = cases.first().ok_or_else(|| Error::contract("bias map of zero cases"))?;
    let n = first.grid_len();
    let mut acc = vec![0.0; n];
    let mut count = 0usize;
    for c in cases {
        if c.grid_len() != n {
            return Err(Error::dim("cases differ in grid"));
        }
        for t in 0..c.leads() {
            for ((a, f), y) in acc.iter_mut().zip(c.forecast_lead(t)).zip(c.truth_lead(t)) {
                *a += f - y;
            }
            count += 1;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillRecord {
    pub model: String,
    pub variable: String,
    pub lead_days: usize,
    pub rmse: f64,
    pub acc: f64,
    pub n_cases: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillOptions {
    /// Weight points by `cos(latitude)`.
    pub area_weighted: bool,
}

/// Per-lead mean RMSE and ACC for each run over month-start
/// initializations. All runs must cover the same cases.
pub fn skill_table(runs: &[(String, Vec<ForecastCase>)], clim: &Climatology, options: SkillOptions) -> Result<Vec<SkillRecord>> {
    let (_, reference) = runs.first().ok_or_else(|| Error::contract("skill table of zero runs"))?;
    let key = |c: &ForecastCase| (c.variable.clone(), c.init, c.leads());
    let ref_keys: Vec<_> = reference.iter().map(key).collect();
    for (id, cases) in runs {
        let keys: Vec<_> = cases.iter().map(key).collect();
        if keys != ref_keys || cases.iter().zip(reference).any(|(a, b)| a.truth != b.truth) {
            return Err(Error::contract(format!("run {id} does not share the evaluation case set")));
        }
    }
    let mut out = Vec::new();
    for (id, cases) in runs {
        let monthly: Vec<&ForecastCase> = cases.iter().filter(|c| c.init.day() == 1).collect();
        if monthly.is_empty() {
            return Err(Error::contract("no month-start initializations to verify"));
        }
        let mut by: BTreeMap<(String, usize), (f64, f64, usize)> = BTreeMap::new();
        for c in monthly {
            clim.check_grid(c.lat, c.lon)?;
            let weights = options.area_weighted.then(|| area_weights(c.lat, c.lon));
            for t in 0..c.leads() {
                let (f, y) = (c.forecast_lead(t), c.truth_lead(t));
                let mu = clim.mu_at(c.valid_date(t));
                let (r, a) = match &weights {
                    Some(w) => (rmse_weighted(f, y, w)?, acc_weighted(f, y, mu, w)?),
                    None => (rmse(f, y)?, acc(f, y, mu)?),
                };
                let e = by.entry((c.variable.clone(), t + 1)).or_insert((0.0, 0.0, 0));
                e.0 += r;
                e.1 += a.value;
                e.2 += 1;
            }
        }
        for ((variable, lead), (r, a, n)) in by {
            out.push(SkillRecord {
                model: id.clone(),
                variable,
                lead_days: lead,
                rmse: r / n as f64,
                acc: a / n as f64,
                n_cases: n,
            });
        }
    }
    Ok(out)
}

pub const SKILL_HEADER: &str = "model,variable,lead_days,rmse,acc,n_cases";

pub fn skill_csv(records: &[SkillRecord]) -> String {
    let mut s = format!("{SKILL_HEADER}\n");
    for r in records {
        s.push_str(&format!("{},{},{},{},{},{}\n", r.model, r.variable, r.lead_days, r.rmse, r.acc, r.n_cases));
    }
    s
}

/// Mean of `rmse` over records of `model` with `lead_days` in `leads`.
pub fn mean_rmse(records: &[SkillRecord], model: &str, leads: std::ops::RangeInclusive<usize>) -> f64 {
    let v: Vec<f64> = records
        .iter()
        .filter(|r| r.model == model && leads.contains(&r.lead_days))
        .map(|r| r.rmse)
        .collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}
