//! A dataset directory: one truth GRIDTS, one forecast GRIDTS per lead
//! indexed by initialization date, and `manifest.json` tying them together.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};

use super::gridts::{read_gridts, write_gridts};
use super::series::{ForecastCase, GridSeries};
use super::split::{DatasetManifest, FileRole, ManifestFile};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

fn years_of(dates: &[NaiveDate]) -> Vec<i32> {
    dates.iter().map(|d| d.year()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Writes `truth` and the cases' forecasts under `dir` and returns the
/// manifest, which is also saved there. Cases must share variable, grid
/// and lead count.
pub fn write_dataset(dir: impl AsRef<Path>, truth: &GridSeries, cases: &[ForecastCase], test_years: &[i32]) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    let first = cases.first().ok_or_else(|| Error::contract("dataset without forecast cases"))?;
    let var = truth.variable();
    if cases.iter().any(|c| c.variable != var || (c.lat, c.lon) != (truth.lat(), truth.lon()) || c.leads() != first.leads()) {
        return Err(Error::dim("cases do not share the truth's variable and grid or a lead count"));
    }
    std::fs::create_dir_all(dir)?;
    let truth_name = format!("{}_truth.gts", var.to_lowercase());
    write_gridts(truth, dir.join(&truth_name))?;
    let mut files = vec![ManifestFile {
        path: truth_name,
        variable: var.to_string(),
        role: FileRole::Truth,
        years: truth.years(),
        lead: None,
    }];
    let inits: Vec<NaiveDate> = cases.iter().map(|c| c.init).collect();
    for t in 0..first.leads() {
        let values: Vec<f64> = cases.iter().flat_map(|c| c.forecast_lead(t).iter().copied()).collect();
        let series = GridSeries::new(var, inits.clone(), truth.lat(), truth.lon(), values)?;
        let name = format!("{}_forecast_lead{}.gts", var.to_lowercase(), t + 1);
        write_gridts(&series, dir.join(&name))?;
        files.push(ManifestFile {
            path: name,
            variable: var.to_string(),
            role: FileRole::Forecast,
            years: years_of(&inits),
            lead: Some(t as u32 + 1),
        });
    }
    let manifest = DatasetManifest {
        files,
        test_years: test_years.to_vec(),
    };
    manifest.validate()?;
    manifest.save(dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Truth series and assembled cases of one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedDataset {
    pub manifest: DatasetManifest,
    pub truth: GridSeries,
    pub cases: Vec<ForecastCase>,
}

fn concat(parts: Vec<GridSeries>, what: &str) -> Result<GridSeries> {
    let first = parts.first().ok_or_else(|| Error::config(format!("manifest lists no {what} files")))?;
    let (var, lat, lon) = (first.variable().to_string(), first.lat(), first.lon());
    let mut by_date: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for p in &parts {
        if (p.lat(), p.lon()) != (lat, lon) || p.variable() != var {
            return Err(Error::dim(format!("{what} files disagree on variable or grid")));
        }
        for (t, d) in p.times().iter().enumerate() {
            if by_date.insert(*d, p.field(t).to_vec()).is_some() {
                return Err(Error::config(format!("{what} date {d} appears in more than one file")));
            }
        }
    }
    let times: Vec<NaiveDate> = by_date.keys().copied().collect();
    GridSeries::new(var, times, lat, lon, by_date.into_values().flatten().collect())
}

/// Reads every file of `variable` listed in the manifest at `path`;
/// relative paths resolve against the manifest's directory. A case exists
/// for every initialization present in all lead files whose verifying
/// dates are all covered by the truth.
pub fn load_dataset(path: impl AsRef<Path>, variable: &str) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let manifest = DatasetManifest::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |f: &ManifestFile| -> PathBuf {
        let p = Path::new(&f.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let truth = concat(
        manifest.truth_files(variable).map(|f| read_gridts(resolve(f))).collect::<Result<_>>()?,
        "truth",
    )?;
    let mut leads: BTreeMap<u32, Vec<GridSeries>> = BTreeMap::new();
    for f in manifest.forecast_files(variable) {
        leads.entry(f.lead.expect("validated manifest")).or_default().push(read_gridts(resolve(f))?);
    }
    let count = leads.len() as u32;
    if count == 0 || leads.keys().copied().ne(1..=count) {
        return Err(Error::config(format!("forecast leads for {variable} must be 1..=L, found {:?}", leads.keys().collect::<Vec<_>>())));
    }
    let leads: Vec<GridSeries> = leads.into_values().map(|p| concat(p, "forecast")).collect::<Result<_>>()?;
    if leads.iter().any(|s| (s.lat(), s.lon()) != (truth.lat(), truth.lon())) {
        return Err(Error::dim("forecast and truth grids differ"));
    }
    let mut cases = Vec::new();
    'init: for &init in leads[0].times() {
        let mut forecast = Vec::new();
        let mut verifying = Vec::new();
        for (t, s) in leads.iter().enumerate() {
            let valid = init + chrono::Duration::days(t as i64 + 1);
            match (s.field_at(init), truth.field_at(valid)) {
                (Some(f), Some(y)) => {
                    forecast.extend_from_slice(f);
                    verifying.extend_from_slice(y);
                }
                _ => continue 'init,
            }
        }
        cases.push(ForecastCase::new(variable, init, truth.lat(), truth.lon(), forecast, verifying)?);
    }
    if cases.is_empty() {
        return Err(Error::config(format!("no complete forecast cases for {variable}")));
    }
    Ok(LoadedDataset { manifest, truth, cases })
}
