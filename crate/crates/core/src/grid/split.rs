use std::collections::BTreeSet;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Test years of the decadal hold-out used throughout the experiments.
pub const DECADAL_TEST_YEARS: [i32; 5] = [1981, 1991, 2001, 2011, 2021];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileRole {
    Forecast,
    Truth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub path: String,
    pub variable: String,
    pub role: FileRole,
    pub years: Vec<i32>,
    /// Lead in days for forecast files: one GRIDTS per lead, indexed by
    /// initialization date.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub files: Vec<ManifestFile>,
    pub test_years: Vec<i32>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let m: DatasetManifest = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Every forecast file needs a truth file of the same variable covering
    /// its years.
    pub fn validate(&self) -> Result<()> {
        for f in self.files.iter().filter(|f| f.role == FileRole::Forecast) {
            if f.lead.is_none() {
                return Err(Error::config(format!("forecast file {} has no lead", f.path)));
            }
            let covered: BTreeSet<i32> = self
                .files
                .iter()
                .filter(|t| t.role == FileRole::Truth && t.variable == f.variable)
                .flat_map(|t| t.years.iter().copied())
                .collect();
            if let Some(y) = f.years.iter().find(|y| !covered.contains(y)) {
                return Err(Error::config(format!("forecast file {} year {y} has no truth counterpart", f.path)));
            }
        }
        Ok(())
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.files.iter().flat_map(|f| f.years.iter().copied()).collect()
    }

    pub fn truth_files<'a>(&'a self, variable: &'a str) -> impl Iterator<Item = &'a ManifestFile> + 'a {
        self.files
            .iter()
            .filter(move |f| f.role == FileRole::Truth && f.variable == variable)
    }

    pub fn forecast_files<'a>(&'a self, variable: &'a str) -> impl Iterator<Item = &'a ManifestFile> + 'a {
        self.files
            .iter()
            .filter(move |f| f.role == FileRole::Forecast && f.variable == variable)
    }

    pub fn variables(&self) -> Vec<String> {
        let mut v: Vec<String> = self.files.iter().map(|f| f.variable.clone()).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Year-based train/test partition with verification-window exclusion.
#[derive(Clone, Debug, PartialEq)]
pub struct DecadalSplit {
    test_years: BTreeSet<i32>,
}

impl DecadalSplit {
    pub fn new(test_years: impl IntoIterator<Item = i32>) -> Self {
        Self {
            test_years: test_years.into_iter().collect(),
        }
    }

    pub fn test_years(&self) -> &BTreeSet<i32> {
        &self.test_years
    }

    pub fn is_test_year(&self, year: i32) -> bool {
        self.test_years.contains(&year)
    }

    /// Partitions `years` into (train, test); both must be nonempty and the
    /// test years must all be present.
    pub fn partition_years(&self, years: &BTreeSet<i32>) -> Result<(Vec<i32>, Vec<i32>)> {
        if let Some(y) = self.test_years.iter().find(|y| !years.contains(y)) {
            return Err(Error::config(format!("test year {y} is not covered by the data")));
        }
        let train: Vec<i32> = years.iter().copied().filter(|y| !self.is_test_year(*y)).collect();
        let test: Vec<i32> = years.iter().copied().filter(|y| self.is_test_year(*y)).collect();
        if train.is_empty() || test.is_empty() {
            return Err(Error::config(format!(
                "split leaves {} train and {} test years",
                train.len(),
                test.len()
            )));
        }
        Ok((train, test))
    }

    pub fn is_test_case(&self, init: NaiveDate) -> bool {
        self.is_test_year(init.year())
    }

    /// A training case must start outside the test years and must not
    /// verify on any date inside them.
    pub fn is_train_case(&self, init: NaiveDate, leads: usize) -> bool {
        if self.is_test_year(init.year()) {
            return false;
        }
        (1..=leads as i64).all(|t| !self.is_test_year((init + chrono::Duration::days(t)).year()))
    }
}

/// Splits a manifest by year into (train, test) manifests.
pub fn decadal_split(manifest: &DatasetManifest, test_years: &[i32]) -> Result<(DatasetManifest, DatasetManifest)> {
    let split = DecadalSplit::new(test_years.iter().copied());
    split.partition_years(&manifest.years())?;
    let restrict = |keep_test: bool| DatasetManifest {
        files: manifest
            .files
            .iter()
            .filter_map(|f| {
                let years: Vec<i32> = f
                    .years
                    .iter()
                    .copied()
                    .filter(|y| split.is_test_year(*y) == keep_test)
                    .collect();
                (!years.is_empty()).then(|| ManifestFile { years, ..f.clone() })
            })
            .collect(),
        test_years: test_years.to_vec(),
    };
    Ok((restrict(false), restrict(true)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(years: std::ops::RangeInclusive<i32>) -> DatasetManifest {
        DatasetManifest {
            files: vec![
                ManifestFile {
                    path: "truth.gts".into(),
                    variable: "T2m".into(),
                    role: FileRole::Truth,
                    years: years.clone().collect(),
                    lead: None,
                },
                ManifestFile {
                    path: "fc1.gts".into(),
                    variable: "T2m".into(),
                    role: FileRole::Forecast,
                    years: years.collect(),
                    lead: Some(1),
                },
            ],
            test_years: DECADAL_TEST_YEARS.to_vec(),
        }
    }

    #[test]
    fn full_record_split_has_36_train_years() {
        let m = manifest(1981..=2021);
        let (train, test) = decadal_split(&m, &DECADAL_TEST_YEARS).unwrap();
        assert_eq!(train.years().len(), 36);
        assert_eq!(test.years().len(), 5);
        assert!(train.years().is_disjoint(&test.years()));
        assert_eq!(train.years().union(&test.years()).count(), 41);
    }

    #[test]
    fn all_years_as_test_is_config_error() {
        let m = manifest(1981..=1983);
        assert!(matches!(decadal_split(&m, &[1981, 1982, 1983]), Err(Error::Config(_))));
        assert!(matches!(decadal_split(&m, &[1999]), Err(Error::Config(_))));
    }

    #[test]
    fn late_december_case_before_test_year_is_excluded() {
        let split = DecadalSplit::new(DECADAL_TEST_YEARS);
        let dec26 = NaiveDate::from_ymd_opt(1990, 12, 26).unwrap();
        assert!(!split.is_train_case(dec26, 7));
        assert!(split.is_train_case(dec26, 5));
        assert!(!split.is_test_case(dec26));
        let dec20 = NaiveDate::from_ymd_opt(1990, 12, 20).unwrap();
        assert!(split.is_train_case(dec20, 7));
    }

    #[test]
    fn manifest_requires_truth_counterpart() {
        let mut m = manifest(2000..=2001);
        m.files[0].years = vec![2000];
        assert!(m.validate().is_err());
    }

    #[test]
    fn manifest_json_rejects_unknown_keys() {
        let text = r#"{"files": [], "test_years": [1981], "extra": 1}"#;
        assert!(serde_json::from_str::<DatasetManifest>(text).is_err());
    }
}
