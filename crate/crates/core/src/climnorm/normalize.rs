use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::climatology::{Climatology, DEFAULT_SIGMA_FLOOR};
use crate::error::{Error, Result};
use crate::grid::{ForecastCase, GridSeries};

/// Series in dimensionless units plus the identifier of its reference.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedSeries {
    pub series: GridSeries,
    pub reference: String,
}

/// Single global mean and std.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticStats {
    pub mean: f64,
    pub std: f64,
}

impl StaticStats {
    /// Population mean and std of `values`, std floored.
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("static normalization of an empty array"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: var.sqrt().max(DEFAULT_SIGMA_FLOOR),
        })
    }

    pub fn id(&self) -> String {
        format!("static/{:e}/{:e}", self.mean, self.std)
    }
}

/// `Z = (X − μ)/σ` with one μ and σ over the whole array.
pub fn normalize_static(x: &GridSeries) -> Result<(NormalizedSeries, f64, f64)> {
    let st = StaticStats::fit(x.values())?;
    let z = x.values().iter().map(|v| (v - st.mean) / st.std).collect();
    Ok((
        NormalizedSeries {
            series: x.with_values(z)?,
            reference: st.id(),
        },
        st.mean,
        st.std,
    ))
}

/// Pointwise z-score against the climatology slot of each date.
pub fn normalize_dynamic(x: &GridSeries, clim: &Climatology) -> Result<NormalizedSeries> {
    clim.check_grid(x.lat(), x.lon())?;
    let mut z = Vec::with_capacity(x.values().len());
    for (t, d) in x.times().iter().enumerate() {
        let (mu, sd) = (clim.mu_at(*d), clim.sigma_at(*d));
        z.extend(x.field(t).iter().zip(mu).zip(sd).map(|((v, m), s)| (v - m) / s));
    }
    Ok(NormalizedSeries {
        series: x.with_values(z)?,
        reference: clim.id(),
    })
}

/// Exact inverse of [`normalize_dynamic`].
pub fn denormalize_dynamic(z: &NormalizedSeries, clim: &Climatology) -> Result<GridSeries> {
    let s = &z.series;
    clim.check_grid(s.lat(), s.lon())?;
    let mut x = Vec::with_capacity(s.values().len());
    for (t, d) in s.times().iter().enumerate() {
        let (mu, sd) = (clim.mu_at(*d), clim.sigma_at(*d));
        x.extend(s.field(t).iter().zip(mu).zip(sd).map(|((v, m), s)| v * s + m));
    }
    s.with_values(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Static,
    Dynamic,
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormKind::Static => "static",
            NormKind::Dynamic => "dynamic",
        })
    }
}

/// Maps physical forecast cases into model space and back. Forecast leads
/// are referenced to the climatology of their verifying date.
#[derive(Clone, Debug)]
pub enum Normalizer {
    Static(StaticStats),
    Dynamic(Arc<Climatology>),
}

/// A case in model space, `[leads, lat, lon]` each.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedCase {
    pub forecast: Vec<f64>,
    pub truth: Vec<f64>,
}

impl Normalizer {
    /// Fits the requested scheme on the training truth.
    pub fn fit(kind: NormKind, train: &GridSeries, window: usize, sigma_floor: f64) -> Result<Self> {
        Ok(match kind {
            NormKind::Static => Normalizer::Static(StaticStats::fit(train.values())?),
            NormKind::Dynamic => Normalizer::Dynamic(Arc::new(super::fit_climatology(train, window, sigma_floor)?)),
        })
    }

    pub fn kind(&self) -> NormKind {
        match self {
            Normalizer::Static(_) => NormKind::Static,
            Normalizer::Dynamic(_) => NormKind::Dynamic,
        }
    }

    pub fn reference(&self) -> String {
        match self {
            Normalizer::Static(s) => s.id(),
            Normalizer::Dynamic(c) => c.id(),
        }
    }

    pub fn check_grid(&self, lat: usize, lon: usize) -> Result<()> {
        match self {
            Normalizer::Static(_) => Ok(()),
            Normalizer::Dynamic(c) => c.check_grid(lat, lon),
        }
    }

    /// One field valid on `date`.
    pub fn normalize_field(&self, values: &[f64], date: NaiveDate) -> Vec<f64> {
        match self {
            Normalizer::Static(s) => values.iter().map(|v| (v - s.mean) / s.std).collect(),
            Normalizer::Dynamic(c) => {
                let (mu, sd) = (c.mu_at(date), c.sigma_at(date));
                values.iter().zip(mu).zip(sd).map(|((v, m), s)| (v - m) / s).collect()
            }
        }
    }

    pub fn denormalize_field(&self, z: &[f64], date: NaiveDate) -> Vec<f64> {
        match self {
            Normalizer::Static(s) => z.iter().map(|v| v * s.std + s.mean).collect(),
            Normalizer::Dynamic(c) => {
                let (mu, sd) = (c.mu_at(date), c.sigma_at(date));
                z.iter().zip(mu).zip(sd).map(|((v, m), s)| v * s + m).collect()
            }
        }
    }

    pub fn normalize_case(&self, case: &ForecastCase) -> Result<NormalizedCase> {
        self.check_grid(case.lat, case.lon)?;
        let mut forecast = Vec::with_capacity(case.forecast.len());
        let mut truth = Vec::with_capacity(case.truth.len());
        for t in 0..case.leads() {
            let d = case.valid_date(t);
            forecast.extend(self.normalize_field(case.forecast_lead(t), d));
            truth.extend(self.normalize_field(case.truth_lead(t), d));
        }
        Ok(NormalizedCase { forecast, truth })
    }

    /// Maps a model-space forecast `[leads, lat, lon]` for `case` back to
    /// physical units.
    pub fn denormalize_forecast(&self, case: &ForecastCase, z: &[f64]) -> Result<Vec<f64>> {
        let n = case.grid_len();
        if !z.len().is_multiple_of(n) || z.len() / n > case.leads() {
            return Err(Error::dim(format!("{} values do not form leads of a {}×{} grid", z.len(), case.lat, case.lon)));
        }
        let mut out = Vec::with_capacity(z.len());
        for (t, chunk) in z.chunks(n).enumerate() {
            out.extend(self.denormalize_field(chunk, case.valid_date(t)));
        }
        Ok(out)
    }
}

/// Serializable description of a [`Normalizer`]; dynamic schemes record
/// only the climatology id, which must match on reload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub kind: NormKind,
    pub reference: String,
    pub static_stats: Option<StaticStats>,
}

impl Normalizer {
    pub fn spec(&self) -> NormSpec {
        NormSpec {
            kind: self.kind(),
            reference: self.reference(),
            static_stats: match self {
                Normalizer::Static(s) => Some(*s),
                Normalizer::Dynamic(_) => None,
            },
        }
    }
}

impl NormSpec {
    /// Rebuilds the normalizer; dynamic specs need the climatology they
    /// were trained against.
    pub fn resolve(&self, clim: Option<Arc<Climatology>>) -> Result<Normalizer> {
        match (self.kind, self.static_stats, clim) {
            (NormKind::Static, Some(s), _) => Ok(Normalizer::Static(s)),
            (NormKind::Static, None, _) => Err(Error::contract("static normalization spec without statistics")),
            (NormKind::Dynamic, _, Some(c)) if c.id() == self.reference => Ok(Normalizer::Dynamic(c)),
            (NormKind::Dynamic, _, Some(c)) => Err(Error::contract(format!(
                "climatology {} does not match the model's reference {}",
                c.id(),
                self.reference
            ))),
            (NormKind::Dynamic, _, None) => Err(Error::config(format!(
                "model uses dynamic normalization against {}; supply its climatology",
                self.reference
            ))),
        }
    }
}
