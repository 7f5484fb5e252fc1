use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ForecastCase;

/// Relative variance below which a gridpoint's slope is not identifiable.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Per-gridpoint, per-lead affine correction `a·f + b`, fitted by ordinary
/// least squares of truth on forecast.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridwiseLinear {
    pub variable: String,
    pub leads: usize,
    pub lat: usize,
    pub lon: usize,
    /// `[L, lat, lon]`.
    pub slope: Vec<f64>,
    pub intercept: Vec<f64>,
    /// Gridpoint-leads where the forecast had no spread and the fit fell
    /// back to `a = 1`, `b = mean(truth - forecast)`.
    pub degenerate: usize,
}

impl GridwiseLinear {
    pub fn fit(cases: &[ForecastCase]) -> Result<Self> {
        let first = cases.first().ok_or_else(|| Error::contract("linear baseline needs at least one training case"))?;
        let (leads, lat, lon) = (first.leads(), first.lat, first.lon);
        for c in cases {
            if (c.leads(), c.lat, c.lon) != (leads, lat, lon) || c.variable != first.variable {
                return Err(Error::dim(format!("case {} does not match the first case's layout", c.init)));
            }
        }
        let m = first.forecast.len();
        let n = cases.len() as f64;
        let mut mx = vec![0.0; m];
        let mut my = vec![0.0; m];
        for c in cases {
            for p in 0..m {
                mx[p] += c.forecast[p];
                my[p] += c.truth[p];
            }
        }
        mx.iter_mut().chain(my.iter_mut()).for_each(|v| *v /= n);
        let mut sxx = vec![0.0; m];
        let mut sxy = vec![0.0; m];
        for c in cases {
            for p in 0..m {
                let dx = c.forecast[p] - mx[p];
                sxx[p] += dx * dx;
                sxy[p] += dx * (c.truth[p] - my[p]);
            }
        }
        let mut slope = vec![1.0; m];
        let mut intercept = vec![0.0; m];
        let mut degenerate = 0;
        for p in 0..m {
            if sxx[p] <= DEGENERATE_VARIANCE * n * mx[p].abs().max(1.0).powi(2) {
                intercept[p] = my[p] - mx[p];
                degenerate += 1;
            } else {
                slope[p] = sxy[p] / sxx[p];
                intercept[p] = my[p] - slope[p] * mx[p];
            }
        }
        Ok(Self {
            variable: first.variable.clone(),
            leads,
            lat,
            lon,
            slope,
            intercept,
            degenerate,
        })
    }

    pub fn apply(&self, case: &ForecastCase) -> Result<Vec<f64>> {
        if (case.lat, case.lon) != (self.lat, self.lon) || case.leads() > self.leads {
            return Err(Error::dim(format!(
                "case {}×{} with {} leads, baseline fitted on {}×{} with {}",
                case.lat,
                case.lon,
                case.leads(),
                self.lat,
                self.lon,
                self.leads
            )));
        }
        Ok(case
            .forecast
            .iter()
            .enumerate()
            .map(|(p, f)| self.slope[p] * f + self.intercept[p])
            .collect())
    }
}
