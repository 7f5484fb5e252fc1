use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::synth::lat_center;
use crate::grid::GridSeries;

pub const HISTOGRAM_BINS: usize = 101;
pub const BAND_WIDTH_DEG: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    /// Population moments; skewness and kurtosis are 0 for a constant input.
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Moments {
        let (mut n, mut s) = (0usize, 0.0);
        for v in values.clone() {
            n += 1;
            s += v;
        }
        let mean = if n > 0 { s / n as f64 } else { 0.0 };
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let nf = n.max(1) as f64;
        let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Moments {
            count: n,
            mean,
            std: m2.sqrt(),
            skewness,
            excess_kurtosis,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandMoments {
    pub lat_south: f64,
    pub lat_north: f64,
    pub moments: Moments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub variable: String,
    pub global: Moments,
    pub bands: Vec<BandMoments>,
    pub histogram: Histogram,
}

impl DistributionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Global and per-latitude-band moments plus a 101-bin histogram spanning
/// the data range. A constant input puts all mass in the centre bin.
pub fn distribution_report(x: &GridSeries) -> Result<DistributionReport> {
    if x.is_empty() {
        return Err(Error::contract("distribution report of an empty series"));
    }
    let vals = x.values();
    let global = Moments::of(vals.iter().copied());
    let (ni, nj) = (x.lat(), x.lon());
    let nb = (180.0 / BAND_WIDTH_DEG).ceil() as usize;
    let band_of = |i: usize| (((90.0 - lat_center(i, ni)) / BAND_WIDTH_DEG) as usize).min(nb - 1);
    let mut bands = Vec::new();
    for b in 0..nb {
        let rows: Vec<usize> = (0..ni).filter(|i| band_of(*i) == b).collect();
        if rows.is_empty() {
            continue;
        }
        let n = ni * nj;
        let it = (0..x.len()).flat_map(|t| rows.iter().flat_map(move |i| (0..nj).map(move |j| t * n + i * nj + j)));
        let moments = Moments::of(it.map(|k| vals[k]));
        let north = 90.0 - b as f64 * BAND_WIDTH_DEG;
        bands.push(BandMoments {
            lat_south: (north - BAND_WIDTH_DEG).max(-90.0),
            lat_north: north,
            moments,
        });
    }
    let (min, max) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let width = (max - min) / HISTOGRAM_BINS as f64;
    for v in vals {
        let k = if width > 0.0 {
            (((v - min) / width) as usize).min(HISTOGRAM_BINS - 1)
        } else {
            HISTOGRAM_BINS / 2
        };
        counts[k] += 1;
    }
    Ok(DistributionReport {
        variable: x.variable().to_string(),
        global,
        bands,
        histogram: Histogram { min, max, counts },
    })
}
