//! Seeded synthetic truth/forecast pairs with known, injected errors.
//!
//! Truth is a zonally symmetric meridional base state plus a hemispheric
//! seasonal cycle plus red-noise weather whose amplitude grows toward the
//! poles. A forecast at lead `t` is the truth valid that day with four
//! error terms, each scaled by the lead growth `g(t)` except the noise:
//!
//! * a regional additive bias inside a lat/lon box,
//! * an anomaly gain error (the forecast over-amplifies local anomalies),
//! * a remote error proportional to the domain-mean normalized anomaly,
//! * white noise.

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::series::{days_since_epoch, ForecastCase, GridSeries};
use crate::error::{Error, Result};

/// Lead at which the growth factor reaches one.
pub const GROWTH_REFERENCE_LEAD: f64 = 7.0;

/// Monotone error growth with lead: `g(t) = sqrt(t / 7)`.
pub fn lead_growth(lead_days: usize) -> f64 {
    (lead_days as f64 / GROWTH_REFERENCE_LEAD).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableProfile {
    /// `base(φ) = base_offset + base_equator_pole · sin²φ + base_dipole · sin(2φ)`.
    pub base_offset: f64,
    pub base_equator_pole: f64,
    pub base_dipole: f64,
    /// Equatorial seasonal amplitude; opposite phase per hemisphere.
    pub seasonal_amplitude: f64,
    /// Day of year of the northern-hemisphere seasonal maximum.
    pub seasonal_peak_doy: f64,
    /// Equatorial weather standard deviation.
    pub weather_std: f64,
    /// Pole/equator ratio of seasonal amplitude and weather std.
    pub polar_amplification: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherConfig {
    /// Lag-one autocorrelation of the large-scale mode coefficients.
    pub large_scale_persistence: f64,
    /// Lag-one autocorrelation of the gridpoint-scale noise.
    pub small_scale_persistence: f64,
    /// Variance fraction carried by the large-scale modes.
    pub large_scale_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    /// Additive bias at lead 7 inside the region, physical units.
    pub regional_amplitude: f64,
    /// `[south, north]` degrees latitude.
    pub region_lat: [f64; 2],
    /// `[west, east]` degrees longitude in `[0, 360)`.
    pub region_lon: [f64; 2],
    /// Relative over-amplification of local anomalies at lead 7.
    pub anomaly_gain: f64,
    /// Error per unit domain-mean normalized anomaly at lead 7, in units of
    /// the local weather std.
    pub remote_gain: f64,
    /// White noise std in units of the local weather std.
    pub noise_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub variable: String,
    pub lat: usize,
    pub lon: usize,
    pub start_year: i32,
    pub end_year: i32,
    pub leads: usize,
    /// Spacing of initialization dates produced by [`synth_generate`].
    pub init_stride_days: usize,
    pub profile: VariableProfile,
    pub weather: WeatherConfig,
    pub bias: BiasConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::t2m()
    }
}

impl SynthConfig {
    /// 2-m temperature analogue: strong equator-to-pole contrast, cold
    /// regional bias over East Asia.
    pub fn t2m() -> Self {
        Self {
            variable: "T2m".into(),
            lat: 24,
            lon: 48,
            start_year: 1981,
            end_year: 2021,
            leads: 7,
            init_stride_days: 1,
            profile: VariableProfile {
                base_offset: 301.0,
                base_equator_pole: -45.0,
                base_dipole: 0.0,
                seasonal_amplitude: 3.0,
                seasonal_peak_doy: 200.0,
                weather_std: 1.2,
                polar_amplification: 3.0,
            },
            weather: WeatherConfig {
                large_scale_persistence: 0.85,
                small_scale_persistence: 0.6,
                large_scale_fraction: 0.6,
            },
            bias: BiasConfig {
                regional_amplitude: -2.0,
                region_lat: [20.0, 50.0],
                region_lon: [90.0, 140.0],
                anomaly_gain: 0.5,
                remote_gain: 1.0,
                noise_std: 0.15,
            },
        }
    }

    /// 10-m zonal wind analogue for transfer experiments.
    pub fn u10() -> Self {
        Self {
            variable: "U10".into(),
            profile: VariableProfile {
                base_offset: 1.0,
                base_equator_pole: -3.0,
                base_dipole: 2.0,
                seasonal_amplitude: 1.0,
                seasonal_peak_doy: 30.0,
                weather_std: 2.0,
                polar_amplification: 1.8,
            },
            bias: BiasConfig {
                regional_amplitude: 1.5,
                region_lat: [-20.0, 10.0],
                region_lon: [0.0, 50.0],
                anomaly_gain: 0.4,
                remote_gain: 1.2,
                noise_std: 0.15,
            },
            ..Self::t2m()
        }
    }

    /// Same configuration with every forecast error switched off.
    pub fn without_errors(mut self) -> Self {
        self.bias.regional_amplitude = 0.0;
        self.bias.anomaly_gain = 0.0;
        self.bias.remote_gain = 0.0;
        self.bias.noise_std = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lat == 0 || self.lon == 0 || self.leads == 0 || self.init_stride_days == 0 {
            return Err(Error::config("grid size, leads and init stride must be positive"));
        }
        if self.end_year < self.start_year {
            return Err(Error::config("end_year precedes start_year"));
        }
        let w = &self.weather;
        for (name, v) in [
            ("large_scale_persistence", w.large_scale_persistence),
            ("small_scale_persistence", w.small_scale_persistence),
            ("large_scale_fraction", w.large_scale_fraction),
        ] {
            if !(0.0..1.0).contains(&v) && !(name == "large_scale_fraction" && v == 1.0) {
                return Err(Error::config(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.profile.weather_std < 0.0 || self.bias.noise_std < 0.0 {
            return Err(Error::config("standard deviations must be nonnegative"));
        }
        Ok(())
    }
}

/// Latitude of row `i` in degrees, north first.
pub fn lat_center(i: usize, lat: usize) -> f64 {
    90.0 - (i as f64 + 0.5) * 180.0 / lat as f64
}

/// Longitude of column `j` in degrees east.
pub fn lon_center(j: usize, lon: usize) -> f64 {
    (j as f64 + 0.5) * 360.0 / lon as f64
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_seed(seed: u64, variable: &str, salt: u64) -> u64 {
    let mut h = mix(seed);
    for b in variable.bytes() {
        h = mix(h ^ b as u64);
    }
    mix(h ^ salt)
}

/// Generated truth plus the machinery to draw forecast cases.
#[derive(Clone, Debug)]
pub struct SynthDataset {
    config: SynthConfig,
    seed: u64,
    truth: GridSeries,
    /// Per-row weather std.
    row_std: Vec<f64>,
    /// Regional bias mask, 1 inside the box.
    region: Vec<f64>,
}

impl SynthDataset {
    pub fn generate(config: SynthConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (ni, nj) = (config.lat, config.lon);
        let n = ni * nj;
        let start = NaiveDate::from_ymd_opt(config.start_year, 1, 1).ok_or_else(|| Error::config("bad start year"))?;
        let end = NaiveDate::from_ymd_opt(config.end_year, 12, 31).ok_or_else(|| Error::config("bad end year"))?;
        let times: Vec<NaiveDate> = start.iter_days().take_while(|d| *d <= end).collect();

        let pa = config.profile.polar_amplification;
        let row_std: Vec<f64> = (0..ni)
            .map(|i| {
                let s = lat_center(i, ni).to_radians().sin().abs();
                config.profile.weather_std * (1.0 + (pa - 1.0) * s)
            })
            .collect();

        let modes = spatial_modes(ni, nj);
        let norm: Vec<f64> = (0..n)
            .map(|p| modes.iter().map(|m| m[p] * m[p]).sum::<f64>().sqrt())
            .collect();

        let w = &config.weather;
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, &config.variable, 0));
        let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let mut coeff: Vec<f64> = (0..modes.len()).map(|_| normal(&mut rng)).collect();
        let mut small: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let (rl, rs) = (w.large_scale_persistence, w.small_scale_persistence);
        let (fl, fs) = (w.large_scale_fraction.sqrt(), (1.0 - w.large_scale_fraction).sqrt());

        let mut values = Vec::with_capacity(times.len() * n);
        let mut clim = vec![0.0; n];
        for (t, date) in times.iter().enumerate() {
            if t > 0 {
                for c in coeff.iter_mut() {
                    *c = rl * *c + (1.0 - rl * rl).sqrt() * normal(&mut rng);
                }
                for s in small.iter_mut() {
                    *s = rs * *s + (1.0 - rs * rs).sqrt() * normal(&mut rng);
                }
            }
            analytic_mean_into(&config, *date, &mut clim);
            for p in 0..n {
                let large: f64 = modes.iter().zip(&coeff).map(|(m, c)| m[p] * c).sum::<f64>() / norm[p];
                let anomaly = fl * large + fs * small[p];
                values.push(clim[p] + row_std[p / nj] * anomaly);
            }
        }

        let b = &config.bias;
        let region = (0..n)
            .map(|p| {
                let (la, lo) = (lat_center(p / nj, ni), lon_center(p % nj, nj));
                let in_lat = la >= b.region_lat[0] && la <= b.region_lat[1];
                let in_lon = if b.region_lon[0] <= b.region_lon[1] {
                    lo >= b.region_lon[0] && lo <= b.region_lon[1]
                } else {
                    lo >= b.region_lon[0] || lo <= b.region_lon[1]
                };
                if in_lat && in_lon {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();

        let truth = GridSeries::new(config.variable.clone(), times, ni, nj, values)?;
        Ok(Self {
            config,
            seed,
            truth,
            row_std,
            region,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn truth(&self) -> &GridSeries {
        &self.truth
    }

    /// 1 inside the regional-bias box, 0 elsewhere.
    pub fn region_mask(&self) -> &[f64] {
        &self.region
    }

    pub fn row_weather_std(&self) -> &[f64] {
        &self.row_std
    }

    /// Noise-free climatological mean for `date`.
    pub fn analytic_mean(&self, date: NaiveDate) -> Vec<f64> {
        let mut out = vec![0.0; self.truth.grid_len()];
        analytic_mean_into(&self.config, date, &mut out);
        out
    }

    /// Whether every lead of a case initialized on `init` has truth.
    pub fn has_window(&self, init: NaiveDate, leads: usize) -> bool {
        self.truth.index_of(init).is_some()
            && self.truth.index_of(init + chrono::Duration::days(leads as i64)).is_some()
    }

    /// Draws the forecast case initialized on `init` with the configured
    /// number of leads. Deterministic in (seed, variable, init).
    pub fn case(&self, init: NaiveDate) -> Result<ForecastCase> {
        let leads = self.config.leads;
        let t0 = self
            .truth
            .index_of(init)
            .filter(|_| self.has_window(init, leads))
            .ok_or_else(|| Error::contract(format!("no truth window for init {init} with {leads} leads")))?;
        let (ni, nj) = (self.config.lat, self.config.lon);
        let n = ni * nj;
        let b = &self.config.bias;
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(self.seed, &self.config.variable, 1 + days_since_epoch(init) as u64));
        let mut forecast = Vec::with_capacity(leads * n);
        let mut truth = Vec::with_capacity(leads * n);
        for lead in 1..=leads {
            let date = init + chrono::Duration::days(lead as i64);
            let field = self.truth.field(t0 + lead);
            let clim = self.analytic_mean(date);
            let g = lead_growth(lead);
            let domain_mean = (0..n)
                .map(|p| (field[p] - clim[p]) / self.row_std[p / nj].max(f64::MIN_POSITIVE))
                .sum::<f64>()
                / n as f64;
            for p in 0..n {
                let sd = self.row_std[p / nj];
                let anomaly = field[p] - clim[p];
                let eps: f64 = StandardNormal.sample(&mut rng);
                let err = b.regional_amplitude * self.region[p] * g
                    + b.anomaly_gain * g * anomaly
                    + b.remote_gain * g * sd * domain_mean
                    + b.noise_std * sd * eps;
                forecast.push(field[p] + err);
                truth.push(field[p]);
            }
        }
        ForecastCase::new(self.config.variable.clone(), init, ni, nj, forecast, truth)
    }

    /// Every `stride`-th initialization date with a full truth window.
    pub fn schedule(&self, stride: usize) -> Vec<NaiveDate> {
        let leads = self.config.leads;
        self.truth
            .times()
            .iter()
            .step_by(stride.max(1))
            .copied()
            .filter(|d| self.has_window(*d, leads))
            .collect()
    }

    /// First-of-month initializations in `years` with a full truth window.
    pub fn month_starts(&self, years: &[i32]) -> Vec<NaiveDate> {
        let leads = self.config.leads;
        years
            .iter()
            .flat_map(|&y| (1..=12).filter_map(move |m| NaiveDate::from_ymd_opt(y, m, 1)))
            .filter(|d| self.has_window(*d, leads))
            .collect()
    }

    pub fn cases(&self, inits: &[NaiveDate]) -> Result<Vec<ForecastCase>> {
        inits.iter().map(|d| self.case(*d)).collect()
    }
}

/// Truth series plus forecast cases on the configured init schedule.
pub fn synth_generate(config: SynthConfig, seed: u64) -> Result<(GridSeries, Vec<ForecastCase>)> {
    let stride = config.init_stride_days;
    let ds = SynthDataset::generate(config, seed)?;
    let cases = ds.cases(&ds.schedule(stride))?;
    Ok((ds.truth, cases))
}

fn analytic_mean_into(config: &SynthConfig, date: NaiveDate, out: &mut [f64]) {
    let p = &config.profile;
    let phase = 2.0 * std::f64::consts::PI * (date.ordinal0() as f64 - p.seasonal_peak_doy) / 365.25;
    let (ni, nj) = (config.lat, config.lon);
    for i in 0..ni {
        let phi = lat_center(i, ni).to_radians();
        let s = phi.sin();
        let base = p.base_offset + p.base_equator_pole * s * s + p.base_dipole * (2.0 * phi).sin();
        let amp = p.seasonal_amplitude * (1.0 + (p.polar_amplification - 1.0) * s.abs());
        let v = base + amp * s.signum() * phase.cos();
        out[i * nj..(i + 1) * nj].iter_mut().for_each(|o| *o = v);
    }
}

/// Smooth planetary-scale patterns; the first is the uniform mode.
fn spatial_modes(ni: usize, nj: usize) -> Vec<Vec<f64>> {
    let pattern = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        (0..ni * nj)
            .map(|p| {
                let phi = lat_center(p / nj, ni).to_radians();
                let lam = lon_center(p % nj, nj).to_radians();
                f(phi, lam)
            })
            .collect()
    };
    vec![
        pattern(&|_, _| 1.0),
        pattern(&|phi, _| phi.sin()),
        pattern(&|phi, _| (2.0 * phi).cos()),
        pattern(&|phi, lam| phi.cos() * lam.cos()),
        pattern(&|phi, lam| phi.cos() * lam.sin()),
        pattern(&|phi, lam| (2.0 * phi).sin() * lam.cos()),
        pattern(&|phi, lam| (2.0 * phi).sin() * lam.sin()),
        pattern(&|phi, lam| phi.cos() * (2.0 * lam).cos()),
        pattern(&|phi, lam| phi.cos() * (2.0 * lam).sin()),
    ]
}
