use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;

use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};
use crate::grid::{doy_slot, GridSeries};

/// Day-of-year slots: 365 regular days plus Feb 29 in the last slot.
pub const SLOTS: usize = 366;
const LEAP_SLOT: usize = 365;
const YEAR: usize = 365;

pub const DEFAULT_WINDOW: usize = 31;
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-3;

pub const MAGIC: &[u8; 4] = b"CLM1";

/// Per-gridpoint day-of-year mean and standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct Climatology {
    variable: String,
    lat: usize,
    lon: usize,
    /// `[366, lat, lon]`
    mu: Vec<f64>,
    /// `[366, lat, lon]`, floored at `sigma_floor`.
    sigma: Vec<f64>,
    fit_years: Vec<i32>,
    window: usize,
    sigma_floor: f64,
}

/// Circular distance between two regular slots.
fn circ(a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(YEAR - d)
}

/// Whether samples in slot `src` fall in the window centred on slot `dst`.
/// Feb 29 sits halfway between Feb 28 and Mar 1; its own window runs from
/// `half` days before Feb 28 to `half` days after Mar 1.
fn in_window(src: usize, dst: usize, half: usize) -> bool {
    const FEB28: usize = 58;
    const MAR1: usize = 59;
    match (src == LEAP_SLOT, dst == LEAP_SLOT) {
        (true, true) => true,
        (false, false) => circ(src, dst) <= half,
        (false, true) => circ(src, FEB28) <= half || circ(src, MAR1) <= half,
        (true, false) => circ(dst, FEB28) < half || circ(dst, MAR1) < half,
    }
}

/// Fits mean and sample std for every gridpoint and day-of-year slot over
/// all samples within a centred, year-circular window of `window` days.
pub fn fit_climatology(train: &GridSeries, window: usize, sigma_floor: f64) -> Result<Climatology> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::config(format!("climatology window must be odd and positive, got {window}")));
    }
    if !(sigma_floor > 0.0) {
        return Err(Error::config("sigma floor must be positive"));
    }
    let years = train.years();
    if years.len() < 2 {
        return Err(Error::contract(format!("climatology needs at least 2 distinct years, got {}", years.len())));
    }
    let n = train.grid_len();
    let half = window / 2;
    // Shifted per-slot sums keep the one-pass variance well conditioned.
    let shift = train.field(0).to_vec();
    let mut cnt = vec![0usize; SLOTS];
    let mut s1 = vec![0.0; SLOTS * n];
    let mut s2 = vec![0.0; SLOTS * n];
    for (t, date) in train.times().iter().enumerate() {
        let s = doy_slot(*date);
        cnt[s] += 1;
        let f = train.field(t);
        let (a, b) = (&mut s1[s * n..(s + 1) * n], &mut s2[s * n..(s + 1) * n]);
        for p in 0..n {
            let d = f[p] - shift[p];
            a[p] += d;
            b[p] += d * d;
        }
    }
    let mut mu = vec![0.0; SLOTS * n];
    let mut sigma = vec![sigma_floor; SLOTS * n];
    let mut acc1 = vec![0.0; n];
    let mut acc2 = vec![0.0; n];
    for dst in 0..SLOTS {
        acc1.iter_mut().for_each(|v| *v = 0.0);
        acc2.iter_mut().for_each(|v| *v = 0.0);
        let mut m = 0usize;
        for src in 0..SLOTS {
            if cnt[src] == 0 || !in_window(src, dst, half) {
                continue;
            }
            m += cnt[src];
            for p in 0..n {
                acc1[p] += s1[src * n + p];
                acc2[p] += s2[src * n + p];
            }
        }
        if m == 0 {
            return Err(Error::contract(format!("no training samples for day-of-year slot {dst}")));
        }
        for p in 0..n {
            let mean = acc1[p] / m as f64;
            mu[dst * n + p] = shift[p] + mean;
            if m > 1 {
                let var = ((acc2[p] - m as f64 * mean * mean) / (m - 1) as f64).max(0.0);
                sigma[dst * n + p] = var.sqrt().max(sigma_floor);
            }
        }
    }
    Ok(Climatology {
        variable: train.variable().to_string(),
        lat: train.lat(),
        lon: train.lon(),
        mu,
        sigma,
        fit_years: years,
        window,
        sigma_floor,
    })
}

impl Climatology {
    pub fn variable(&self) -> &str {
        &self.variable
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

    pub fn fit_years(&self) -> &[i32] {
        &self.fit_years
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn sigma_floor(&self) -> f64 {
        self.sigma_floor
    }

    pub fn mu_slot(&self, slot: usize) -> &[f64] {
        let n = self.grid_len();
        &self.mu[slot * n..(slot + 1) * n]
    }

    pub fn sigma_slot(&self, slot: usize) -> &[f64] {
        let n = self.grid_len();
        &self.sigma[slot * n..(slot + 1) * n]
    }

    pub fn mu_at(&self, date: NaiveDate) -> &[f64] {
        self.mu_slot(doy_slot(date))
    }

    pub fn sigma_at(&self, date: NaiveDate) -> &[f64] {
        self.sigma_slot(doy_slot(date))
    }

    /// Short stable identifier: variable, window, fit years and a CRC of
    /// the fitted arrays.
    pub fn id(&self) -> String {
        let years: BTreeSet<i32> = self.fit_years.iter().copied().collect();
        let (lo, hi) = (years.first().copied().unwrap_or(0), years.last().copied().unwrap_or(0));
        let bytes = encode(self);
        format!("{}/w{}/{}-{}/{:08x}", self.variable, self.window, lo, hi, crc32fast::hash(&bytes))
    }

    pub fn check_grid(&self, lat: usize, lon: usize) -> Result<()> {
        if (lat, lon) != (self.lat, self.lon) {
            return Err(Error::contract(format!(
                "grid {lat}×{lon} does not match climatology grid {}×{}",
                self.lat, self.lon
            )));
        }
        Ok(())
    }

    /// Did any fit year fall in `years`? Used to catch test-period leakage.
    pub fn overlaps_years(&self, years: &[i32]) -> bool {
        self.fit_years.iter().any(|y| years.contains(y))
    }

    /// Mean fields for each of `dates`, row-major `[dates, lat, lon]`.
    pub fn mean_fields(&self, dates: &[NaiveDate]) -> Vec<f64> {
        let mut out = Vec::with_capacity(dates.len() * self.grid_len());
        for d in dates {
            out.extend_from_slice(self.mu_at(*d));
        }
        out
    }
}

/// Climatology container. Layout (little-endian): magic `b"CLM1"`,
/// variable string, `u32` I, J, window, `f64` sigma floor, `u32` year count
/// then `i32` years, `366·I·J` f64 mu, `366·I·J` f64 sigma, `u32` CRC-32 of
/// everything after the magic.
pub fn encode(c: &Climatology) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.str(&c.variable);
    w.u32(c.lat as u32);
    w.u32(c.lon as u32);
    w.u32(c.window as u32);
    w.f64s(&[c.sigma_floor]);
    w.u32(c.fit_years.len() as u32);
    for y in &c.fit_years {
        w.i32(*y);
    }
    w.f64s(&c.mu);
    w.f64s(&c.sigma);
    w.finish_with_crc(MAGIC.len())
}

pub fn decode(bytes: &[u8]) -> Result<Climatology> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let variable = r.str("variable id")?;
    let lat = r.u32("lat count")? as usize;
    let lon = r.u32("lon count")? as usize;
    let window = r.u32("window")? as usize;
    let sigma_floor = r.f64s(1, "sigma floor")?[0];
    let ny = r.u32("year count")? as usize;
    let mut fit_years = Vec::with_capacity(ny.min(1 << 16));
    for _ in 0..ny {
        fit_years.push(r.i32("fit year")?);
    }
    let n = SLOTS
        .checked_mul(lat)
        .and_then(|v| v.checked_mul(lon))
        .ok_or_else(|| Error::format(r.offset(), "payload size overflows"))?;
    let mu = r.f64s(n, "mu")?;
    let at = r.offset();
    let sigma = r.f64s(n, "sigma")?;
    r.finish_with_crc(MAGIC.len())?;
    if lat == 0 || lon == 0 {
        return Err(Error::format(0, "empty climatology grid"));
    }
    if let Some(p) = sigma.iter().position(|s| !(*s >= sigma_floor)) {
        return Err(Error::format(at + 8 * p as u64, "sigma below floor"));
    }
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(Error::format(at, "non-finite mu"));
    }
    Ok(Climatology {
        variable,
        lat,
        lon,
        mu,
        sigma,
        fit_years,
        window,
        sigma_floor,
    })
}

pub fn write_climatology(c: &Climatology, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(c))?;
    Ok(())
}

pub fn read_climatology(path: impl AsRef<Path>) -> Result<Climatology> {
    decode(&std::fs::read(path)?)
}
