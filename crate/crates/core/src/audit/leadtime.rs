use serde::{Deserialize, Serialize};

use crate::climnorm::NormKind;
use crate::error::{Error, Result};
use crate::eval::SkillOptions;
use crate::experiment::Runner;
use crate::model::Architecture;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeadtimeArch {
    Resa,
    AcausalBaseline,
}

impl LeadtimeArch {
    pub fn name(self) -> &'static str {
        match self {
            LeadtimeArch::Resa => "resa",
            LeadtimeArch::AcausalBaseline => "acausal-baseline",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadtimeRow {
    pub architecture: String,
    pub train_horizon: usize,
    pub lead: usize,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonPair {
    pub lead: usize,
    pub horizon_a: usize,
    pub horizon_b: usize,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadtimeMatrix {
    pub architecture: String,
    pub seed: u64,
    pub rows: Vec<LeadtimeRow>,
    pub pairs: Vec<HorizonPair>,
}

pub const LEADTIME_HEADER: &str = "architecture,train_horizon,lead,rmse";

impl LeadtimeMatrix {
    pub fn rmse(&self, horizon: usize, lead: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.train_horizon == horizon && r.lead == lead)
            .map(|r| r.rmse)
    }

    pub fn max_pair_diff(&self) -> f64 {
        self.pairs.iter().map(|p| p.abs_diff).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{LEADTIME_HEADER}\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.architecture, r.train_horizon, r.lead, r.rmse));
        }
        s
    }
}

fn per_lead_rmse(runner: &Runner, arch: LeadtimeArch, horizon: usize, seed: u64) -> Result<Vec<f64>> {
    let handle = match arch {
        LeadtimeArch::Resa => runner.resa(Architecture::ResaConvLstm, NormKind::Dynamic, horizon, seed)?.handle.clone(),
        LeadtimeArch::AcausalBaseline => runner.acausal(NormKind::Dynamic, horizon, seed)?.handle.clone(),
    };
    let recs = runner.bench.evaluate(&[&handle], horizon, SkillOptions::default())?;
    Ok(recs.iter().map(|r| r.rmse).collect())
}

/// Trains one model per horizon on truncated sequences with a shared seed
/// and reports per-lead test RMSE plus every cross-horizon difference on
/// shared leads.
pub fn leadtime_experiment(runner: &Runner, arch: LeadtimeArch, horizons: &[usize], seed: u64) -> Result<LeadtimeMatrix> {
    if horizons.is_empty() {
        return Err(Error::config("lead-time experiment needs at least one horizon"));
    }
    let leads = runner.bench.leads();
    if let Some(h) = horizons.iter().find(|h| **h == 0 || **h > leads) {
        return Err(Error::config(format!("horizon {h} unsupported: data has {leads} leads")));
    }
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for &h in horizons {
        let r = per_lead_rmse(runner, arch, h, seed)?;
        rows.extend(r.iter().enumerate().map(|(t, &rmse)| LeadtimeRow {
            architecture: arch.name().to_string(),
            train_horizon: h,
            lead: t + 1,
            rmse,
        }));
        curves.push((h, r));
    }
    let mut pairs = Vec::new();
    for (a, (ha, ra)) in curves.iter().enumerate() {
        for (hb, rb) in &curves[a + 1..] {
            for d in 0..(*ha).min(*hb) {
                pairs.push(HorizonPair {
                    lead: d + 1,
                    horizon_a: *ha,
                    horizon_b: *hb,
                    abs_diff: (ra[d] - rb[d]).abs(),
                });
            }
        }
    }
    Ok(LeadtimeMatrix {
        architecture: arch.name().to_string(),
        seed,
        rows,
        pairs,
    })
}

/// Max over leads of |RMSE difference| between two ReSA runs at `horizon`
/// that differ only in seed.
pub fn seed_noise_band(runner: &Runner, horizon: usize, seeds: (u64, u64)) -> Result<f64> {
    if seeds.0 == seeds.1 {
        return Err(Error::config("noise band needs two distinct seeds"));
    }
    let a = per_lead_rmse(runner, LeadtimeArch::Resa, horizon, seeds.0)?;
    let b = per_lead_rmse(runner, LeadtimeArch::Resa, horizon, seeds.1)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
