use serde::{Deserialize, Serialize};

use super::Runner;
use crate::climnorm::NormKind;
use crate::error::{Error, Result};
use crate::eval::{mean_rmse, SkillOptions, SkillRecord};
use crate::model::Architecture;

/// Static versus dynamic normalization with everything else fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormAblation {
    pub seed: u64,
    pub records: Vec<SkillRecord>,
    /// Mean test RMSE over leads 4–7.
    pub static_rmse: f64,
    pub dynamic_rmse: f64,
    /// `1 − dynamic / static`.
    pub reduction: f64,
}

pub const STATIC_ID: &str = "static";
pub const DYNAMIC_ID: &str = "dynamic";

pub fn ablate_norm(runner: &Runner, seed: u64) -> Result<NormAblation> {
    let bench = &runner.bench;
    let leads = bench.leads();
    if leads < 4 {
        return Err(Error::config("normalization ablation scores leads 4–7 and needs at least 4 leads"));
    }
    let mut records = Vec::new();
    for (kind, id) in [(NormKind::Static, STATIC_ID), (NormKind::Dynamic, DYNAMIC_ID)] {
        let mut handle = runner.resa(Architecture::ResaConvLstm, kind, leads, seed)?.handle.clone();
        handle.model_id = id.to_string();
        records.extend(bench.evaluate(&[&handle], leads, SkillOptions::default())?);
    }
    let hi = leads.min(7);
    let static_rmse = mean_rmse(&records, STATIC_ID, 4..=hi);
    let dynamic_rmse = mean_rmse(&records, DYNAMIC_ID, 4..=hi);
    Ok(NormAblation {
        seed,
        records,
        static_rmse,
        dynamic_rmse,
        reduction: 1.0 - dynamic_rmse / static_rmse,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchRow {
    pub architecture: String,
    /// Mean test RMSE over all leads, per seed.
    pub per_seed: Vec<f64>,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchAblation {
    pub seeds: Vec<u64>,
    pub records: Vec<SkillRecord>,
    pub rows: Vec<ArchRow>,
}

impl ArchAblation {
    pub fn mean_of(&self, arch: Architecture) -> Option<f64> {
        self.rows.iter().find(|r| r.architecture == arch.name()).map(|r| r.mean)
    }
}

/// Trains the four architecture variants for every seed in dynamic space.
pub fn ablate_arch(runner: &Runner) -> Result<ArchAblation> {
    let (bench, exp) = (&runner.bench, &runner.exp);
    if exp.seeds.is_empty() {
        return Err(Error::config("architecture ablation needs at least one seed"));
    }
    let leads = bench.leads();
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for arch in Architecture::ALL {
        let mut per_seed = Vec::new();
        for &seed in &exp.seeds {
            let run = runner.resa(arch, NormKind::Dynamic, leads, seed)?;
            let recs = bench.evaluate(&[&run.handle], leads, SkillOptions::default())?;
            per_seed.push(mean_rmse(&recs, arch.name(), 1..=leads));
            records.extend(recs);
        }
        rows.push(ArchRow {
            architecture: arch.name().to_string(),
            mean: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
            per_seed,
        });
    }
    Ok(ArchAblation {
        seeds: exp.seeds.clone(),
        records,
        rows,
    })
}
