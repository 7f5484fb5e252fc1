use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use super::{train_acausal, train_resa, Benchmark, ExperimentConfig, TrainedBaseline, TrainedResa};
use crate::climnorm::NormKind;
use crate::error::Result;
use crate::model::Architecture;

type ResaKey = (Architecture, NormKind, usize, u64);

/// Benchmark plus memoized training runs, keyed by architecture,
/// normalization, horizon and seed, so experiments that need the same run
/// train it once.
#[derive(Debug)]
pub struct Runner {
    pub bench: Benchmark,
    pub exp: ExperimentConfig,
    resa: Mutex<HashMap<ResaKey, Arc<TrainedResa>>>,
    acausal: Mutex<HashMap<(NormKind, usize, u64), Arc<TrainedBaseline>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Runner {
    pub fn new(exp: ExperimentConfig) -> Result<Self> {
        Ok(Self::with_benchmark(Benchmark::build(exp.benchmark.clone())?, exp))
    }

    pub fn with_benchmark(bench: Benchmark, exp: ExperimentConfig) -> Self {
        Self {
            bench,
            exp,
            resa: Mutex::new(HashMap::new()),
            acausal: Mutex::new(HashMap::new()),
        }
    }

    pub fn resa(&self, arch: Architecture, norm: NormKind, horizon: usize, seed: u64) -> Result<Arc<TrainedResa>> {
        let mut cache = lock(&self.resa);
        if let Some(r) = cache.get(&(arch, norm, horizon, seed)) {
            return Ok(r.clone());
        }
        let model = arch.configure(self.exp.model.clone());
        let run = Arc::new(train_resa(&self.bench, &model, &self.exp.train, norm, horizon, seed)?);
        cache.insert((arch, norm, horizon, seed), run.clone());
        Ok(run)
    }

    pub fn acausal(&self, norm: NormKind, horizon: usize, seed: u64) -> Result<Arc<TrainedBaseline>> {
        let mut cache = lock(&self.acausal);
        if let Some(r) = cache.get(&(norm, horizon, seed)) {
            return Ok(r.clone());
        }
        let run = Arc::new(train_acausal(&self.bench, &self.exp.acausal, &self.exp.train, norm, horizon, seed)?);
        cache.insert((norm, horizon, seed), run.clone());
        Ok(run)
    }

    /// Number of distinct runs trained so far.
    pub fn trained(&self) -> usize {
        lock(&self.resa).len() + lock(&self.acausal).len()
    }
}
