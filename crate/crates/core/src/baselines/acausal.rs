use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{BatchNormStats, BnMode, Padding, ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::resa::uniform;
use crate::model::SequenceModel;

pub const GROUP_ENCODER: &str = "encoder";
pub const GROUP_HEAD: &str = "head";

/// Lead-stacked convolutional corrector: all `L` leads enter as channels
/// of one 2-D convolution, so every output lead sees every input lead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcausalConfig {
    pub leads: usize,
    pub hidden: usize,
    pub kernel: usize,
    pub lat: usize,
    pub lon: usize,
    pub lon_wrap: bool,
}

impl Default for AcausalConfig {
    fn default() -> Self {
        Self {
            leads: 7,
            hidden: 16,
            kernel: 3,
            lat: 24,
            lon: 48,
            lon_wrap: true,
        }
    }
}

impl AcausalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.leads == 0 || self.hidden == 0 || self.lat == 0 || self.lon == 0 {
            return Err(Error::config("acausal baseline sizes must be positive"));
        }
        if self.kernel.is_multiple_of(2) {
            return Err(Error::config(format!("kernel {} must be odd", self.kernel)));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let (l, c, k) = (self.leads, self.hidden, self.kernel);
        c * l * k * k + c + c * c * k * k + c + l * c + l
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcausalModel {
    config: AcausalConfig,
    store: ParamStore,
    ids: [ParamId; 6],
}

const NAMES: [&str; 6] = ["conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "head.weight", "head.bias"];

impl AcausalModel {
    /// Fresh model with a zero head, so it starts as the identity.
    pub fn new(config: AcausalConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, c, k) = (config.leads, config.hidden, config.kernel);
        let tensors = vec![
            uniform(&mut rng, &[c, l, k, k], l * k * k),
            Tensor::zeros(&[c]),
            uniform(&mut rng, &[c, c, k, k], c * k * k),
            Tensor::zeros(&[c]),
            Tensor::zeros(&[l, c, 1, 1]),
            Tensor::zeros(&[l]),
        ];
        Self::from_parts(config, NAMES.iter().map(|n| n.to_string()).zip(tensors).collect())
    }

    pub fn from_parts(config: AcausalConfig, tensors: Vec<(String, Tensor)>) -> Result<Self> {
        config.validate()?;
        let (l, c, k) = (config.leads, config.hidden, config.kernel);
        let shapes: [Vec<usize>; 6] = [vec![c, l, k, k], vec![c], vec![c, c, k, k], vec![c], vec![l, c, 1, 1], vec![l]];
        if tensors.len() != NAMES.len() {
            return Err(Error::format(4, format!("acausal baseline expects {} tensors, got {}", NAMES.len(), tensors.len())));
        }
        let mut store = ParamStore::new();
        let mut ids = Vec::new();
        for (((name, t), want), expect) in tensors.into_iter().zip(&shapes).zip(NAMES) {
            if name != expect || t.shape() != want.as_slice() {
                return Err(Error::format(4, format!("tensor {name} {:?}, expected {expect} {want:?}", t.shape())));
            }
            let group = if name.starts_with("head") { GROUP_HEAD } else { GROUP_ENCODER };
            ids.push(store.insert(name, group, t));
        }
        Ok(Self {
            config,
            store,
            ids: ids.try_into().expect("six ids"),
        })
    }

    pub fn config(&self) -> &AcausalConfig {
        &self.config
    }
}

impl SequenceModel for AcausalModel {
    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn grid(&self) -> (usize, usize) {
        (self.config.lat, self.config.lon)
    }

    fn fixed_leads(&self) -> Option<usize> {
        Some(self.config.leads)
    }

    fn set_running_stats(&mut self, _stats: BatchNormStats) {}

    fn forward_batch(&self, tape: &mut Tape, inputs: &[Var], _mode: BnMode) -> Result<(Vec<Var>, Option<BatchNormStats>)> {
        let cfg = &self.config;
        let p: Vec<Var> = self.ids.iter().map(|id| tape.param(&self.store, *id)).collect();
        let wrap = cfg.lon_wrap;
        let mut outs = Vec::with_capacity(inputs.len());
        for &x in inputs {
            let s = tape.shape(x).to_vec();
            if s != [cfg.leads, cfg.lat, cfg.lon] {
                return Err(Error::dim(format!("input {s:?}, baseline expects [{}, {}, {}]", cfg.leads, cfg.lat, cfg.lon)));
            }
            let h = tape.conv2d(x, p[0], Some(p[1]), Padding::Same, wrap)?;
            let h = tape.tanh(h);
            let h = tape.conv2d(h, p[2], Some(p[3]), Padding::Same, wrap)?;
            let h = tape.tanh(h);
            let d = tape.conv2d(h, p[4], Some(p[5]), Padding::Same, wrap)?;
            let y = tape.add(x, d)?;
            if !tape.value(y).is_finite() {
                return Err(Error::Numeric("non-finite acausal baseline output".into()));
            }
            outs.push(y);
        }
        Ok((outs, None))
    }
}
