use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{param_count, ReSAConfig};
use super::layers::{attention_tape, cell_tape, AttentionParams, AttentionVars, CellParams, CellVars};
use super::sequence::SequenceModel;
use crate::autodiff::{BatchNormStats, BnMode, ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};

pub const GROUP_CONVLSTM: &str = "convlstm";
pub const GROUP_ATTENTION: &str = "attention";
pub const GROUP_BATCHNORM: &str = "batchnorm";
pub const GROUP_HEAD: &str = "head";

/// Initial forget-gate bias.
pub const FORGET_BIAS: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
struct LayerIds {
    weight: ParamId,
    bias: ParamId,
}

#[derive(Clone, Debug, PartialEq)]
struct AttentionIds {
    wq: ParamId,
    bq: ParamId,
    wk: ParamId,
    bk: ParamId,
    wv: ParamId,
    bv: ParamId,
    gamma: ParamId,
}

/// Stacked ConvLSTM corrector with optional per-lead self-attention,
/// batchnorm and residual output head.
#[derive(Clone, Debug, PartialEq)]
pub struct ReSAModel {
    config: ReSAConfig,
    store: ParamStore,
    bn: BatchNormStats,
    layers: Vec<LayerIds>,
    attention: Option<AttentionIds>,
    batchnorm: Option<(ParamId, ParamId)>,
    head: (ParamId, ParamId),
}

pub(crate) fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Tensor::from_fn(shape, |_| rng.gen_range(-bound..bound))
}

impl ReSAModel {
    /// Fresh model: uniform `±1/√fan_in` kernels, forget bias 1, attention
    /// scale 0 and, with a residual head, a zero head so the model starts
    /// as the identity.
    pub fn new(config: ReSAConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let k = config.kernel;
        let mut layers = Vec::new();
        let mut cin = config.in_channels;
        for (l, &ch) in config.hidden.iter().enumerate() {
            let weight = uniform(&mut rng, &[4 * ch, cin + ch, k, k], (cin + ch) * k * k);
            let bias = Tensor::from_fn(&[4 * ch], |i| if (ch..2 * ch).contains(&i) { FORGET_BIAS } else { 0.0 });
            layers.push(LayerIds {
                weight: store.insert(format!("convlstm.{l}.weight"), GROUP_CONVLSTM, weight),
                bias: store.insert(format!("convlstm.{l}.bias"), GROUP_CONVLSTM, bias),
            });
            cin = ch;
        }
        let c = config.feature_channels();
        let attention = config.attention.then(|| {
            let d = config.attention_width();
            let mut add = |name: &str, t: Tensor| store.insert(format!("attention.{name}"), GROUP_ATTENTION, t);
            AttentionIds {
                wq: add("query.weight", uniform(&mut rng, &[d, c, 1, 1], c)),
                bq: add("query.bias", Tensor::zeros(&[d])),
                wk: add("key.weight", uniform(&mut rng, &[d, c, 1, 1], c)),
                bk: add("key.bias", Tensor::zeros(&[d])),
                wv: add("value.weight", uniform(&mut rng, &[c, c, 1, 1], c)),
                bv: add("value.bias", Tensor::zeros(&[c])),
                gamma: add("gamma", Tensor::zeros(&[1])),
            }
        });
        let batchnorm = config.batchnorm.then(|| {
            (
                store.insert("batchnorm.gamma", GROUP_BATCHNORM, Tensor::full(&[c], 1.0)),
                store.insert("batchnorm.beta", GROUP_BATCHNORM, Tensor::zeros(&[c])),
            )
        });
        let out = config.out_channels;
        let head_w = if config.residual {
            Tensor::zeros(&[out, c, 1, 1])
        } else {
            uniform(&mut rng, &[out, c, 1, 1], c)
        };
        let head = (
            store.insert("head.weight", GROUP_HEAD, head_w),
            store.insert("head.bias", GROUP_HEAD, Tensor::zeros(&[out])),
        );
        debug_assert_eq!(store.scalar_count(), param_count(&config));
        Ok(Self {
            bn: BatchNormStats::new(c),
            config,
            store,
            layers,
            attention,
            batchnorm,
            head,
        })
    }

    pub fn config(&self) -> &ReSAConfig {
        &self.config
    }

    pub fn running_stats(&self) -> &BatchNormStats {
        &self.bn
    }

    pub fn param_count(&self) -> usize {
        self.store.scalar_count()
    }

    pub fn cell_params(&self, layer: usize) -> CellParams {
        let ids = &self.layers[layer];
        CellParams {
            weight: self.store.value(ids.weight).clone(),
            bias: self.store.value(ids.bias).clone(),
        }
    }

    pub fn attention_params(&self) -> Option<AttentionParams> {
        let a = self.attention.as_ref()?;
        let v = |id| self.store.value(id).clone();
        Some(AttentionParams {
            query_weight: v(a.wq),
            query_bias: v(a.bq),
            key_weight: v(a.wk),
            key_bias: v(a.bk),
            value_weight: v(a.wv),
            value_bias: v(a.bv),
            gamma: v(a.gamma),
        })
    }

    /// Corrected sequence for one normalized `[L, lat, lon]` input
    /// (inference mode, running batchnorm statistics).
    pub fn forward(&self, z: &Tensor) -> Result<Tensor> {
        let s = z.shape();
        if s.len() != 3 {
            return Err(Error::dim(format!("forward expects [L, lat, lon], got {s:?}")));
        }
        let out = self.predict(z.data())?;
        Tensor::new(s.to_vec(), out)
    }

    fn check_finite(tape: &Tape, v: Var, lead: usize, stage: &str) -> Result<()> {
        if tape.value(v).is_finite() {
            Ok(())
        } else {
            Err(Error::Numeric(format!("non-finite {stage} activation at lead {lead}")))
        }
    }
}

impl SequenceModel for ReSAModel {
    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn grid(&self) -> (usize, usize) {
        (self.config.lat, self.config.lon)
    }

    fn set_running_stats(&mut self, stats: BatchNormStats) {
        self.bn = stats;
    }

    fn forward_batch(&self, tape: &mut Tape, inputs: &[Var], mode: BnMode) -> Result<(Vec<Var>, Option<BatchNormStats>)> {
        let cfg = &self.config;
        let (lat, lon) = (cfg.lat, cfg.lon);
        let (cin, cout) = (cfg.in_channels, cfg.out_channels);
        let wrap = cfg.lon_wrap;
        let store = &self.store;
        let layers: Vec<CellVars> = self
            .layers
            .iter()
            .map(|ids| CellVars {
                weight: tape.param(store, ids.weight),
                bias: tape.param(store, ids.bias),
            })
            .collect();
        let attn = self.attention.as_ref().map(|a| AttentionVars {
            wq: tape.param(store, a.wq),
            bq: tape.param(store, a.bq),
            wk: tape.param(store, a.wk),
            bk: tape.param(store, a.bk),
            wv: tape.param(store, a.wv),
            bv: tape.param(store, a.bv),
            gamma: tape.param(store, a.gamma),
        });
        let bn_vars = self.batchnorm.map(|(g, b)| (tape.param(store, g), tape.param(store, b)));
        let (hw, hb) = (tape.param(store, self.head.0), tape.param(store, self.head.1));
        let cap = cfg.attention_cap;

        let mut leads = Vec::with_capacity(inputs.len());
        let mut xs = Vec::new();
        let mut feats = Vec::new();
        for &input in inputs {
            let s = tape.shape(input).to_vec();
            if s.len() != 3 || s[1] != lat || s[2] != lon || s[0] == 0 || !s[0].is_multiple_of(cin) {
                return Err(Error::dim(format!("input {s:?} is not [L·{cin}, {lat}, {lon}]")));
            }
            let l = s[0] / cin;
            leads.push(l);
            let mut state: Vec<(Var, Var)> = cfg
                .hidden
                .iter()
                .map(|&ch| {
                    let z = tape.leaf(Tensor::zeros(&[ch, lat, lon]));
                    (z, z)
                })
                .collect();
            for t in 0..l {
                let x = tape.narrow(input, t * cin, cin)?;
                let mut cur = x;
                for (p, st) in layers.iter().zip(state.iter_mut()) {
                    let (h, c) = cell_tape(tape, cur, st.0, st.1, p, wrap)?;
                    *st = (h, c);
                    cur = h;
                }
                Self::check_finite(tape, cur, t + 1, "convlstm")?;
                if let (Some(a), false) = (&attn, cfg.bn_before_attention) {
                    cur = attention_tape(tape, cur, a, cap)?.0;
                    Self::check_finite(tape, cur, t + 1, "attention")?;
                }
                xs.push(x);
                feats.push(cur);
            }
        }

        let c = cfg.feature_channels();
        let mut new_stats = None;
        if let Some((g, b)) = bn_vars {
            let total = feats.len();
            let stacked = tape.concat(&feats)?;
            let stacked = tape.reshape(stacked, &[total, c, lat, lon])?;
            let mut stats = self.bn.clone();
            let normed = tape.batchnorm(stacked, g, b, &mut stats, mode)?;
            let normed = tape.reshape(normed, &[total * c, lat, lon])?;
            for (k, f) in feats.iter_mut().enumerate() {
                *f = tape.narrow(normed, k * c, c)?;
            }
            if mode == BnMode::Train {
                new_stats = Some(stats);
            }
        }

        let mut outputs = Vec::with_capacity(inputs.len());
        let mut k = 0;
        for &l in &leads {
            let mut per_lead = Vec::with_capacity(l);
            for t in 0..l {
                let mut f = feats[k];
                if let (Some(a), true) = (&attn, cfg.bn_before_attention) {
                    f = attention_tape(tape, f, a, cap)?.0;
                }
                let mut y = tape.conv2d(f, hw, Some(hb), crate::autodiff::Padding::Same, false)?;
                if cfg.residual {
                    y = tape.add(xs[k], y)?;
                }
                Self::check_finite(tape, y, t + 1, "output")?;
                per_lead.push(y);
                k += 1;
            }
            outputs.push(if per_lead.len() == 1 { per_lead[0] } else { tape.concat(&per_lead)? });
            debug_assert_eq!(tape.shape(*outputs.last().expect("output"))[0], l * cout);
        }
        Ok((outputs, new_stats))
    }
}

impl ReSAModel {
    /// Reassembles a model from named tensors, e.g. from a checkpoint.
    pub fn from_parts(config: ReSAConfig, tensors: Vec<(String, Tensor)>, stats: BatchNormStats) -> Result<Self> {
        let mut model = Self::new(config, 0)?;
        let expected = param_count(&model.config);
        let got: usize = tensors.iter().map(|(_, t)| t.len()).sum();
        if got != expected || tensors.len() != model.store.len() {
            return Err(Error::contract(format!(
                "{} tensors with {got} scalars do not match the {expected} parameters of the config",
                tensors.len()
            )));
        }
        for (name, t) in tensors {
            let id = model
                .store
                .find(&name)
                .ok_or_else(|| Error::contract(format!("unknown parameter {name}")))?;
            model.store.set(id, t)?;
        }
        if stats.mean.len() != model.config.feature_channels() || stats.var.len() != stats.mean.len() {
            return Err(Error::contract("batchnorm statistics do not match feature channels"));
        }
        model.bn = stats;
        Ok(model)
    }
}
