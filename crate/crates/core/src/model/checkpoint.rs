//! Parameter containers.
//!
//! Layout (little-endian): 4-byte magic, metadata as a `u32`-length-prefixed
//! JSON document, `u32` tensor count, then per tensor its name, `u32` rank,
//! `u32` dims and `f64` values in store order, a `u32` flag followed (if 1)
//! by batchnorm statistics (`u32` channels, mean, var, momentum, eps), and a
//! CRC-32 of every byte after the magic.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{param_count, ReSAConfig};
use super::resa::ReSAModel;
use super::sequence::SequenceModel;
use crate::autodiff::{BatchNormStats, ParamStore, Tensor};
use crate::binio::{Reader, Writer};
use crate::climnorm::NormSpec;
use crate::error::{Error, Result};

pub const RESA_MAGIC: &[u8; 4] = b"RESA";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingRecord {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub frozen_groups: Vec<String>,
    pub loss_curve: Vec<LossPoint>,
}

/// Everything besides parameters that travels with a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    pub variable: String,
    pub normalization: NormSpec,
    pub training: TrainingRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResaHeader {
    config: ReSAConfig,
    meta: ModelMeta,
}

/// A trained ReSA corrector with its normalization and training history.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub model: ReSAModel,
    pub meta: ModelMeta,
}

pub(crate) struct Container {
    pub header: String,
    pub tensors: Vec<(String, Tensor)>,
    pub stats: Option<BatchNormStats>,
}

pub(crate) fn encode_container(magic: &[u8; 4], header: &str, store: &ParamStore, stats: Option<&BatchNormStats>) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(magic);
    w.str(header);
    w.u32(store.len() as u32);
    for (_, p) in store.iter() {
        w.str(&p.name);
        w.u32(p.value.rank() as u32);
        for d in p.value.shape() {
            w.u32(*d as u32);
        }
        w.f64s(p.value.data());
    }
    match stats {
        Some(s) => {
            w.u32(1);
            w.u32(s.mean.len() as u32);
            w.f64s(&s.mean);
            w.f64s(&s.var);
            w.f64s(&[s.momentum, s.eps]);
        }
        None => w.u32(0),
    }
    w.finish_with_crc(magic.len())
}

pub(crate) fn decode_container(magic: &[u8; 4], bytes: &[u8]) -> Result<Container> {
    let mut r = Reader::new(bytes);
    r.magic(magic)?;
    let header = r.str("metadata")?;
    let count = r.u32("tensor count")? as usize;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name = r.str("tensor name")?;
        let rank = r.u32("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(r.u32("tensor dim")? as usize);
        }
        let at = r.offset();
        let n = shape
            .iter()
            .try_fold(1usize, |a, d| a.checked_mul(*d))
            .ok_or_else(|| Error::format(at, "tensor size overflows"))?;
        let data = r.f64s(n, &name)?;
        tensors.push((name, Tensor::new(shape, data).map_err(|e| Error::format(at, e))?));
    }
    let stats = match r.u32("stats flag")? {
        0 => None,
        1 => {
            let c = r.u32("stats channels")? as usize;
            let mean = r.f64s(c, "running mean")?;
            let var = r.f64s(c, "running var")?;
            let me = r.f64s(2, "momentum/eps")?;
            Some(BatchNormStats {
                mean,
                var,
                momentum: me[0],
                eps: me[1],
            })
        }
        f => return Err(Error::format(r.offset() - 4, format!("bad stats flag {f}"))),
    };
    r.finish_with_crc(magic.len())?;
    Ok(Container { header, tensors, stats })
}

impl ModelState {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_string(&ResaHeader {
            config: self.model.config().clone(),
            meta: self.meta.clone(),
        })?;
        Ok(encode_container(RESA_MAGIC, &header, self.model.store(), Some(self.model.running_stats())))
    }

    /// Decodes and validates the parameter count against the config.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let c = decode_container(RESA_MAGIC, bytes)?;
        let header: ResaHeader =
            serde_json::from_str(&c.header).map_err(|e| Error::format(4, format!("checkpoint metadata: {e}")))?;
        let scalars: usize = c.tensors.iter().map(|(_, t)| t.len()).sum();
        let expected = param_count(&header.config);
        if scalars != expected {
            return Err(Error::format(
                4,
                format!("checkpoint holds {scalars} parameters, config implies {expected}"),
            ));
        }
        let stats = c
            .stats
            .ok_or_else(|| Error::format(4, "checkpoint lacks batchnorm statistics"))?;
        let model = ReSAModel::from_parts(header.config, c.tensors, stats)?;
        Ok(Self { model, meta: header.meta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}
