use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamStore, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moments per parameter plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store.iter().map(|(_, p)| vec![0.0; p.value.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }
}

/// Names of groups in `store` that are not in `frozen`, checking every
/// frozen name exists.
pub fn trainable_mask(store: &ParamStore, frozen: &[String]) -> Result<Vec<bool>> {
    let groups = store.groups();
    if let Some(bad) = frozen.iter().find(|g| !groups.contains(&g.as_str())) {
        return Err(Error::config(format!("unknown parameter group {bad:?}; known: {groups:?}")));
    }
    Ok(store.iter().map(|(_, p)| !frozen.contains(&p.group)).collect())
}

/// One bias-corrected Adam update. Parameters with `trainable[i] == false`
/// and their moments are left untouched.
pub fn adam_step(store: &mut ParamStore, grads: &[Tensor], state: &mut AdamState, config: &AdamConfig, trainable: &[bool]) -> Result<()> {
    if grads.len() != store.len() || state.m.len() != store.len() || trainable.len() != store.len() {
        return Err(Error::contract(format!(
            "{} gradients / {} moment slots / {} mask entries for {} parameters",
            grads.len(),
            state.m.len(),
            trainable.len(),
            store.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for (k, id) in ids.into_iter().enumerate() {
        if !trainable[k] {
            continue;
        }
        let g = grads[k].data();
        if g.len() != store.value(id).len() {
            return Err(Error::contract(format!("gradient for {} has the wrong size", store.get(id).name)));
        }
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        store.apply_update(id, |p| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= config.learning_rate * mh / (vh.sqrt() + config.epsilon);
            }
        });
    }
    Ok(())
}
