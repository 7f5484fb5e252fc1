use serde::{Deserialize, Serialize};

use super::handle::CorrectorHandle;
use crate::error::{Error, Result};
use crate::grid::ForecastCase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Causal,
    Acausal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub model_id: String,
    pub causal_claim: bool,
    /// 1-based lead that was perturbed.
    pub lead: usize,
    pub epsilon: f64,
    /// Max absolute output change per lead, index 0 is lead 1.
    pub max_abs_delta: Vec<f64>,
    pub verdict: Verdict,
}

/// Shifts the lead-`k` forecast by `epsilon` and reports how much every
/// output lead moves. CAUSAL iff all leads before `k` are unchanged
/// exactly.
pub fn perturb_probe(handle: &CorrectorHandle, case: &ForecastCase, k: usize, epsilon: f64) -> Result<ProbeReport> {
    let leads = case.leads();
    if k == 0 || k > leads {
        return Err(Error::contract(format!("probe lead {k} outside 1..={leads}")));
    }
    if epsilon == 0.0 {
        return Err(Error::contract("probe magnitude must be nonzero"));
    }
    let base = handle.apply(case)?;
    let n = case.grid_len();
    let mut shifted = case.forecast.clone();
    shifted[(k - 1) * n..k * n].iter_mut().for_each(|v| *v += epsilon);
    let out = handle.apply(&case.with_forecast(shifted)?)?;
    let max_abs_delta: Vec<f64> = (0..leads)
        .map(|t| {
            base[t * n..(t + 1) * n]
                .iter()
                .zip(&out[t * n..(t + 1) * n])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let verdict = if max_abs_delta[..k - 1].iter().all(|d| *d == 0.0) {
        Verdict::Causal
    } else {
        Verdict::Acausal
    };
    Ok(ProbeReport {
        model_id: handle.model_id.clone(),
        causal_claim: handle.causal_claim,
        lead: k,
        epsilon,
        max_abs_delta,
        verdict,
    })
}

/// Probes every lead `2..=L` with every magnitude in `epsilons`.
pub fn probe_sweep(handle: &CorrectorHandle, case: &ForecastCase, epsilons: &[f64]) -> Result<Vec<ProbeReport>> {
    let mut out = Vec::new();
    for k in 1..=case.leads() {
        for &e in epsilons {
            out.push(perturb_probe(handle, case, k, e)?);
        }
    }
    Ok(out)
}
