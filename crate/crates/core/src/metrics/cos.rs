use serde::{Deserialize, Serialize};

use crate::tensor_io::DirectionClass;

/// `log softmax(logits)[gt]`, shifted by the max logit for stability.
pub fn log_softmax_gt(logits: &[f64; 4], gt: DirectionClass) -> f64 {
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + logits.iter().map(|z| (z - top).exp()).sum::<f64>().ln();
    logits[gt.index()] - lse
}

/// Occlusion outcome for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosTriple {
    /// Log-probability change after occluding the true-direction sector.
    pub delta_true: f64,
    /// Log-probability change after occluding the opposite sector.
    pub delta_opp: f64,
    pub cos: f64,
}

pub fn cos_score(logp_base: f64, logp_true_occluded: f64, logp_opp_occluded: f64) -> CosTriple {
    let delta_true = logp_true_occluded - logp_base;
    let delta_opp = logp_opp_occluded - logp_base;
    CosTriple {
        delta_true,
        delta_opp,
        cos: delta_opp - delta_true,
    }
}
