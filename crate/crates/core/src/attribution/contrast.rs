use serde::{Deserialize, Serialize};

use crate::tensor_io::DirectionClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// Explain the ground-truth class.
    Gt,
    /// Explain the model's predicted class.
    Pred,
}

impl TargetMode {
    pub fn name(self) -> &'static str {
        match self {
            TargetMode::Gt => "gt",
            TargetMode::Pred => "pred",
        }
    }
}

impl std::str::FromStr for TargetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gt" => Ok(TargetMode::Gt),
            "pred" => Ok(TargetMode::Pred),
            _ => Err(format!("unknown target mode {s:?} (expected gt or pred)")),
        }
    }
}

/// The logit pair whose difference is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contrast {
    pub target: DirectionClass,
    pub negative: DirectionClass,
    pub predicted: DirectionClass,
    /// An exact tie decided the predicted or competing class.
    pub tie: bool,
}

/// Chooses the targeted class and its strongest competitor.
///
/// The competitor is the predicted class when it differs from the target,
/// otherwise the runner-up. Exact ties fall to the lowest class index.
pub fn resolve_contrast(logits: &[f64; 4], mode: TargetMode, gt: DirectionClass) -> Contrast {
    let mut order = [0usize, 1, 2, 3];
    // stable: equal logits keep ascending index order
    order.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]));
    let predicted = DirectionClass::from_index(order[0]).unwrap();
    let runner_up = DirectionClass::from_index(order[1]).unwrap();
    let argmax_tie = logits[order[0]] == logits[order[1]];
    let second_tie = logits[order[1]] == logits[order[2]];

    let target = match mode {
        TargetMode::Gt => gt,
        TargetMode::Pred => predicted,
    };
    let (negative, tie) = if predicted != target {
        (predicted, argmax_tie)
    } else {
        (runner_up, argmax_tie || second_tie)
    };
    Contrast {
        target,
        negative,
        predicted,
        tie,
    }
}
