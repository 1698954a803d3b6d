use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    /// Mean of 0/1 indicators.
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 10_000,
            level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    /// Single observation: the interval collapses to the value.
    pub degenerate: bool,
}

fn statistic_of(stat: Statistic, values: &[f64]) -> f64 {
    match stat {
        Statistic::Mean | Statistic::Rate => values.iter().sum::<f64>() / values.len() as f64,
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap interval over `cfg.resamples` resamples drawn with
/// replacement. The interval is widened, if needed, to contain the point
/// estimate.
pub fn bootstrap_ci(values: &[f64], stat: Statistic, cfg: &BootstrapConfig) -> Result<ConfidenceInterval> {
    if values.is_empty() {
        return Err(Error::EmptyInput("bootstrap sample"));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) || cfg.resamples == 0 {
        return Err(Error::InvalidConfig(format!(
            "bootstrap level {} with {} resamples",
            cfg.level, cfg.resamples
        )));
    }
    let point = statistic_of(stat, values);
    if values.len() == 1 {
        return Ok(ConfidenceInterval {
            level: cfg.level,
            lower: point,
            upper: point,
            degenerate: true,
        });
    }
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stats = Vec::with_capacity(cfg.resamples);
    for _ in 0..cfg.resamples {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += values[rng.gen_range(0..n)];
        }
        stats.push(sum / n as f64);
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - cfg.level;
    let lower = quantile(&stats, alpha / 2.0).min(point);
    let upper = quantile(&stats, 1.0 - alpha / 2.0).max(point);
    Ok(ConfidenceInterval {
        level: cfg.level,
        lower,
        upper,
        degenerate: false,
    })
}
