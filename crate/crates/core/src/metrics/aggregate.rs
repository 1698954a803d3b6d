use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::angular::{dae, ea};
use super::bootstrap::{bootstrap_ci, BootstrapConfig, ConfidenceInterval, Statistic};
use super::cos::CosTriple;
use crate::error::{Error, Result};
use crate::tensor_io::DirectionClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub sample_id: String,
    pub dae: f64,
    pub ea: bool,
    pub predicted: DirectionClass,
    pub gt: DirectionClass,
    pub correct: bool,
    pub degenerate: bool,
}

impl SampleMetrics {
    pub fn new(
        sample_id: impl Into<String>,
        peak_deg: f64,
        true_deg: f64,
        predicted: DirectionClass,
        gt: DirectionClass,
        degenerate: bool,
    ) -> Self {
        let d = dae(peak_deg, true_deg);
        SampleMetrics {
            sample_id: sample_id.into(),
            dae: d,
            ea: ea(d),
            predicted,
            gt,
            correct: predicted == gt,
            degenerate,
        }
    }
}

/// DAE and EA over a set of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub dae_mean: f64,
    pub dae_ci: ConfidenceInterval,
    pub ea_rate: f64,
    pub ea_ci: ConfidenceInterval,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosSummary {
    pub n: usize,
    pub delta_true_mean: f64,
    pub delta_opp_mean: f64,
    pub cos_mean: f64,
}

impl CosSummary {
    pub fn from_triples(triples: &[CosTriple]) -> Option<Self> {
        if triples.is_empty() {
            return None;
        }
        let n = triples.len() as f64;
        let mean = |f: fn(&CosTriple) -> f64| triples.iter().map(f).sum::<f64>() / n;
        Some(CosSummary {
            n: triples.len(),
            delta_true_mean: mean(|t| t.delta_true),
            delta_opp_mean: mean(|t| t.delta_opp),
            cos_mean: mean(|t| t.cos),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateOptions {
    pub bootstrap: BootstrapConfig,
    /// Drop samples whose compass fell back to uniform.
    pub exclude_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub overall: Summary,
    pub per_class: BTreeMap<DirectionClass, Summary>,
    pub correct: Option<Summary>,
    pub incorrect: Option<Summary>,
    /// Degenerate samples seen in the input, whether or not excluded.
    pub degenerate_total: usize,
    pub excluded: usize,
    pub cos: Option<CosSummary>,
}

fn summarize(samples: &[&SampleMetrics], cfg: &BootstrapConfig) -> Result<Option<Summary>> {
    if samples.is_empty() {
        return Ok(None);
    }
    let daes: Vec<f64> = samples.iter().map(|s| s.dae).collect();
    let eas: Vec<f64> = samples.iter().map(|s| if s.ea { 1.0 } else { 0.0 }).collect();
    let n = samples.len() as f64;
    Ok(Some(Summary {
        n: samples.len(),
        dae_mean: daes.iter().sum::<f64>() / n,
        dae_ci: bootstrap_ci(&daes, Statistic::Mean, cfg)?,
        ea_rate: eas.iter().sum::<f64>() / n,
        ea_ci: bootstrap_ci(&eas, Statistic::Rate, cfg)?,
        degenerate: samples.iter().filter(|s| s.degenerate).count(),
    }))
}

/// Overall, per-class (by ground truth) and correct/incorrect summaries.
///
/// Samples are ordered by id before resampling so the report does not depend
/// on input order.
pub fn aggregate(
    samples: &[SampleMetrics],
    cos: Option<&[CosTriple]>,
    opts: &AggregateOptions,
) -> Result<AggregateReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no samples to aggregate"));
    }
    let mut sorted: Vec<&SampleMetrics> = samples.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let degenerate_total = sorted.iter().filter(|s| s.degenerate).count();
    if opts.exclude_degenerate {
        sorted.retain(|s| !s.degenerate);
    }
    let excluded = samples.len() - sorted.len();
    let cfg = &opts.bootstrap;
    let overall = summarize(&sorted, cfg)?
        .ok_or(Error::EmptyInput("every sample was degenerate and excluded"))?;
    let mut per_class = BTreeMap::new();
    for class in DirectionClass::ALL {
        let subset: Vec<_> = sorted.iter().copied().filter(|s| s.gt == class).collect();
        if let Some(s) = summarize(&subset, cfg)? {
            per_class.insert(class, s);
        }
    }
    let (right, wrong): (Vec<&SampleMetrics>, Vec<&SampleMetrics>) =
        sorted.iter().copied().partition(|s| s.correct);
    Ok(AggregateReport {
        overall,
        per_class,
        correct: summarize(&right, cfg)?,
        incorrect: summarize(&wrong, cfg)?,
        degenerate_total,
        excluded,
        cos: cos.and_then(CosSummary::from_triples),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use DirectionClass::*;

    fn opts() -> AggregateOptions {
        AggregateOptions {
            bootstrap: BootstrapConfig { resamples: 500, ..Default::default() },
            exclude_degenerate: false,
        }
    }

    #[test]
    fn perfect_samples() {
        let s: Vec<_> = (0..6)
            .map(|i| SampleMetrics::new(format!("s{i}"), 90.0, 90.0, Above, Above, false))
            .collect();
        let r = aggregate(&s, None, &opts()).unwrap();
        assert_eq!(r.overall.dae_mean, 0.0);
        assert_eq!(r.overall.ea_rate, 1.0);
        assert_eq!(r.per_class[&Above].ea_rate, 1.0);
        assert!(r.incorrect.is_none());
        assert_eq!(r.correct.as_ref().unwrap().n, 6);
    }

    #[test]
    fn one_peak_per_sector() {
        // |{0,45,90,135,180,135,90,45}| / 8 = 90
        let s: Vec<_> = (0..8)
            .map(|i| SampleMetrics::new(format!("s{i}"), i as f64 * 45.0, 0.0, Right, Right, false))
            .collect();
        let r = aggregate(&s, None, &opts()).unwrap();
        assert_eq!(r.overall.dae_mean, 90.0);
        // EA counts 0, 45 and 315 (dae 45 inclusive)
        assert_eq!(r.overall.ea_rate, 3.0 / 8.0);
    }

    #[test]
    fn splits_partition_the_samples() {
        let s = vec![
            SampleMetrics::new("a", 0.0, 0.0, Right, Right, false),
            SampleMetrics::new("b", 0.0, 180.0, Right, Left, false),
            SampleMetrics::new("c", 90.0, 90.0, Above, Above, true),
            SampleMetrics::new("d", 45.0, 270.0, Above, Below, false),
        ];
        let r = aggregate(&s, None, &opts()).unwrap();
        assert_eq!(r.correct.as_ref().unwrap().n + r.incorrect.as_ref().unwrap().n, 4);
        assert_eq!(r.per_class.values().map(|c| c.n).sum::<usize>(), 4);
        assert_eq!(r.degenerate_total, 1);

        let mut o = opts();
        o.exclude_degenerate = true;
        let r = aggregate(&s, None, &o).unwrap();
        assert_eq!(r.overall.n, 3);
        assert_eq!(r.excluded, 1);
    }

    #[test]
    fn order_does_not_matter() {
        let mut s: Vec<_> = (0..20)
            .map(|i| SampleMetrics::new(format!("s{i:02}"), (i * 37 % 8) as f64 * 45.0, 10.0, Right, Right, false))
            .collect();
        let a = aggregate(&s, None, &opts()).unwrap();
        s.reverse();
        s.swap(3, 11);
        let b = aggregate(&s, None, &opts()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ci_brackets_point_estimates() {
        let s: Vec<_> = (0..40)
            .map(|i| SampleMetrics::new(format!("s{i}"), (i % 8) as f64 * 45.0, 20.0, Right, Right, false))
            .collect();
        let r = aggregate(&s, None, &opts()).unwrap();
        let o = &r.overall;
        assert!(o.dae_ci.lower <= o.dae_mean && o.dae_mean <= o.dae_ci.upper);
        assert!(o.ea_ci.lower <= o.ea_rate && o.ea_rate <= o.ea_ci.upper);
    }

    #[test]
    fn cos_summary() {
        let s = vec![SampleMetrics::new("a", 0.0, 0.0, Right, Right, false)];
        let t = [
            super::super::cos::cos_score(0.0, -0.5, -0.1),
            super::super::cos::cos_score(0.0, -0.3, -0.1),
        ];
        let r = aggregate(&s, Some(&t), &opts()).unwrap();
        let c = r.cos.unwrap();
        assert_eq!(c.n, 2);
        assert!((c.cos_mean - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(aggregate(&[], None, &opts()).unwrap_err().code(), "empty_input");
    }
}
