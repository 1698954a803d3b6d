use crate::error::Result;
use crate::polar::{flip_compass, CompassDistribution};

/// Pearson correlation, or `None` when either vector has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "paired vectors");
    if a.is_empty() {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation between a distribution and the mirrored-back distribution of
/// the flipped input.
pub fn flip_correlation(
    original: &CompassDistribution,
    flipped_run: &CompassDistribution,
) -> Result<Option<f64>> {
    let back = flip_compass(flipped_run)?;
    Ok(pearson(&original.probs, &back.probs))
}

/// Mean over defined correlations and the number of undefined ones skipped.
pub fn mean_correlation(values: &[Option<f64>]) -> (Option<f64>, usize) {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    let skipped = values.len() - defined.len();
    if defined.is_empty() {
        return (None, skipped);
    }
    (Some(defined.iter().sum::<f64>() / defined.len() as f64), skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_correlate_exactly() {
        let a = [0.1, 0.4, 0.2, 0.3];
        assert_eq!(pearson(&a, &a), Some(1.0));
        let neg = a.map(|x| 1.0 - x);
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_undefined() {
        let orig = CompassDistribution::from_probs(vec![0.5, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05], false);
        assert_eq!(flip_correlation(&orig, &CompassDistribution::uniform(8)).unwrap(), None);
    }

    #[test]
    fn mirrored_run_correlates_perfectly() {
        let orig = CompassDistribution::from_probs(vec![0.5, 0.2, 0.1, 0.1, 0.05, 0.0, 0.0, 0.05], false);
        let flipped = flip_compass(&orig).unwrap();
        assert_eq!(flip_correlation(&orig, &flipped).unwrap(), Some(1.0));
    }

    #[test]
    fn mean_skips_undefined() {
        assert_eq!(mean_correlation(&[Some(1.0), None, Some(0.0)]), (Some(0.5), 1));
        assert_eq!(mean_correlation(&[None]), (None, 1));
    }
}
