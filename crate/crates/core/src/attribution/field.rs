use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which signal produced a relevance field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Creg,
    Gradcam,
    Gradnorm,
    Ig,
    Rollout,
    SingleLayer,
    Random,
    Oracle,
}

impl Source {
    pub const ALL: [Source; 8] = [
        Source::Creg,
        Source::Gradcam,
        Source::Gradnorm,
        Source::Ig,
        Source::Rollout,
        Source::SingleLayer,
        Source::Random,
        Source::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Source::Creg => "creg",
            Source::Gradcam => "gradcam",
            Source::Gradnorm => "gradnorm",
            Source::Ig => "ig",
            Source::Rollout => "rollout",
            Source::SingleLayer => "single_layer",
            Source::Random => "random",
            Source::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

/// Per-vision-token nonnegative relevance laid out on the token grid in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceField {
    pub values: Vec<f64>,
    pub grid_h: usize,
    pub grid_w: usize,
    pub source: Source,
    /// Set when the field carries no usable signal (all zero or constant).
    pub degenerate: bool,
}

impl RelevanceField {
    pub fn new(values: Vec<f64>, grid_h: usize, grid_w: usize, source: Source) -> Result<Self> {
        if values.len() != grid_h * grid_w {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {grid_h}x{grid_w} grid",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "relevance must be finite and nonnegative, found {v}"
            )));
        }
        Ok(RelevanceField {
            values,
            grid_h,
            grid_w,
            source,
            degenerate: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.grid_w + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Horizontal mirror: column `v` moves to `grid_w - 1 - v`.
    pub fn mirrored(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.values.chunks(self.grid_w) {
            values.extend(row.iter().rev());
        }
        RelevanceField {
            values,
            ..self.clone()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RelevanceField {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Min-max normalization into `[0, 1]`.
///
/// A constant field (including all zeros) has no spatial contrast, so it maps
/// to all zeros and the second return value is `true`.
pub fn normalize_min_max(values: &[f64]) -> (Vec<f64>, bool) {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if values.is_empty() || !(hi > lo) {
        return (vec![0.0; values.len()], true);
    }
    let span = hi - lo;
    (values.iter().map(|&v| (v - lo) / span).collect(), false)
}

/// Division by the maximum, for maps that already have a natural zero.
pub fn normalize_max(values: &[f64]) -> (Vec<f64>, bool) {
    let hi = values.iter().copied().fold(0.0, f64::max);
    if !(hi > 0.0) {
        return (vec![0.0; values.len()], true);
    }
    (values.iter().map(|&v| v / hi).collect(), false)
}
