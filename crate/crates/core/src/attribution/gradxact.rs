use serde::{Deserialize, Serialize};

use super::contrast::{resolve_contrast, Contrast, TargetMode};
use super::field::{normalize_min_max, RelevanceField, Source};
use crate::error::{Error, Result};
use crate::tensor_io::{GradTarget, SampleRecord, SampleTensors, TensorBlob};

/// Default layer set: the last four layers before the output head.
pub const DEFAULT_LAYERS: [i32; 4] = [-2, -3, -4, -5];

/// Raw `|sum_d g * h|` per token. Both slices are `[tokens, dim]` row-major.
pub fn gradxact_scores(hidden: &[f64], grad: &[f64], dim: usize) -> Result<Vec<f64>> {
    if hidden.len() != grad.len() || dim == 0 || hidden.len() % dim != 0 {
        return Err(Error::ShapeMismatch(format!(
            "hidden has {} values, gradient {}, feature dim {dim}",
            hidden.len(),
            grad.len()
        )));
    }
    Ok(hidden
        .chunks_exact(dim)
        .zip(grad.chunks_exact(dim))
        .map(|(h, g)| h.iter().zip(g).map(|(a, b)| a * b).sum::<f64>().abs())
        .collect())
}

/// Grad x Act for one layer, min-max normalized.
pub fn gradxact_layer(
    hidden: &[f64],
    grad: &[f64],
    dim: usize,
    grid_h: usize,
    grid_w: usize,
    source: Source,
) -> Result<RelevanceField> {
    let raw = gradxact_scores(hidden, grad, dim)?;
    let (values, degenerate) = normalize_min_max(&raw);
    let mut field = RelevanceField::new(values, grid_h, grid_w, source)?;
    field.degenerate = degenerate;
    Ok(field)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub layers: Vec<i32>,
    pub weights: Vec<f64>,
}

/// Softmax of per-layer peak relevance.
pub fn layer_weights(fields: &[RelevanceField]) -> Vec<f64> {
    let peaks: Vec<f64> = fields.iter().map(RelevanceField::max).collect();
    let top = peaks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = peaks.iter().map(|p| (p - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Combines normalized per-layer fields with magnitude-softmax weights.
pub fn aggregate_layers(fields: &[RelevanceField]) -> Result<(RelevanceField, Vec<f64>)> {
    let first = fields.first().ok_or(Error::EmptyInput("no layers to aggregate"))?;
    if let Some(f) = fields
        .iter()
        .find(|f| f.grid_h != first.grid_h || f.grid_w != first.grid_w)
    {
        return Err(Error::ShapeMismatch(format!(
            "layer grids differ: {}x{} vs {}x{}",
            first.grid_h, first.grid_w, f.grid_h, f.grid_w
        )));
    }
    let weights = layer_weights(fields);
    let mut values = vec![0.0; first.len()];
    for (f, w) in fields.iter().zip(&weights) {
        for (acc, v) in values.iter_mut().zip(&f.values) {
            *acc += w * v;
        }
    }
    let mut out = RelevanceField::new(values, first.grid_h, first.grid_w, first.source)?;
    out.degenerate = fields.iter().all(|f| f.degenerate);
    Ok((out, weights))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CregOptions {
    pub mode: TargetMode,
    pub layers: Vec<i32>,
    /// Use the contrastive target; `false` falls back to the plain logit.
    pub contrastive: bool,
}

impl Default for CregOptions {
    fn default() -> Self {
        CregOptions {
            mode: TargetMode::Gt,
            layers: DEFAULT_LAYERS.to_vec(),
            contrastive: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CregOutput {
    pub field: RelevanceField,
    pub weights: LayerWeights,
    pub contrast: Contrast,
}

/// Gradient blob key for a mode. Extractors only need to store one of the two
/// mode variants when the prediction is correct, since they coincide.
pub fn gradient_key(mode: TargetMode, contrastive: bool) -> GradTarget {
    match (mode, contrastive) {
        (TargetMode::Gt, true) => GradTarget::ContrastiveGt,
        (TargetMode::Pred, true) => GradTarget::ContrastivePred,
        (TargetMode::Gt, false) => GradTarget::PlainGt,
        (TargetMode::Pred, false) => GradTarget::PlainPred,
    }
}

pub(crate) fn find_gradient<'a>(
    record: &SampleRecord,
    tensors: &'a SampleTensors,
    mode: TargetMode,
    contrastive: bool,
) -> Result<&'a TensorBlob> {
    let key = gradient_key(mode, contrastive);
    if let Some(t) = tensors.gradients.get(&key) {
        return Ok(t);
    }
    if record.is_correct() {
        let other = match mode {
            TargetMode::Gt => TargetMode::Pred,
            TargetMode::Pred => TargetMode::Gt,
        };
        if let Some(t) = tensors.gradients.get(&gradient_key(other, contrastive)) {
            return Ok(t);
        }
    }
    Err(Error::MissingInput {
        sample_id: record.sample_id.clone(),
        what: format!("gradient blob {}", key.name()),
    })
}

/// `[L, V, d]` tensor sliced to one stored layer.
pub(crate) fn layer_slice<'a>(
    values: &'a [f64],
    dims: &[usize],
    stored_layers: &[i32],
    layer: i32,
) -> Result<&'a [f64]> {
    let idx = stored_layers
        .iter()
        .position(|&l| l == layer)
        .ok_or(Error::UnknownLayer(layer))?;
    if dims.len() != 3 || idx >= dims[0] {
        return Err(Error::ShapeMismatch(format!(
            "expected [L, V, d] with layer slot {idx}, got {dims:?}"
        )));
    }
    let n = dims[1] * dims[2];
    Ok(&values[idx * n..(idx + 1) * n])
}

/// Multi-layer contrastive Grad x Act relevance for one sample.
pub fn creg_relevance(
    record: &SampleRecord,
    tensors: &SampleTensors,
    stored_layers: &[i32],
    opts: &CregOptions,
) -> Result<CregOutput> {
    if opts.layers.is_empty() {
        return Err(Error::EmptyInput("layer set"));
    }
    let logits: [f64; 4] = record.logits.as_slice().try_into().map_err(|_| Error::LogitsLength {
        sample_id: record.sample_id.clone(),
        found: record.logits.len(),
    })?;
    let contrast = resolve_contrast(&logits, opts.mode, record.gt_class);
    let hidden = tensors.hidden.as_ref().ok_or_else(|| Error::MissingInput {
        sample_id: record.sample_id.clone(),
        what: "hidden states".into(),
    })?;
    let grad = find_gradient(record, tensors, opts.mode, opts.contrastive)?;
    let (gh, gw) = record.grid()?;
    let dims = hidden.dims();
    if grad.dims() != dims {
        return Err(Error::ShapeMismatch(format!(
            "gradient {:?} vs hidden {:?}",
            grad.shape(),
            hidden.shape()
        )));
    }
    let h = hidden.to_f64_vec();
    let g = grad.to_f64_vec();
    let fields = opts
        .layers
        .iter()
        .map(|&l| {
            let hs = layer_slice(&h, &dims, stored_layers, l)?;
            let gs = layer_slice(&g, &dims, stored_layers, l)?;
            gradxact_layer(hs, gs, dims[2], gh, gw, Source::Creg)
        })
        .collect::<Result<Vec<_>>>()?;
    let (field, weights) = aggregate_layers(&fields)?;
    Ok(CregOutput {
        field,
        weights: LayerWeights {
            layers: opts.layers.clone(),
            weights,
        },
        contrast,
    })
}
