//! Reference relevance signals that share the compass post-processing with
//! the multi-layer method and differ only in the per-token scores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::contrast::TargetMode;
use super::field::{normalize_max, normalize_min_max, RelevanceField, Source};
use super::gradxact::{find_gradient, gradxact_layer, layer_slice};
use super::interp::bilinear_resize;
use crate::error::{Error, Result};
use crate::polar::cell_center;
use crate::tensor_io::{SampleRecord, SampleTensors, TensorBlob};

/// Layer used by the single-layer, gradient-norm and IG baselines.
pub const PENULTIMATE_LAYER: i32 = -2;

/// Row sums of head-averaged attention must be within this of one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

fn field_from_raw(raw: &[f64], grid_h: usize, grid_w: usize, source: Source) -> Result<RelevanceField> {
    let (values, degenerate) = normalize_min_max(raw);
    let mut f = RelevanceField::new(values, grid_h, grid_w, source)?;
    f.degenerate = degenerate;
    Ok(f)
}

/// I.i.d. uniform `[0, 1)` relevance from a seeded generator.
pub fn baseline_random(grid_h: usize, grid_w: usize, seed: u64) -> RelevanceField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid_h * grid_w).map(|_| rng.gen::<f64>()).collect();
    RelevanceField::new(values, grid_h, grid_w, Source::Random).expect("uniform values are valid")
}

/// Per-token L2 norm of the gradient, `grad` is `[V, d]`.
pub fn gradnorm_scores(grad: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || grad.len() % dim != 0 {
        return Err(Error::ShapeMismatch(format!("{} values with dim {dim}", grad.len())));
    }
    Ok(grad
        .chunks_exact(dim)
        .map(|row| row.iter().map(|g| g * g).sum::<f64>().sqrt())
        .collect())
}

pub fn baseline_gradnorm(grad: &[f64], dim: usize, grid_h: usize, grid_w: usize) -> Result<RelevanceField> {
    field_from_raw(&gradnorm_scores(grad, dim)?, grid_h, grid_w, Source::Gradnorm)
}

/// Integrated gradients from a zero baseline: with a straight path the step
/// increment is `h / S`, so each token scores `|sum_d h * mean_s g_s|`.
/// `step_grads` is `[S, V, d]`.
pub fn ig_scores(hidden: &[f64], step_grads: &[f64], steps: usize, dim: usize) -> Result<Vec<f64>> {
    let n = hidden.len();
    if steps == 0 {
        return Err(Error::EmptyInput("integrated-gradient steps"));
    }
    if dim == 0 || n % dim != 0 || step_grads.len() != steps * n {
        return Err(Error::ShapeMismatch(format!(
            "hidden {n} values, {steps} steps of {} values",
            step_grads.len() / steps.max(1)
        )));
    }
    let mut mean = vec![0.0; n];
    for step in step_grads.chunks_exact(n) {
        for (m, g) in mean.iter_mut().zip(step) {
            *m += g;
        }
    }
    let inv = 1.0 / steps as f64;
    Ok(hidden
        .chunks_exact(dim)
        .zip(mean.chunks_exact(dim))
        .map(|(h, g)| (h.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * inv).abs())
        .collect())
}

pub fn baseline_ig(
    hidden: &[f64],
    step_grads: &[f64],
    steps: usize,
    dim: usize,
    grid_h: usize,
    grid_w: usize,
) -> Result<RelevanceField> {
    field_from_raw(&ig_scores(hidden, step_grads, steps, dim)?, grid_h, grid_w, Source::Ig)
}

/// Head-averaged, residual-mixed, row-renormalized attention for each layer.
fn mixed_layers(attn: &TensorBlob) -> Result<(Vec<Vec<f64>>, usize)> {
    let d = attn.dims();
    if d.len() != 4 || d[2] != d[3] || d[0] == 0 || d[1] == 0 {
        return Err(Error::ShapeMismatch(format!("attention must be [L, H, T, T], got {d:?}")));
    }
    let (layers, heads, t) = (d[0], d[1], d[2]);
    let values = attn.to_f64_vec();
    let mut out = Vec::with_capacity(layers);
    for l in 0..layers {
        let mut a = vec![0.0; t * t];
        for h in 0..heads {
            let off = (l * heads + h) * t * t;
            for (acc, v) in a.iter_mut().zip(&values[off..off + t * t]) {
                *acc += v;
            }
        }
        let inv = 1.0 / heads as f64;
        a.iter_mut().for_each(|v| *v *= inv);
        for row in 0..t {
            let sum: f64 = a[row * t..(row + 1) * t].iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::MalformedAttention { layer: l, row, sum });
            }
        }
        for row in 0..t {
            let r = &mut a[row * t..(row + 1) * t];
            r.iter_mut().for_each(|v| *v *= 0.5);
            r[row] += 0.5;
            let sum: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= sum);
        }
        out.push(a);
    }
    Ok((out, t))
}

/// Row `last_token` of the rollout product `A_L ... A_1`, propagated as a row
/// vector so the full product is never formed.
pub fn rollout_row(attn: &TensorBlob, last_token: usize) -> Result<Vec<f64>> {
    let (layers, t) = mixed_layers(attn)?;
    if last_token >= t {
        return Err(Error::ShapeMismatch(format!("last token {last_token} out of {t}")));
    }
    let mut row = vec![0.0; t];
    row[last_token] = 1.0;
    for a in layers.iter().rev() {
        let mut next = vec![0.0; t];
        for (k, &rk) in row.iter().enumerate() {
            if rk == 0.0 {
                continue;
            }
            for (n, v) in next.iter_mut().zip(&a[k * t..(k + 1) * t]) {
                *n += rk * v;
            }
        }
        row = next;
    }
    Ok(row)
}

pub fn baseline_rollout(
    attn: &TensorBlob,
    vision: std::ops::Range<usize>,
    last_token: usize,
    grid_h: usize,
    grid_w: usize,
) -> Result<RelevanceField> {
    let row = rollout_row(attn, last_token)?;
    if vision.end > row.len() || vision.start >= vision.end {
        return Err(Error::ShapeMismatch(format!(
            "vision range {vision:?} outside {} tokens",
            row.len()
        )));
    }
    field_from_raw(&row[vision], grid_h, grid_w, Source::Rollout)
}

/// Rectified channel-weighted activation map at encoder resolution.
pub fn gradcam_map(act: &TensorBlob, grad: &TensorBlob) -> Result<(Vec<f64>, usize, usize)> {
    let d = act.dims();
    if d.len() != 3 || act.shape() != grad.shape() {
        return Err(Error::ShapeMismatch(format!(
            "gradcam tensors must share [C, H, W], got {:?} and {:?}",
            act.shape(),
            grad.shape()
        )));
    }
    let (c, h, w) = (d[0], d[1], d[2]);
    let hw = h * w;
    let a = act.to_f64_vec();
    let g = grad.to_f64_vec();
    let mut map = vec![0.0; hw];
    for ch in 0..c {
        let gs = &g[ch * hw..(ch + 1) * hw];
        let alpha = gs.iter().sum::<f64>() / hw as f64;
        for (m, v) in map.iter_mut().zip(&a[ch * hw..(ch + 1) * hw]) {
            *m += alpha * v;
        }
    }
    map.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok((map, h, w))
}

/// GradCAM upsampled to the token grid. The rectified map already has a
/// natural zero, so it is scaled by its maximum rather than min-max.
pub fn baseline_gradcam(
    act: &TensorBlob,
    grad: &TensorBlob,
    grid_h: usize,
    grid_w: usize,
) -> Result<RelevanceField> {
    let (map, h, w) = gradcam_map(act, grad)?;
    let up = bilinear_resize(&map, h, w, grid_h, grid_w);
    let (values, degenerate) = normalize_max(&up);
    let mut f = RelevanceField::new(values, grid_h, grid_w, Source::Gradcam)?;
    f.degenerate = degenerate;
    Ok(f)
}

/// Grad x Act at layer -2 against the plain ground-truth logit.
pub fn baseline_single_layer(
    record: &SampleRecord,
    tensors: &SampleTensors,
    stored_layers: &[i32],
) -> Result<RelevanceField> {
    let (hidden, grad) = penultimate_inputs(record, tensors)?;
    let dims = hidden.dims();
    let h = hidden.to_f64_vec();
    let g = grad.to_f64_vec();
    let hs = layer_slice(&h, &dims, stored_layers, PENULTIMATE_LAYER)?;
    let gs = layer_slice(&g, &dims, stored_layers, PENULTIMATE_LAYER)?;
    let (gh, gw) = record.grid()?;
    gradxact_layer(hs, gs, dims[2], gh, gw, Source::SingleLayer)
}

fn penultimate_inputs<'a>(
    record: &SampleRecord,
    tensors: &'a SampleTensors,
) -> Result<(&'a TensorBlob, &'a TensorBlob)> {
    let hidden = tensors.hidden.as_ref().ok_or_else(|| Error::MissingInput {
        sample_id: record.sample_id.clone(),
        what: "hidden states".into(),
    })?;
    let grad = find_gradient(record, tensors, TargetMode::Gt, false)?;
    Ok((hidden, grad))
}

/// Gradient-norm baseline read from a sample's plain ground-truth gradients.
pub fn sample_gradnorm(
    record: &SampleRecord,
    tensors: &SampleTensors,
    stored_layers: &[i32],
) -> Result<RelevanceField> {
    let grad = find_gradient(record, tensors, TargetMode::Gt, false)?;
    let dims = grad.dims();
    let g = grad.to_f64_vec();
    let gs = layer_slice(&g, &dims, stored_layers, PENULTIMATE_LAYER)?;
    let (gh, gw) = record.grid()?;
    baseline_gradnorm(gs, dims[2], gh, gw)
}

pub fn sample_ig(
    record: &SampleRecord,
    tensors: &SampleTensors,
    stored_layers: &[i32],
) -> Result<RelevanceField> {
    let hidden = tensors.hidden.as_ref().ok_or_else(|| Error::MissingInput {
        sample_id: record.sample_id.clone(),
        what: "hidden states".into(),
    })?;
    let steps = tensors.ig_step_grads.as_ref().ok_or_else(|| Error::MissingInput {
        sample_id: record.sample_id.clone(),
        what: "integrated-gradient step gradients".into(),
    })?;
    let dims = hidden.dims();
    let h = hidden.to_f64_vec();
    let hs = layer_slice(&h, &dims, stored_layers, PENULTIMATE_LAYER)?;
    let sd = steps.dims();
    let (gh, gw) = record.grid()?;
    baseline_ig(hs, &steps.to_f64_vec(), sd[0], dims[2], gh, gw)
}

pub fn sample_rollout(record: &SampleRecord, tensors: &SampleTensors) -> Result<RelevanceField> {
    let missing = || Error::MissingInput {
        sample_id: record.sample_id.clone(),
        what: "attention stack".into(),
    };
    let aref = record.blobs.attention.as_ref().ok_or_else(missing)?;
    let attn = tensors.attention.as_ref().ok_or_else(missing)?;
    let (gh, gw) = record.grid()?;
    baseline_rollout(attn, aref.vision_start..aref.vision_end, aref.last_token, gh, gw)
}

pub fn sample_gradcam(record: &SampleRecord, tensors: &SampleTensors) -> Result<RelevanceField> {
    let missing = || Error::MissingInput {
        sample_id: record.sample_id.clone(),
        what: "gradcam activations and gradients".into(),
    };
    let act = tensors.gradcam_act.as_ref().ok_or_else(missing)?;
    let grad = tensors.gradcam_grad.as_ref().ok_or_else(missing)?;
    let (gh, gw) = record.grid()?;
    baseline_gradcam(act, grad, gh, gw)
}

/// Ceiling signal: ones on grid cells whose pixel center lies in the target
/// box. When the box falls between cell centers the nearest cell is used.
pub fn baseline_geometry_oracle(record: &SampleRecord) -> Result<RelevanceField> {
    let (gh, gw) = record.grid()?;
    let (iw, ih) = (f64::from(record.image_w), f64::from(record.image_h));
    let b = record.tgt_box;
    let mut values = vec![0.0; gh * gw];
    let mut any = false;
    for u in 0..gh {
        for v in 0..gw {
            let (x, y) = cell_center(u, v, gh, gw, iw, ih);
            if b.contains(x, y) {
                values[u * gw + v] = 1.0;
                any = true;
            }
        }
    }
    if !any {
        let (bx, by) = b.center();
        let mut best = (f64::INFINITY, 0);
        for u in 0..gh {
            for v in 0..gw {
                let (x, y) = cell_center(u, v, gh, gw, iw, ih);
                let d = (x - bx).powi(2) + (y - by).powi(2);
                if d < best.0 {
                    best = (d, u * gw + v);
                }
            }
        }
        values[best.1] = 1.0;
    }
    RelevanceField::new(values, gh, gw, Source::Oracle)
}
