use std::collections::BTreeMap;

use rand::Rng;

use super::scene::{family_field, reflect, rng_for, FieldFamily, SynthSpec};
use crate::attribution::PENULTIMATE_LAYER;
use crate::error::{Error, Result};
use crate::tensor_io::{GradTarget, SampleRecord, SampleTensors, TensorBlob};

/// Integrated-gradient steps written per sample.
pub const IG_STEPS: usize = 4;
const ATTN_LAYERS: usize = 2;
const ATTN_HEADS: usize = 2;

// feature slots in the hidden vector
const GT_SIGNAL: usize = 0;
const PRED_SIGNAL: usize = 1;
const GT_DISTRACTOR: usize = 2;
const PRED_DISTRACTOR: usize = 3;

struct ModeFields {
    /// Per stored layer.
    signal: Vec<Vec<f64>>,
    distractor: Vec<f64>,
}

fn mode_fields(spec: &SynthSpec, point: (f64, f64), noise: &[Vec<f64>], stream: u64) -> ModeFields {
    let mut rng = rng_for(spec, stream);
    let target = family_field(spec, spec.family, point, &mut rng);
    let signal = spec
        .layers
        .iter()
        .zip(noise)
        .map(|(l, eps)| {
            let base = spec.signal_layers.contains(l);
            target
                .iter()
                .zip(eps)
                .map(|(t, e)| if base { t + e } else { *e })
                .collect()
        })
        .collect();
    let mut unused = rng_for(spec, stream);
    let distractor = family_field(spec, FieldFamily::GaussianBlobAtB, reflect(spec, point), &mut unused);
    ModeFields { signal, distractor }
}

/// Hidden, gradient, attention, IG and GradCAM tensors whose Grad x Act
/// relevance reproduces the spec's field family.
///
/// Each token's hidden vector holds `sqrt` of the ground-truth and predicted
/// signals and of their distractors in separate slots. A gradient selects a
/// slot by carrying the matching `sqrt`, so `|g . h|` equals the target field.
/// Plain-logit gradients also pick up the distractor slot scaled by
/// `shared_distractor`; contrastive ones do not. When the prediction is
/// correct both modes share the ground-truth slots, as real gradients would.
pub fn generate_layer_stack(spec: &SynthSpec, record: &SampleRecord) -> Result<SampleTensors> {
    spec.validate()?;
    let (gh, gw) = (spec.grid_h, spec.grid_w);
    let v = gh * gw;
    let d = spec.hidden_dim;
    let n_layers = spec.layers.len();

    let mut noise_rng = rng_for(spec, 1);
    let noise: Vec<Vec<f64>> = (0..n_layers)
        .map(|_| (0..v).map(|_| spec.noise * noise_rng.gen::<f64>()).collect())
        .collect();
    let gt = mode_fields(spec, spec.point_towards(spec.direction), &noise, 2);
    let correct = record.is_correct();
    let pred = if correct {
        None
    } else {
        Some(mode_fields(spec, spec.point_towards(record.predicted_class()), &noise, 3))
    };

    let w = spec.shared_distractor;
    let mut hidden = vec![0.0f32; n_layers * v * d];
    let mut grads: BTreeMap<GradTarget, Vec<f32>> = [
        GradTarget::PlainGt,
        GradTarget::ContrastiveGt,
        GradTarget::PlainPred,
        GradTarget::ContrastivePred,
    ]
    .into_iter()
    .map(|t| (t, vec![0.0f32; n_layers * v * d]))
    .collect();

    for l in 0..n_layers {
        for tok in 0..v {
            let at = |slot: usize| (l * v + tok) * d + slot;
            let s_gt = gt.signal[l][tok].sqrt();
            let b_gt = gt.distractor[tok].sqrt();
            hidden[at(GT_SIGNAL)] = s_gt as f32;
            hidden[at(GT_DISTRACTOR)] = b_gt as f32;
            let (sig_slot, dis_slot, s_p, b_p) = match &pred {
                None => (GT_SIGNAL, GT_DISTRACTOR, s_gt, b_gt),
                Some(p) => {
                    let s = p.signal[l][tok].sqrt();
                    let b = p.distractor[tok].sqrt();
                    hidden[at(PRED_SIGNAL)] = s as f32;
                    hidden[at(PRED_DISTRACTOR)] = b as f32;
                    (PRED_SIGNAL, PRED_DISTRACTOR, s, b)
                }
            };
            let g = grads.get_mut(&GradTarget::ContrastiveGt).unwrap();
            g[at(GT_SIGNAL)] = s_gt as f32;
            let g = grads.get_mut(&GradTarget::PlainGt).unwrap();
            g[at(GT_SIGNAL)] = s_gt as f32;
            g[at(GT_DISTRACTOR)] = (w * b_gt) as f32;
            let g = grads.get_mut(&GradTarget::ContrastivePred).unwrap();
            g[at(sig_slot)] = s_p as f32;
            let g = grads.get_mut(&GradTarget::PlainPred).unwrap();
            g[at(sig_slot)] = s_p as f32;
            g[at(dis_slot)] = (w * b_p) as f32;
        }
    }

    let shape = [n_layers, v, d];
    let mut gradients = BTreeMap::new();
    for (t, values) in &grads {
        gradients.insert(*t, TensorBlob::from_f32(&shape, values.clone())?);
    }

    // IG steps: the plain ground-truth gradient at the penultimate layer, so
    // IG reduces to the plain Grad x Act there.
    let li = spec
        .layers
        .iter()
        .position(|&l| l == PENULTIMATE_LAYER)
        .unwrap_or(0);
    let plain = &grads[&GradTarget::PlainGt][li * v * d..(li + 1) * v * d];
    let ig: Vec<f32> = (0..IG_STEPS).flat_map(|_| plain.iter().copied()).collect();

    // plain ground-truth saliency drives attention and GradCAM
    let sal: Vec<f64> = (0..v)
        .map(|t| gt.signal[li][t] + w * gt.distractor[t])
        .collect();

    Ok(SampleTensors {
        hidden: Some(TensorBlob::from_f32(&shape, hidden)?),
        gradients,
        attention: Some(attention_stack(&sal)?),
        ig_step_grads: Some(TensorBlob::from_f32(&[IG_STEPS, v, d], ig)?),
        gradcam_act: Some(TensorBlob::from_f64(&[2, gh, gw], [sal.clone(), vec![0.5; v]].concat())?),
        gradcam_grad: Some(TensorBlob::from_f64(&[2, gh, gw], [vec![1.0; v], vec![0.0; v]].concat())?),
        occlusion_logits: None,
    })
}

/// Token layout of synthetic attention: one prefix token, the vision tokens,
/// then the answer token.
pub fn attention_layout(vision_tokens: usize) -> (usize, usize, usize) {
    (1, 1 + vision_tokens, 1 + vision_tokens)
}

/// `[2, 2, T, T]` stack where every token attends to itself except the last,
/// which spreads attention over the vision tokens in proportion to `sal` in
/// head 0 and uniformly over all tokens in head 1.
fn attention_stack(sal: &[f64]) -> Result<TensorBlob> {
    let v = sal.len();
    let t = v + 2;
    let total: f64 = sal.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidConfig("synthetic saliency has no mass".into()));
    }
    let mut a = vec![0.0; ATTN_LAYERS * ATTN_HEADS * t * t];
    for l in 0..ATTN_LAYERS {
        for h in 0..ATTN_HEADS {
            let off = (l * ATTN_HEADS + h) * t * t;
            for r in 0..t - 1 {
                a[off + r * t + r] = 1.0;
            }
            let last = off + (t - 1) * t;
            if h == 0 {
                a[last] = 0.1;
                for (j, s) in sal.iter().enumerate() {
                    a[last + 1 + j] = 0.9 * s / total;
                }
            } else {
                for j in 0..t {
                    a[last + j] = 1.0 / t as f64;
                }
            }
        }
    }
    TensorBlob::from_f64(&[ATTN_LAYERS, ATTN_HEADS, t, t], a)
}
