//! One sample through attribution, compass binning and scoring.

use serde::{Deserialize, Serialize};

use crate::attribution::{
    baseline_geometry_oracle, baseline_random, baseline_single_layer, creg_relevance,
    gradient_key, sample_gradcam, sample_gradnorm, sample_ig, sample_rollout, CregOptions,
    LayerWeights, RelevanceField, Source, TargetMode, DEFAULT_LAYERS, PENULTIMATE_LAYER,
};
use crate::error::{Error, Result};
use crate::metrics::SampleMetrics;
use crate::polar::{
    build_grid_geometry, center_distance, compass_bin, true_direction, CompassDistribution,
    PolarConfig,
};
use crate::tensor_io::{GradTarget, SampleRecord, SampleTensors};

/// A fully specified attribution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    /// Row label in reports.
    pub label: String,
    pub source: Source,
    pub mode: TargetMode,
    pub layers: Vec<i32>,
    pub contrastive: bool,
    pub polar: PolarConfig,
    /// Master seed for stochastic sources.
    pub seed: u64,
}

impl MethodSpec {
    pub fn new(source: Source) -> Self {
        MethodSpec {
            label: source.name().to_string(),
            source,
            mode: TargetMode::Gt,
            layers: DEFAULT_LAYERS.to_vec(),
            contrastive: true,
            polar: PolarConfig::default(),
            seed: 0,
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn creg_options(&self) -> CregOptions {
        CregOptions {
            mode: self.mode,
            layers: self.layers.clone(),
            contrastive: self.contrastive,
        }
    }
}

/// The default method and its three single-switch ablations: four sectors,
/// one layer, and the plain (non-contrastive) target.
pub fn ablation_specs(base: &MethodSpec) -> Vec<MethodSpec> {
    let mut k4 = base.clone().labeled(format!("{}_k4", base.label));
    k4.polar.k = 4;
    let mut single = base.clone().labeled(format!("{}_single_layer", base.label));
    single.layers = vec![PENULTIMATE_LAYER];
    let mut plain = base.clone().labeled(format!("{}_no_contrast", base.label));
    plain.contrastive = false;
    vec![base.clone(), k4, single, plain]
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed keyed by sample id, so results do not depend on the
/// order samples are listed in.
pub fn sample_seed(master: u64, sample_id: &str) -> u64 {
    // FNV-1a over the id bytes
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in sample_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(master ^ mix64(h))
}

/// Blob names a sample lacks for `method`, checked without reading tensors.
pub fn missing_inputs(record: &SampleRecord, method: &MethodSpec) -> Vec<String> {
    let b = &record.blobs;
    let mut missing = Vec::new();
    let has_grad = |target: GradTarget| b.gradients.contains_key(&target);
    let gradient = |mode: TargetMode, contrastive: bool| -> Option<String> {
        let key = gradient_key(mode, contrastive);
        let other = match mode {
            TargetMode::Gt => TargetMode::Pred,
            TargetMode::Pred => TargetMode::Gt,
        };
        let ok = has_grad(key) || (record.is_correct() && has_grad(gradient_key(other, contrastive)));
        (!ok).then(|| format!("gradients.{}", key.name()))
    };
    match method.source {
        Source::Creg => {
            if b.hidden.is_none() {
                missing.push("hidden".into());
            }
            missing.extend(gradient(method.mode, method.contrastive));
        }
        Source::SingleLayer => {
            if b.hidden.is_none() {
                missing.push("hidden".into());
            }
            missing.extend(gradient(TargetMode::Gt, false));
        }
        Source::Gradnorm => missing.extend(gradient(TargetMode::Gt, false)),
        Source::Ig => {
            if b.hidden.is_none() {
                missing.push("hidden".into());
            }
            if b.ig_step_grads.is_none() {
                missing.push("ig_step_grads".into());
            }
        }
        Source::Rollout => {
            if b.attention.is_none() {
                missing.push("attention".into());
            }
        }
        Source::Gradcam => {
            if b.gradcam.is_none() {
                missing.push("gradcam".into());
            }
        }
        Source::Random | Source::Oracle => {}
    }
    missing
}

/// Fails on the first sample lacking an input `method` needs.
pub fn check_inputs<'a>(
    records: impl IntoIterator<Item = &'a SampleRecord>,
    method: &MethodSpec,
) -> Result<()> {
    for r in records {
        let missing = missing_inputs(r, method);
        if !missing.is_empty() {
            return Err(Error::MissingInput {
                sample_id: r.sample_id.clone(),
                what: format!("{} for method {}", missing.join(", "), method.label),
            });
        }
    }
    Ok(())
}

/// Whether `method` reads any tensor at all.
pub fn needs_tensors(method: &MethodSpec) -> bool {
    !matches!(method.source, Source::Random | Source::Oracle)
}

/// Relevance field for one sample, with layer weights when the method
/// aggregates layers.
pub fn relevance(
    record: &SampleRecord,
    tensors: &SampleTensors,
    stored_layers: &[i32],
    method: &MethodSpec,
) -> Result<(RelevanceField, Option<LayerWeights>)> {
    let field = match method.source {
        Source::Creg => {
            let out = creg_relevance(record, tensors, stored_layers, &method.creg_options())?;
            return Ok((out.field, Some(out.weights)));
        }
        Source::SingleLayer => baseline_single_layer(record, tensors, stored_layers)?,
        Source::Gradnorm => sample_gradnorm(record, tensors, stored_layers)?,
        Source::Ig => sample_ig(record, tensors, stored_layers)?,
        Source::Rollout => sample_rollout(record, tensors)?,
        Source::Gradcam => sample_gradcam(record, tensors)?,
        Source::Random => {
            let (gh, gw) = record.grid()?;
            baseline_random(gh, gw, sample_seed(method.seed, &record.sample_id))
        }
        Source::Oracle => baseline_geometry_oracle(record)?,
    };
    Ok((field, None))
}

/// Everything computed for one sample under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample_id: String,
    pub method: String,
    pub compass: CompassDistribution,
    pub true_angle_deg: f64,
    pub metrics: SampleMetrics,
    /// The relevance field itself was constant.
    pub field_degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer_weights: Option<LayerWeights>,
}

/// Compass of an already computed field around the sample's reference.
pub fn compass_for(
    record: &SampleRecord,
    field: &RelevanceField,
    cfg: &PolarConfig,
) -> Result<CompassDistribution> {
    let geom = build_grid_geometry(
        field.grid_h,
        field.grid_w,
        f64::from(record.image_w),
        f64::from(record.image_h),
        record.ref_box.center(),
    )?;
    compass_bin(field, &geom, center_distance(&record.ref_box, &record.tgt_box), cfg)
}

pub fn evaluate_sample(
    record: &SampleRecord,
    tensors: &SampleTensors,
    stored_layers: &[i32],
    method: &MethodSpec,
) -> Result<SampleResult> {
    let true_angle = true_direction(&record.ref_box, &record.tgt_box)?;
    let (field, layer_weights) = relevance(record, tensors, stored_layers, method)?;
    let compass = compass_for(record, &field, &method.polar)?;
    let metrics = SampleMetrics::new(
        record.sample_id.clone(),
        compass.peak_angle_deg,
        true_angle,
        record.predicted_class(),
        record.gt_class,
        compass.degenerate,
    );
    Ok(SampleResult {
        sample_id: record.sample_id.clone(),
        method: method.label.clone(),
        compass,
        true_angle_deg: true_angle,
        metrics,
        field_degenerate: field.degenerate,
        layer_weights,
    })
}
