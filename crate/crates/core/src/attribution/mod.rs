//! Per-token relevance signals.

mod baselines;
mod contrast;
mod field;
mod gradxact;
mod interp;

pub use baselines::{
    baseline_geometry_oracle, baseline_gradcam, baseline_gradnorm, baseline_ig, baseline_random,
    baseline_rollout, baseline_single_layer, gradcam_map, gradnorm_scores, ig_scores, rollout_row,
    sample_gradcam, sample_gradnorm, sample_ig, sample_rollout, PENULTIMATE_LAYER,
    ROW_SUM_TOLERANCE,
};
pub use contrast::{resolve_contrast, Contrast, TargetMode};
pub use field::{normalize_max, normalize_min_max, RelevanceField, Source};
pub use gradxact::{
    aggregate_layers, creg_relevance, gradient_key, gradxact_layer, gradxact_scores,
    layer_weights, CregOptions, CregOutput, LayerWeights, DEFAULT_LAYERS,
};
pub use interp::bilinear_resize;
