//! Synthetic scenes and tensor stacks with known directional structure.

mod dataset;
mod scene;
mod stack;
mod suite;

pub use dataset::{
    blob_refs, generate_batch, generate_sample, generate_scenes, write_dataset, BatchSpec,
    SynthSample,
};
pub use scene::{
    fabricate_logits, family_field, generate_scene, reflect, FieldFamily, SynthSpec,
    BLOB_SPREAD_FRAC,
};
pub use stack::{attention_layout, generate_layer_stack, IG_STEPS};
pub use suite::{
    evaluate_synthetic, run_validation_suite, ValidationCheck, ValidationReport,
    CONTINUOUS_SPREAD_DEG,
};
