//! Sector occlusion masks and the counterfactual score built from them.

mod mask;
mod plan;

pub use mask::{
    build_sector_mask, pixel_sector, OcclusionConfig, RadialExtent, SectorMask, FILL_RGB,
};
pub use plan::{
    build_plan, cos_table, emit_plan, evaluate_cos, mask_file_name, CosRow, CosTable,
    OcclusionPlan, OcclusionResponse, OcclusionResponses, PlanManifest, PlanStatus,
    PlannedSample,
};
