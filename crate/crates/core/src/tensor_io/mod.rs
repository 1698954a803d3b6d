//! Exchange format between the extractor and the engine.

mod blob;
mod grid;
mod manifest;

pub use blob::{read_blob, write_blob, DType, TensorBlob, TensorData, FORMAT_VERSION, MAGIC};
pub use grid::infer_grid;
pub use manifest::{
    load_manifest, AttentionRef, BBox, BlobRefs, DirectionClass, GradCamRef, GradTarget,
    LoadReport, Manifest, Provenance, SampleRecord, SampleTensors, CLASS_ORDER,
};
