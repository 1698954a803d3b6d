use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report. Variants map one-to-one onto the
/// error codes surfaced by the CLI, so callers can match on them directly.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // tensor blobs
    #[error("bad magic in {path}: expected CREGTNSR")]
    BadMagic { path: PathBuf },
    #[error("unsupported blob version {version} in {path}")]
    UnsupportedVersion { path: PathBuf, version: u32 },
    #[error("unsupported dtype code {code} in {path}")]
    UnsupportedDtype { path: PathBuf, code: u32 },
    #[error("truncated blob {path}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
    #[error("blob {path} has {extra} bytes after the payload")]
    TrailingBytes { path: PathBuf, extra: u64 },
    #[error("non-finite value at flat index {index} in {path}")]
    NonFinite { path: PathBuf, index: usize },
    #[error("shape {shape:?} implies {expected} values but {found} were supplied")]
    ShapeDataMismatch {
        shape: Vec<u64>,
        expected: u64,
        found: usize,
    },

    // manifest
    #[error("malformed manifest {path}: {message}")]
    ManifestSyntax { path: PathBuf, message: String },
    #[error("duplicate sample_id {0:?}")]
    DuplicateSampleId(String),
    #[error("sample {sample_id}: blob {blob} does not resolve ({path})")]
    DanglingBlobRef {
        sample_id: String,
        blob: String,
        path: PathBuf,
    },
    #[error("sample {sample_id}: logits must have exactly 4 entries, found {found}")]
    LogitsLength { sample_id: String, found: usize },
    #[error("sample {sample_id}: grid {grid_h}x{grid_w} does not match {tokens} vision tokens in {blob}")]
    GridMismatch {
        sample_id: String,
        grid_h: usize,
        grid_w: usize,
        tokens: usize,
        blob: String,
    },
    #[error("sample {sample_id}: {message}")]
    InvalidSample { sample_id: String, message: String },
    #[error("sample {sample_id}: box {which} is empty after clamping to the image")]
    EmptyBox { sample_id: String, which: &'static str },

    // attribution
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("sample {sample_id}: missing {what}")]
    MissingInput { sample_id: String, what: String },
    #[error("malformed attention at layer {layer}, row {row}: row sum {sum}")]
    MalformedAttention { layer: usize, row: usize, sum: f64 },
    #[error("layer {0} is not present in the stored layer list")]
    UnknownLayer(i32),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    // geometry
    #[error("reference center ({x}, {y}) lies outside the {w}x{h} image")]
    CenterOutsideImage { x: f64, y: f64, w: f64, h: f64 },
    #[error("reference and target centers coincide")]
    CoincidentCenters,
    #[error("invalid polar configuration: {0}")]
    InvalidConfig(String),
    #[error("sector index {index} out of range for K={k}")]
    SectorOutOfRange { index: usize, k: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable short code for reports and exit diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::BadMagic { .. } => "bad_magic",
            Error::UnsupportedVersion { .. } => "unsupported_version",
            Error::UnsupportedDtype { .. } => "unsupported_dtype",
            Error::Truncated { .. } => "truncated_payload",
            Error::TrailingBytes { .. } => "trailing_bytes",
            Error::NonFinite { .. } => "non_finite",
            Error::ShapeDataMismatch { .. } => "shape_data_mismatch",
            Error::ManifestSyntax { .. } => "manifest_syntax",
            Error::DuplicateSampleId(_) => "duplicate_sample_id",
            Error::DanglingBlobRef { .. } => "dangling_blob_ref",
            Error::LogitsLength { .. } => "logits_length",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::InvalidSample { .. } => "invalid_sample",
            Error::EmptyBox { .. } => "empty_box",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::MissingInput { .. } => "missing_input",
            Error::MalformedAttention { .. } => "malformed_attention",
            Error::UnknownLayer(_) => "unknown_layer",
            Error::EmptyInput(_) => "empty_input",
            Error::CenterOutsideImage { .. } => "center_outside_image",
            Error::CoincidentCenters => "coincident_centers",
            Error::InvalidConfig(_) => "invalid_config",
            Error::SectorOutOfRange { .. } => "sector_out_of_range",
        }
    }
}
