//! Directional attribution for spatial relations in vision-language models.
//!
//! Loads extracted tensors, builds relevance fields, projects them onto a
//! polar compass around the reference object and scores the result.

pub mod attribution;
pub mod error;
pub mod metrics;
pub mod occlusion;
pub mod pipeline;
pub mod polar;
pub mod synth;
pub mod tensor_io;

pub use error::{Error, Result};
