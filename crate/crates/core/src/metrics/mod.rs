//! Directional faithfulness metrics and their aggregation.

mod aggregate;
mod angular;
mod bootstrap;
mod correlation;
mod cos;

pub use aggregate::{
    aggregate, AggregateOptions, AggregateReport, CosSummary, SampleMetrics, Summary,
};
pub use angular::{dae, ea, expected_random_dae, EDGE_TOLERANCE_DEG};
pub use bootstrap::{bootstrap_ci, BootstrapConfig, ConfidenceInterval, Statistic};
pub use correlation::{flip_correlation, mean_correlation, pearson};
pub use cos::{cos_score, log_softmax_gt, CosTriple};
